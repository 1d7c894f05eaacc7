use thiserror::Error;

/// Errors raised by the simulator and the analytics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("photon index {0} is invalid (expected 1 or 2)")]
    InvalidPhoton(u8),
    #[error("state is not normalized (squared norm {0})")]
    Unnormalized(f64),
    #[error("state has {found} photons, expected at least {needed}")]
    PhotonCount { found: usize, needed: usize },
    #[error("protocol needs at least 3 parties, got {0}")]
    TooFewParties(usize),
    #[error("{0} parties not supported here (3 or 4)")]
    UnsupportedParties(usize),
    #[error("segment layout mismatch: {0}")]
    SegmentMismatch(String),
    #[error("no sifted rounds available")]
    NoSiftedRounds,
    #[error("record list is empty")]
    EmptyRecords,
    #[error("expected {expected} distinct collaborators out of {parties} parties, got {got:?}")]
    Collaborators {
        expected: usize,
        parties: usize,
        got: Vec<usize>,
    },
    #[error("e_x + e_y = {0} exceeds 1/2")]
    ValidityRegion(f64),
    #[error("end-to-end error {0} exceeds 1/2")]
    ErrorAboveHalf(f64),
    #[error("total error rate undefined: zero coincidence and zero dark-count probability")]
    DegenerateDenominator,
    #[error("no sign change of {what} in [{lo}, {hi}]")]
    NoSignChange {
        what: &'static str,
        lo: f64,
        hi: f64,
    },
    #[error("matrix is not Hermitian (deviation {0})")]
    NotHermitian(f64),
    #[error("worker pool: {0}")]
    WorkerPool(String),
    #[error("empty grid")]
    EmptyGrid,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    range: &'static str,
) -> Result<f64> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(value)
    } else {
        Err(Error::OutOfRange { name, value, range })
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    check_range(name, value, 0.0, 1.0, "[0, 1]")
}
