//! Two-photon polarization algebra.
//!
//! Amplitudes are ordered `(HH, HV, VH, VV)`; photon 1 is the left factor of
//! every tensor product. The four Bell states used as the data bus are
//!
//! ```text
//! ψ± = (|HV⟩ ± |VH⟩)/√2        φ± = (|HV⟩ ± i|VH⟩)/√2
//! ```
//!
//! Every Bell state is `|HV⟩ + e^{iθ}|VH⟩` with `θ = kπ/2`, and the encoding
//! operators are diagonal, so the label dynamics reduce to addition of the
//! phase index `k` modulo 4. [`BellLabel::phase_index`] exposes that index;
//! [`transition_on`] is the group action and is tested against the matrices.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Tolerance used for normalization checks.
pub const NORM_TOL: f64 = 1e-9;
/// Tolerance used by phase-insensitive state comparison.
pub const PHASE_TOL: f64 = 1e-9;

/// Conjugate measurement bases. `X` labels the ψ family, `Y` the φ family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
}

impl Basis {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Basis::Y
        } else {
            Basis::X
        }
    }

    pub fn bit(self) -> bool {
        self == Basis::Y
    }
}

/// One of the four Bell states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellLabel {
    PsiPlus,
    PsiMinus,
    PhiPlus,
    PhiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
    ];

    pub fn from_bits(basis: Basis, minus: bool) -> Self {
        match (basis, minus) {
            (Basis::X, false) => BellLabel::PsiPlus,
            (Basis::X, true) => BellLabel::PsiMinus,
            (Basis::Y, false) => BellLabel::PhiPlus,
            (Basis::Y, true) => BellLabel::PhiMinus,
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            BellLabel::PsiPlus | BellLabel::PsiMinus => Basis::X,
            BellLabel::PhiPlus | BellLabel::PhiMinus => Basis::Y,
        }
    }

    /// `true` for the "−" member of the family.
    pub fn is_minus(self) -> bool {
        matches!(self, BellLabel::PsiMinus | BellLabel::PhiMinus)
    }

    /// Relative phase of `|VH⟩` against `|HV⟩` in units of π/2.
    pub fn phase_index(self) -> u8 {
        match self {
            BellLabel::PsiPlus => 0,
            BellLabel::PhiPlus => 1,
            BellLabel::PsiMinus => 2,
            BellLabel::PhiMinus => 3,
        }
    }

    pub fn from_phase_index(k: u8) -> Self {
        match k % 4 {
            0 => BellLabel::PsiPlus,
            1 => BellLabel::PhiPlus,
            2 => BellLabel::PsiMinus,
            _ => BellLabel::PhiMinus,
        }
    }

    /// Same family, opposite sign.
    pub fn flipped(self) -> Self {
        Self::from_phase_index(self.phase_index() + 2)
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellLabel::PsiPlus => "psi+",
            BellLabel::PsiMinus => "psi-",
            BellLabel::PhiPlus => "phi+",
            BellLabel::PhiMinus => "phi-",
        })
    }
}

/// A party's key pair: `a` is announced for sifting, `b` is the secret share.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct EncodingKeys {
    pub a: bool,
    pub b: bool,
}

impl EncodingKeys {
    pub const ALL: [EncodingKeys; 4] = [
        EncodingKeys::new(false, false),
        EncodingKeys::new(false, true),
        EncodingKeys::new(true, false),
        EncodingKeys::new(true, true),
    ];

    pub const fn new(a: bool, b: bool) -> Self {
        Self { a, b }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::new(rng.gen(), rng.gen())
    }

    /// Index in `U00, U01, U10, U11` order.
    pub fn index(self) -> usize {
        (self.a as usize) << 1 | self.b as usize
    }

    /// Phase added by `U_ab` to a `|V⟩` amplitude, in units of π/2.
    fn phase_step(self) -> u8 {
        self.a as u8 + 2 * self.b as u8
    }
}

impl fmt::Display for EncodingKeys {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U{}{}", self.a as u8, self.b as u8)
    }
}

/// Which photon of the pair an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Photon {
    First,
    Second,
}

impl TryFrom<u8> for Photon {
    type Error = Error;

    fn try_from(index: u8) -> Result<Self> {
        match index {
            1 => Ok(Photon::First),
            2 => Ok(Photon::Second),
            other => Err(Error::InvalidPhoton(other)),
        }
    }
}

/// Diagonal single-photon operator in the `{|H⟩, |V⟩}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalOp {
    pub diag: [C64; 2],
}

impl LocalOp {
    /// The encoding operator `U_ab`: diag(1, 1), (1, −1), (1, i), (1, −i).
    pub fn encoding(keys: EncodingKeys) -> Self {
        let v = match (keys.a, keys.b) {
            (false, false) => ONE,
            (false, true) => -ONE,
            (true, false) => I,
            (true, true) => -I,
        };
        Self { diag: [ONE, v] }
    }

    pub fn is_unitary(&self) -> bool {
        self.diag.iter().all(|d| (d.norm() - 1.0).abs() < 1e-12)
    }
}

/// Normalized pure state of two polarization qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonState {
    amp: [C64; 4],
}

impl TwoPhotonState {
    pub fn new(amp: [C64; 4]) -> Result<Self> {
        let state = Self { amp };
        state.check_normalized()?;
        Ok(state)
    }

    pub fn amplitudes(&self) -> &[C64; 4] {
        &self.amp
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::Unnormalized(n));
        }
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &TwoPhotonState) -> C64 {
        self.amp
            .iter()
            .zip(other.amp.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            amp: self.amp.map(|a| a * factor),
        }
    }

    /// Equality up to a global phase. The phase is fixed on the
    /// largest-magnitude component of `self`.
    pub fn eq_up_to_phase(&self, other: &TwoPhotonState, tol: f64) -> bool {
        let (k, pivot) = self
            .amp
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
            .expect("four amplitudes");
        if pivot.norm() < tol || (other.amp[k].norm() - pivot.norm()).abs() > tol {
            return false;
        }
        let phase = other.amp[k] / pivot;
        let phase = phase / phase.norm();
        self.amp
            .iter()
            .zip(other.amp.iter())
            .all(|(a, b)| (a * phase - b).norm() <= tol)
    }
}

/// Amplitude vector of a Bell state.
pub fn bell_vector(label: BellLabel) -> TwoPhotonState {
    let s = FRAC_1_SQRT_2;
    let vh = match label {
        BellLabel::PsiPlus => C64::new(s, 0.0),
        BellLabel::PsiMinus => C64::new(-s, 0.0),
        BellLabel::PhiPlus => C64::new(0.0, s),
        BellLabel::PhiMinus => C64::new(0.0, -s),
    };
    TwoPhotonState {
        amp: [ZERO, C64::new(s, 0.0), vh, ZERO],
    }
}

/// Applies `op` to one photon of the pair.
pub fn apply_local(state: &TwoPhotonState, op: &LocalOp, photon: Photon) -> TwoPhotonState {
    let mut amp = state.amp;
    for (idx, a) in amp.iter_mut().enumerate() {
        // idx = 2*p1 + p2 with H = 0, V = 1
        let pol = match photon {
            Photon::First => idx >> 1,
            Photon::Second => idx & 1,
        };
        *a *= op.diag[pol];
    }
    TwoPhotonState { amp }
}

/// Identifies a Bell state up to global phase; `None` for anything else.
pub fn classify(state: &TwoPhotonState) -> Option<BellLabel> {
    BellLabel::ALL
        .into_iter()
        .find(|&label| bell_vector(label).eq_up_to_phase(state, PHASE_TOL))
}

/// Label-level action of `U_ab` on photon 1.
pub fn transition(label: BellLabel, keys: EncodingKeys) -> BellLabel {
    transition_on(label, keys, Photon::First)
}

/// Label-level action of `U_ab` on the given photon.
///
/// On photon 1 the operator multiplies the `|VH⟩` amplitude, on photon 2 the
/// `|HV⟩` amplitude, so the relative phase moves by `+(a + 2b)` or `−(a + 2b)`
/// quarter turns. For `a = 1` the two photons therefore give opposite signs.
pub fn transition_on(label: BellLabel, keys: EncodingKeys, photon: Photon) -> BellLabel {
    let step = keys.phase_step();
    let k = match photon {
        Photon::First => label.phase_index() + step,
        Photon::Second => label.phase_index() + 4 - step,
    };
    BellLabel::from_phase_index(k)
}

/// Pure state of `n ≥ 2` polarization qubits; photon 0 is the most
/// significant bit of the amplitude index.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPhotonState {
    photons: usize,
    amp: Vec<C64>,
}

impl MultiPhotonState {
    pub fn new(photons: usize, amp: Vec<C64>) -> Result<Self> {
        if amp.len() != 1 << photons {
            return Err(Error::PhotonCount {
                found: amp.len().trailing_zeros() as usize,
                needed: photons,
            });
        }
        let state = Self { photons, amp };
        let n = state.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::Unnormalized(n));
        }
        Ok(state)
    }

    pub fn photons(&self) -> usize {
        self.photons
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Converts a two-photon state into a [`TwoPhotonState`].
    pub fn to_pair(&self) -> Result<TwoPhotonState> {
        if self.photons != 2 {
            return Err(Error::PhotonCount {
                found: self.photons,
                needed: 2,
            });
        }
        TwoPhotonState::new([self.amp[0], self.amp[1], self.amp[2], self.amp[3]])
    }
}

/// `(|H…HV⟩ + |V…VH⟩)/√2` on `photons` qubits.
pub fn ghz_plus(photons: usize) -> MultiPhotonState {
    assert!(photons >= 3, "GHZ state needs at least 3 photons");
    let dim = 1usize << photons;
    let mut amp = vec![ZERO; dim];
    // H…HV: only the last photon is V
    amp[1] = C64::new(FRAC_1_SQRT_2, 0.0);
    // V…VH: all but the last photon are V
    amp[dim - 2] = C64::new(FRAC_1_SQRT_2, 0.0);
    MultiPhotonState { photons, amp }
}

/// `(|HHV⟩ + |VVH⟩)/√2`.
pub fn ghz3_plus() -> MultiPhotonState {
    ghz_plus(3)
}

/// `(|HHHV⟩ + |VVVH⟩)/√2`.
pub fn ghz4_plus() -> MultiPhotonState {
    ghz_plus(4)
}

/// Coefficient `c` of the measurement vector `(|H⟩ + c|V⟩)/√2` for an
/// ancilla outcome. Outcome bit 0 is `|+⟩` (X) or `|−i⟩` (Y); bit 1 is `|−⟩`
/// or `|+i⟩`. Bit 0 always leaves the "+" Bell state behind.
fn ancilla_vector(basis: Basis, outcome: bool) -> C64 {
    match (basis, outcome) {
        (Basis::X, false) => ONE,
        (Basis::X, true) => -ONE,
        (Basis::Y, false) => -I,
        (Basis::Y, true) => I,
    }
}

/// Projects photon 0 onto an ancilla outcome. Returns the outcome probability
/// and the normalized residual state (`None` when the probability vanishes).
pub fn project_ancilla(
    state: &MultiPhotonState,
    basis: Basis,
    outcome: bool,
) -> Result<(f64, Option<MultiPhotonState>)> {
    if state.photons < 3 {
        return Err(Error::PhotonCount {
            found: state.photons,
            needed: 3,
        });
    }
    let n = state.norm_sqr();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::Unnormalized(n));
    }
    let half = state.amp.len() / 2;
    let bra_v = ancilla_vector(basis, outcome).conj();
    let mut amp: Vec<C64> = (0..half)
        .map(|i| (state.amp[i] + bra_v * state.amp[half + i]) * FRAC_1_SQRT_2)
        .collect();
    let prob: f64 = amp.iter().map(|a| a.norm_sqr()).sum();
    if prob < 1e-15 {
        return Ok((0.0, None));
    }
    let scale = 1.0 / prob.sqrt();
    amp.iter_mut().for_each(|a| *a *= scale);
    Ok((
        prob,
        Some(MultiPhotonState {
            photons: state.photons - 1,
            amp,
        }),
    ))
}

/// Measures photon 0 in `basis` and returns the outcome bit with the residual
/// state of the remaining photons.
pub fn measure_ancilla<R: Rng + ?Sized>(
    state: &MultiPhotonState,
    basis: Basis,
    rng: &mut R,
) -> Result<(bool, MultiPhotonState)> {
    let (p0, s0) = project_ancilla(state, basis, false)?;
    let u: f64 = rng.gen();
    if u < p0 {
        if let Some(s) = s0 {
            return Ok((false, s));
        }
    }
    match project_ancilla(state, basis, true)? {
        (_, Some(s)) => Ok((true, s)),
        (_, None) => Ok((false, s0.expect("one outcome has support"))),
    }
}
