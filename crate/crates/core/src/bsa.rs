//! Untrusted Bell-state analyzer.
//!
//! Two views are provided: [`ideal_bsa`] projects onto `ψ±` with Born
//! probabilities, and [`click_bsa`] turns an ideal projection into detector
//! clicks with finite efficiency, internal loss and dark counts.
//!
//! Signature patterns: `D1∧D2` and `D3∧D4` report `ψ⁺`; `D1∧D3` and `D2∧D4`
//! report `ψ⁻`. Every other click pattern is inconclusive. Each detector has
//! exactly two signature partners, which is what makes the dark-count
//! coincidence probability `4p_d²(1−p_d)²`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::Topology;
use crate::error::{check_probability, check_range, Error, Result};
use crate::qstate::{bell_vector, BellLabel, TwoPhotonState, NORM_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BsaOutcome {
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "psi-")]
    PsiMinus,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl BsaOutcome {
    pub fn is_conclusive(self) -> bool {
        self != BsaOutcome::Inconclusive
    }

    /// The announced bit `s`: 0 for `ψ⁺`, 1 for `ψ⁻`.
    pub fn bit(self) -> Option<bool> {
        match self {
            BsaOutcome::PsiPlus => Some(false),
            BsaOutcome::PsiMinus => Some(true),
            BsaOutcome::Inconclusive => None,
        }
    }

    pub fn from_bit(minus: bool) -> Self {
        if minus {
            BsaOutcome::PsiMinus
        } else {
            BsaOutcome::PsiPlus
        }
    }
}

impl fmt::Display for BsaOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BsaOutcome::PsiPlus => "psi+",
            BsaOutcome::PsiMinus => "psi-",
            BsaOutcome::Inconclusive => "inconclusive",
        })
    }
}

/// Valid coincidence signatures, as detector index pairs (0-based).
pub const SIGNATURES: [([usize; 2], BsaOutcome); 4] = [
    ([0, 1], BsaOutcome::PsiPlus),
    ([2, 3], BsaOutcome::PsiPlus),
    ([0, 2], BsaOutcome::PsiMinus),
    ([1, 3], BsaOutcome::PsiMinus),
];

/// Detectors a lone photon can reach, per input arm.
const LONE_ROUTES: [[usize; 2]; 2] = [[0, 3], [1, 2]];

/// Click vector of detectors D1..D4. `dark` marks clicks caused by dark counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClickPattern {
    pub clicks: [bool; 4],
    pub dark: [bool; 4],
}

impl ClickPattern {
    pub fn count(&self) -> usize {
        self.clicks.iter().filter(|&&c| c).count()
    }

    pub fn dark_count(&self) -> usize {
        self.dark.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// Maps the pattern to the reported outcome.
    pub fn outcome(&self) -> BsaOutcome {
        if self.count() != 2 {
            return BsaOutcome::Inconclusive;
        }
        SIGNATURES
            .iter()
            .find(|(pair, _)| self.clicks[pair[0]] && self.clicks[pair[1]])
            .map_or(BsaOutcome::Inconclusive, |&(_, o)| o)
    }
}

/// Detector and analyzer parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Single-photon detection efficiency.
    pub eta_d: f64,
    /// Dark-count probability per detector per round.
    pub p_d: f64,
    /// Internal efficiency of the analyzer.
    pub eta_analyzer: f64,
}

impl DetectorParams {
    pub const IDEAL: DetectorParams = DetectorParams {
        eta_d: 1.0,
        p_d: 0.0,
        eta_analyzer: 1.0,
    };

    pub fn new(eta_d: f64, p_d: f64, eta_analyzer: f64) -> Result<Self> {
        let p = Self {
            eta_d,
            p_d,
            eta_analyzer,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("eta_d", self.eta_d)?;
        check_probability("eta_analyzer", self.eta_analyzer)?;
        if !(self.p_d.is_finite() && (0.0..1.0).contains(&self.p_d)) {
            return Err(Error::OutOfRange {
                name: "p_d",
                value: self.p_d,
                range: "[0, 1)",
            });
        }
        Ok(())
    }
}

impl Default for DetectorParams {
    /// η_d = 93%, η_D = 86.3%, p_d = 1e-7.
    fn default() -> Self {
        Self {
            eta_d: 0.93,
            p_d: 1e-7,
            eta_analyzer: 0.863,
        }
    }
}

/// Born probabilities of the `ψ⁺` and `ψ⁻` projections.
pub fn ideal_probabilities(state: &TwoPhotonState) -> Result<(f64, f64)> {
    let n = state.norm_sqr();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::Unnormalized(n));
    }
    let plus = bell_vector(BellLabel::PsiPlus).inner(state).norm_sqr();
    let minus = bell_vector(BellLabel::PsiMinus).inner(state).norm_sqr();
    Ok((plus, minus))
}

/// Ideal linear-optics Bell analysis of a photon pair.
pub fn ideal_bsa<R: Rng + ?Sized>(state: &TwoPhotonState, rng: &mut R) -> Result<BsaOutcome> {
    let (plus, minus) = ideal_probabilities(state)?;
    let u: f64 = rng.gen();
    Ok(if u < plus {
        BsaOutcome::PsiPlus
    } else if u < plus + minus {
        BsaOutcome::PsiMinus
    } else {
        BsaOutcome::Inconclusive
    })
}

/// Click-level analyzer model.
///
/// `arrivals` says which input photons reached the analyzer (Bob's arm,
/// Charlie's arm); `projected` is the ideal outcome when both arrived. The
/// internal efficiency gates the whole round once; each signal photon that
/// passes fires its detector with probability `eta_d`; every silent detector
/// then dark-counts with probability `p_d`.
pub fn click_bsa<R: Rng + ?Sized>(
    arrivals: (bool, bool),
    projected: Option<BsaOutcome>,
    params: &DetectorParams,
    rng: &mut R,
) -> (BsaOutcome, ClickPattern) {
    let mut pattern = ClickPattern::default();
    let any_photon = arrivals.0 || arrivals.1;
    if any_photon && rng.gen::<f64>() < params.eta_analyzer {
        match (arrivals, projected) {
            ((true, true), Some(outcome)) if outcome.is_conclusive() => {
                let choices: Vec<[usize; 2]> = SIGNATURES
                    .iter()
                    .filter(|(_, o)| *o == outcome)
                    .map(|(p, _)| *p)
                    .collect();
                let pair = choices[rng.gen_range(0..choices.len())];
                for d in pair {
                    if rng.gen::<f64>() < params.eta_d {
                        pattern.clicks[d] = true;
                    }
                }
            }
            ((true, true), _) => {
                // Non-Bell projection: both photons exit towards one detector.
                let d = rng.gen_range(0..4);
                let miss = (1.0 - params.eta_d) * (1.0 - params.eta_d);
                if rng.gen::<f64>() >= miss {
                    pattern.clicks[d] = true;
                }
            }
            ((bob, _), _) => {
                let arm = if bob { 0 } else { 1 };
                let d = LONE_ROUTES[arm][rng.gen_range(0..2)];
                if rng.gen::<f64>() < params.eta_d {
                    pattern.clicks[d] = true;
                }
            }
        }
    }
    if params.p_d > 0.0 {
        for d in 0..4 {
            if !pattern.clicks[d] && rng.gen::<f64>() < params.p_d {
                pattern.clicks[d] = true;
                pattern.dark[d] = true;
            }
        }
    }
    (pattern.outcome(), pattern)
}

/// Probability `η₀` that a pair yields a heralded coincidence.
///
/// `eta_t` is the transmittance of one fiber segment. In the symmetric layout
/// each photon crosses two segments; in the proximal layout one.
pub fn coincidence_efficiency(
    params: &DetectorParams,
    eta_t: f64,
    topology: Topology,
) -> Result<f64> {
    params.validate()?;
    check_range("eta_t", eta_t, f64::MIN_POSITIVE, 1.0, "(0, 1]")?;
    let per_photon = match topology {
        Topology::Symmetric => eta_t * eta_t,
        Topology::Proximal => eta_t,
    };
    Ok(per_photon * per_photon * params.eta_d * params.eta_d * params.eta_analyzer)
}
