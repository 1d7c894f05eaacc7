//! Virtual-GHZ purification check.
//!
//! Alice's random choice of Bell state is replaced by a measurement on one
//! photon of a GHZ state; for four parties Daniel's encoding is replaced the
//! same way by measuring a second virtual photon. The observable statistics of
//! both pictures must coincide.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{parity_correction, party_photon, private_parity, public_parity_ok};
use crate::bsa::{ideal_bsa, BsaOutcome};
use crate::error::{Error, Result};
use crate::qstate::{
    apply_local, bell_vector, classify, ghz_plus, measure_ancilla, transition_on, Basis, BellLabel,
    EncodingKeys, LocalOp, TwoPhotonState,
};

/// Histogram cells: `(a_A, sifted, s ⊕ ⊕b ⊕ c)`.
const CELLS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub n_parties: usize,
    pub trials: usize,
    pub direct: [f64; CELLS],
    pub virtual_ghz: [f64; CELLS],
    pub tv_distance: f64,
    /// Virtual measurements whose residual pair was checked against the label
    /// predicted from the outcome.
    pub projection_checks: usize,
    pub projection_failures: usize,
}

impl EquivalenceReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.projection_failures == 0 && self.tv_distance < tol
    }
}

fn cell(keys: &[EncodingKeys], outcome: BsaOutcome) -> usize {
    let s = outcome.bit().expect("ideal analyzer is always conclusive");
    let sifted = public_parity_ok(keys);
    let residual = s ^ private_parity(keys) ^ parity_correction(keys).unwrap_or(false);
    (keys[0].a as usize) << 2 | (sifted as usize) << 1 | residual as usize
}

fn encode(
    mut state: TwoPhotonState,
    keys: &[EncodingKeys],
    parties: impl Iterator<Item = usize>,
) -> TwoPhotonState {
    for p in parties {
        state = apply_local(&state, &LocalOp::encoding(keys[p]), party_photon(p));
    }
    state
}

/// Compares direct protocol statistics with the GHZ-purified picture.
pub fn virtual_ghz_equivalence<R: Rng + ?Sized>(
    n_parties: usize,
    trials: usize,
    rng: &mut R,
) -> Result<EquivalenceReport> {
    if !(3..=4).contains(&n_parties) {
        return Err(Error::UnsupportedParties(n_parties));
    }
    let mut direct = [0usize; CELLS];
    let mut virt = [0usize; CELLS];
    let mut checks = 0;
    let mut failures = 0;

    for _ in 0..trials {
        // direct: every party encodes on the Bell pair
        let keys: Vec<EncodingKeys> = (0..n_parties).map(|_| EncodingKeys::random(rng)).collect();
        let state = encode(bell_vector(BellLabel::PsiPlus), &keys, 0..n_parties);
        direct[cell(&keys, ideal_bsa(&state, rng)?)] += 1;

        // virtual: Alice (and Daniel) measure GHZ photons instead of encoding
        let mut keys: Vec<EncodingKeys> =
            (0..n_parties).map(|_| EncodingKeys::random(rng)).collect();
        let (o_a, mut rest) =
            measure_ancilla(&ghz_plus(n_parties), Basis::from_bit(keys[0].a), rng)?;
        keys[0].b = o_a;
        let mut expected = transition_on(BellLabel::PsiPlus, keys[0], party_photon(0));
        if n_parties == 4 {
            let (o_d, pair) = measure_ancilla(&rest, Basis::from_bit(keys[3].a), rng)?;
            keys[3].b = o_d ^ keys[3].a;
            expected = transition_on(expected, keys[3], party_photon(3));
            rest = pair;
        }
        let pair = rest.to_pair()?;
        checks += 1;
        if classify(&pair) != Some(expected) {
            failures += 1;
        }
        let state = encode(pair, &keys, 1..3);
        virt[cell(&keys, ideal_bsa(&state, rng)?)] += 1;
    }

    let norm = |h: [usize; CELLS]| h.map(|c| c as f64 / trials.max(1) as f64);
    let (direct, virtual_ghz) = (norm(direct), norm(virt));
    let tv_distance = 0.5
        * direct
            .iter()
            .zip(&virtual_ghz)
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>();
    Ok(EquivalenceReport {
        n_parties,
        trials,
        direct,
        virtual_ghz,
        tv_distance,
        projection_checks: checks,
        projection_failures: failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{ghz3_plus, project_ancilla};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn minus_ancilla_leaves_psi_minus() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut minus_seen = 0;
        for _ in 0..1000 {
            let (o, rest) = measure_ancilla(&ghz3_plus(), Basis::X, &mut rng).unwrap();
            let label = classify(&rest.to_pair().unwrap()).unwrap();
            assert_eq!(
                label,
                if o {
                    BellLabel::PsiMinus
                } else {
                    BellLabel::PsiPlus
                }
            );
            minus_seen += o as usize;
        }
        assert!(minus_seen > 400 && minus_seen < 600);
        let (p, _) = project_ancilla(&ghz3_plus(), Basis::Y, true).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn three_and_four_party_equivalence() {
        for n in [3, 4] {
            let mut rng = ChaCha8Rng::seed_from_u64(10 + n as u64);
            let r = virtual_ghz_equivalence(n, 50_000, &mut rng).unwrap();
            assert_eq!(r.projection_failures, 0);
            assert!(r.tv_distance < 0.01, "n={n}: {}", r.tv_distance);
            assert!((r.direct.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            // sifted rounds never carry a parity residual
            assert_eq!(r.direct[0b011] + r.direct[0b111], 0.0);
            assert_eq!(r.virtual_ghz[0b011] + r.virtual_ghz[0b111], 0.0);
        }
    }

    #[test]
    fn unsupported_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(
            virtual_ghz_equivalence(5, 10, &mut rng).unwrap_err(),
            Error::UnsupportedParties(5)
        );
    }
}
