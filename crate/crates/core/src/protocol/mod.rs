//! The n-party secret-sharing round engine.
//!
//! Party 0 is Alice, who prepares the pair; party 1 is Bob; parties 2.. are
//! Charlie, Daniel, and further encoders chained on Charlie's photon path.
//! Alice and Bob act on photon 1, everyone else on photon 2.
//!
//! For a sifted round (`⊕ a_i = 0`) with announced analyzer bit `s`
//! (0 for ψ⁺, 1 for ψ⁻) the private keys obey
//!
//! ```text
//! ⊕ b_i = s ⊕ c(a),   c(a) = (Σ a_i / 2 + Σ_{i≥2} a_i) mod 2
//! ```
//!
//! `c` depends on public keys only; for three parties it is `a_A ∧ a_B`.

mod engine;
mod ghz;
mod sifting;
mod tables;

pub use engine::{round_rng, run_round, simulate, Links, SimulationParams};
pub use ghz::{virtual_ghz_equivalence, EquivalenceReport};
pub use sifting::{
    empirical_mutual_information, reconstruct_secret, round_error, sift_and_check,
    sifted_error_rate, SecurityReport, SharedKey,
};
pub use tables::{
    expected_outcome, verify_tables, verify_tables_against, CellResult, ExpectedOutcome,
    TableEntry, TableReport, REFERENCE_TABLES,
};

use serde::{Deserialize, Serialize};

use crate::bsa::BsaOutcome;
use crate::qstate::{EncodingKeys, Photon};

/// Default abort threshold on the sampled error rate.
pub const DEFAULT_THRESHOLD: f64 = 0.11;
/// Default fraction of sifted rounds spent on the security check.
pub const DEFAULT_SAMPLE_FRACTION: f64 = 0.1;

/// Photon a party's waveplate acts on.
pub fn party_photon(party: usize) -> Photon {
    if party < 2 {
        Photon::First
    } else {
        Photon::Second
    }
}

/// `⊕ a_i == 0`.
pub fn public_parity_ok(keys: &[EncodingKeys]) -> bool {
    !keys.iter().fold(false, |acc, k| acc ^ k.a)
}

/// `⊕ b_i`.
pub fn private_parity(keys: &[EncodingKeys]) -> bool {
    keys.iter().fold(false, |acc, k| acc ^ k.b)
}

/// Public-key correction `c(a)`; `None` when the round fails sifting.
pub fn parity_correction(keys: &[EncodingKeys]) -> Option<bool> {
    if !public_parity_ok(keys) {
        return None;
    }
    let total: usize = keys.iter().filter(|k| k.a).count();
    let second: usize = keys
        .iter()
        .enumerate()
        .filter(|(i, k)| k.a && party_photon(*i) == Photon::Second)
        .count();
    Some((total / 2 + second) % 2 == 1)
}

/// One protocol round as seen in the transcript.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRecord {
    pub index: u64,
    /// Index 0 is Alice.
    pub party_keys: Vec<EncodingKeys>,
    pub outcome: BsaOutcome,
    pub sifted: bool,
    pub sample: bool,
}

impl RoundRecord {
    pub fn new(index: u64, party_keys: Vec<EncodingKeys>, outcome: BsaOutcome) -> Self {
        let sifted = outcome.is_conclusive() && public_parity_ok(&party_keys);
        Self {
            index,
            party_keys,
            outcome,
            sifted,
            sample: false,
        }
    }

    /// `s ⊕ c(a)`, the bit every kept round's private keys XOR to.
    pub fn parity_target(&self) -> Option<bool> {
        if !self.sifted {
            return None;
        }
        Some(self.outcome.bit()? ^ parity_correction(&self.party_keys)?)
    }
}

/// Line-delimited transcript entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub round_index: u64,
    /// `[a, b]` per party, Alice first.
    pub keys: Vec<[u8; 2]>,
    pub outcome: BsaOutcome,
    pub sifted: bool,
    pub sample: bool,
}

impl From<&RoundRecord> for TranscriptLine {
    fn from(r: &RoundRecord) -> Self {
        Self {
            round_index: r.index,
            keys: r
                .party_keys
                .iter()
                .map(|k| [k.a as u8, k.b as u8])
                .collect(),
            outcome: r.outcome,
            sifted: r.sifted,
            sample: r.sample,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correction_for_three_parties_is_alice_and_bob() {
        for ka in EncodingKeys::ALL {
            for kb in EncodingKeys::ALL {
                for kc in EncodingKeys::ALL {
                    let keys = [ka, kb, kc];
                    match parity_correction(&keys) {
                        Some(c) => assert_eq!(c, ka.a && kb.a),
                        None => assert!(ka.a ^ kb.a ^ kc.a),
                    }
                }
            }
        }
    }

    #[test]
    fn transcript_line_shape() {
        let r = RoundRecord::new(
            7,
            vec![
                EncodingKeys::new(true, false),
                EncodingKeys::new(false, true),
                EncodingKeys::new(true, true),
            ],
            BsaOutcome::PsiMinus,
        );
        assert!(r.sifted);
        let line = serde_json::to_string(&TranscriptLine::from(&r)).unwrap();
        assert_eq!(
            line,
            r#"{"round_index":7,"keys":[[1,0],[0,1],[1,1]],"outcome":"psi-","sifted":true,"sample":false}"#
        );
    }

    #[test]
    fn inconclusive_rounds_are_never_sifted() {
        let r = RoundRecord::new(
            0,
            vec![EncodingKeys::default(); 3],
            BsaOutcome::Inconclusive,
        );
        assert!(!r.sifted);
        assert_eq!(r.parity_target(), None);
    }
}
