//! Fiber segments and adversaries.
//!
//! Noise is applied at the Bell-label level: a surviving photon toggles the
//! sign of a ψ-family label with probability `e_x` and of a φ-family label
//! with probability `e_y`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::qstate::{Basis, BellLabel};

/// Network layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// Four equal segments; each photon crosses two.
    Symmetric,
    /// Encoders sit next to the analyzer; each photon crosses one segment.
    Proximal,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Symmetric => "symmetric",
            Topology::Proximal => "proximal",
        })
    }
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "symmetric" => Ok(Topology::Symmetric),
            "proximal" => Ok(Topology::Proximal),
            other => Err(format!("unknown topology `{other}` (symmetric|proximal)")),
        }
    }
}

/// One fiber segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// Loss in dB/km.
    pub alpha: f64,
    pub length_km: f64,
    /// Sign-flip probability for ψ-family labels.
    pub e_x: f64,
    /// Sign-flip probability for φ-family labels.
    pub e_y: f64,
}

impl LinkParams {
    pub fn new(alpha: f64, length_km: f64, e_x: f64, e_y: f64) -> Result<Self> {
        let link = Self {
            alpha,
            length_km,
            e_x,
            e_y,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn lossless() -> Self {
        Self {
            alpha: 0.0,
            length_km: 0.0,
            e_x: 0.0,
            e_y: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_range("alpha", self.alpha, 0.0, f64::MAX, "[0, inf)")?;
        check_range("length_km", self.length_km, 0.0, f64::MAX, "[0, inf)")?;
        check_range("e_x", self.e_x, 0.0, 0.5, "[0, 1/2]")?;
        check_range("e_y", self.e_y, 0.0, 0.5, "[0, 1/2]")?;
        if self.e_x + self.e_y > 0.5 {
            return Err(Error::ValidityRegion(self.e_x + self.e_y));
        }
        Ok(())
    }

    pub fn transmittance(&self) -> f64 {
        transmittance(self.alpha, self.length_km)
    }
}

/// `10^(−αL/10)`.
pub fn transmittance(alpha: f64, length_km: f64) -> f64 {
    10f64.powf(-alpha * length_km / 10.0)
}

/// Who, if anyone, interferes with the round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryModel {
    None,
    /// Measure-and-resend of Charlie's photon in the X basis, every round.
    InterceptResendX,
    /// Measure-and-resend of Charlie's photon in the Y basis, every round.
    InterceptResendY,
    /// Bob always applies `U00` and hands his keys to Eve.
    DishonestBob,
}

impl AdversaryModel {
    pub fn intercept_basis(self) -> Option<Basis> {
        match self {
            AdversaryModel::InterceptResendX => Some(Basis::X),
            AdversaryModel::InterceptResendY => Some(Basis::Y),
            _ => None,
        }
    }
}

impl fmt::Display for AdversaryModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdversaryModel::None => "none",
            AdversaryModel::InterceptResendX => "intercept-resend-x",
            AdversaryModel::InterceptResendY => "intercept-resend-y",
            AdversaryModel::DishonestBob => "dishonest-bob",
        })
    }
}

impl FromStr for AdversaryModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(AdversaryModel::None),
            "intercept-resend-x" | "intercept-x" => Ok(AdversaryModel::InterceptResendX),
            "intercept-resend-y" | "intercept-y" => Ok(AdversaryModel::InterceptResendY),
            "dishonest-bob" => Ok(AdversaryModel::DishonestBob),
            other => Err(format!(
                "unknown adversary `{other}` (none|intercept-resend-x|intercept-resend-y|dishonest-bob)"
            )),
        }
    }
}

/// Sends one photon of the pair through a segment.
pub fn transmit<R: Rng + ?Sized>(
    label: BellLabel,
    link: &LinkParams,
    rng: &mut R,
) -> (bool, BellLabel) {
    let eta = link.transmittance();
    if eta < 1.0 && rng.gen::<f64>() >= eta {
        return (false, label);
    }
    let flip = match label.basis() {
        Basis::X => link.e_x,
        Basis::Y => link.e_y,
    };
    if flip > 0.0 && rng.gen::<f64>() < flip {
        (true, label.flipped())
    } else {
        (true, label)
    }
}

/// Sifted error rate after a distribution stage and a delivery stage:
/// `e = (3/2)e_x + (1/2)e_y − e_x² − e_x·e_y`.
pub fn end_to_end_error(e_x: f64, e_y: f64) -> Result<f64> {
    check_range("e_x", e_x, 0.0, 0.5, "[0, 1/2]")?;
    check_range("e_y", e_y, 0.0, 0.5, "[0, 1/2]")?;
    Ok(1.5 * e_x + 0.5 * e_y - e_x * e_x - e_x * e_y)
}

/// Measure-and-resend on Charlie's photon in `strategy`'s basis.
///
/// A label already in the measured family passes unchanged; a conjugate-family
/// label collapses to a uniformly random member of the measured family.
pub fn eve_intercept<R: Rng + ?Sized>(label: BellLabel, strategy: Basis, rng: &mut R) -> BellLabel {
    if label.basis() == strategy {
        label
    } else {
        BellLabel::from_bits(strategy, rng.gen())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::bell_vector;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_link_keeps_label() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let link = LinkParams::new(0.19, 40.0, 0.0, 0.0).unwrap();
        for label in BellLabel::ALL {
            for _ in 0..1000 {
                let (alive, out) = transmit(label, &link, &mut rng);
                if alive {
                    assert_eq!(out, label);
                }
            }
        }
    }

    #[test]
    fn zero_length_always_survives() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let link = LinkParams::new(0.19, 0.0, 0.1, 0.1).unwrap();
        assert_eq!(link.transmittance(), 1.0);
        assert!((0..10_000).all(|_| transmit(BellLabel::PsiPlus, &link, &mut rng).0));
    }

    #[test]
    fn survival_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        for l in [10.0, 50.0, 100.0] {
            let link = LinkParams::new(0.19, l, 0.0, 0.0).unwrap();
            let p = link.transmittance();
            let alive = (0..n)
                .filter(|_| transmit(BellLabel::PsiPlus, &link, &mut rng).0)
                .count();
            let f = alive as f64 / n as f64;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((f - p).abs() <= 3.0 * sigma, "L={l}: {f} vs {p}");
        }
    }

    #[test]
    fn end_to_end_examples() {
        assert_eq!(end_to_end_error(0.0, 0.0).unwrap(), 0.0);
        for q in [0.01, 0.03, 0.05, 0.2] {
            let e = end_to_end_error(q, q).unwrap();
            assert!((e - 2.0 * q * (1.0 - q)).abs() < 1e-15);
        }
        // 1.5·0.02 + 0.5·0.01 − 0.0004 − 0.0002
        assert!((end_to_end_error(0.02, 0.01).unwrap() - 0.0344).abs() < 1e-15);
        assert!(end_to_end_error(0.6, 0.0).is_err());
        assert!(end_to_end_error(0.1, -0.1).is_err());
    }

    #[test]
    fn cascaded_segments_give_two_q_one_minus_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = 0.01;
        let link = LinkParams::new(0.0, 0.0, q, q).unwrap();
        let n = 1_000_000;
        let flipped = (0..n)
            .filter(|i| {
                let start = BellLabel::ALL[i % 4];
                let (_, mid) = transmit(start, &link, &mut rng);
                let (_, end) = transmit(mid, &link, &mut rng);
                end != start
            })
            .count();
        let e = 2.0 * q * (1.0 - q);
        let f = flipped as f64 / n as f64;
        assert!(
            (f - e).abs() <= 3.0 * (e * (1.0 - e) / n as f64).sqrt(),
            "{f}"
        );
    }

    #[test]
    fn intercept_matching_basis_is_transparent() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            assert_eq!(
                eve_intercept(BellLabel::PsiPlus, Basis::X, &mut rng),
                BellLabel::PsiPlus
            );
            assert_eq!(
                eve_intercept(BellLabel::PhiMinus, Basis::Y, &mut rng),
                BellLabel::PhiMinus
            );
        }
    }

    #[test]
    fn intercept_conjugate_basis_follows_born_rule() {
        // Born oracle: |⟨ψ±|φ⁺⟩|² from the state vectors.
        let phi = bell_vector(BellLabel::PhiPlus);
        let p_plus = bell_vector(BellLabel::PsiPlus).inner(&phi).norm_sqr();
        assert!((p_plus - 0.5).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let mut plus = 0;
        for _ in 0..n {
            match eve_intercept(BellLabel::PhiPlus, Basis::X, &mut rng) {
                BellLabel::PsiPlus => plus += 1,
                BellLabel::PsiMinus => {}
                other => panic!("unexpected {other}"),
            }
        }
        let f = plus as f64 / n as f64;
        assert!((f - p_plus).abs() <= 3.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn link_validation() {
        assert!(LinkParams::new(0.19, -1.0, 0.0, 0.0).is_err());
        assert!(LinkParams::new(0.19, 1.0, 0.3, 0.3).is_err());
        assert!(LinkParams::new(0.19, 1.0, 0.25, 0.25).is_ok());
    }

    #[test]
    fn parse_names() {
        assert_eq!("Proximal".parse::<Topology>().unwrap(), Topology::Proximal);
        assert_eq!(
            "intercept-resend-x".parse::<AdversaryModel>().unwrap(),
            AdversaryModel::InterceptResendX
        );
        assert!("ring".parse::<Topology>().is_err());
    }

    proptest! {
        #[test]
        fn end_to_end_monotone(ex in 0.0..0.5f64, ey in 0.0..0.5f64, d in 0.0..0.01f64) {
            let base = end_to_end_error(ex, ey).unwrap();
            let ex2 = (ex + d).min(0.5);
            let ey2 = (ey + d).min(0.5);
            prop_assert!(end_to_end_error(ex2, ey).unwrap() >= base - 1e-15);
            prop_assert!(end_to_end_error(ex, ey2).unwrap() >= base - 1e-15);
        }
    }
}
