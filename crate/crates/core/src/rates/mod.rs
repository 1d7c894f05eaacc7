//! Closed-form key rates, dark-count corrections and distance limits.
//!
//! Fidelity convention: `P = 1 − e_x`, with `e_x` the per-basis flip
//! probability of a single stage. This is the reading under which the
//! quoted threshold fidelity of 0.943 is reproduced; the sifted error at the
//! threshold is `e = 2e_x(1−e_x) ≈ 0.107`.

mod gram;
pub mod jacobi;

pub use gram::{
    closed_form_entropy, closed_form_spectrum, gram_holevo, gram_matrix, gram_matrix_with,
    gram_spectrum, GramSpectrum, BETA_SWEEP,
};

use serde::{Deserialize, Serialize};

use crate::bsa::{coincidence_efficiency, DetectorParams};
use crate::channel::{end_to_end_error, transmittance, Topology};
use crate::error::{check_probability, check_range, Error, Result};

/// Largest distance scanned when looking for the first zero of `R(L)`.
pub const MAX_SCAN_KM: f64 = 1e4;
/// Step of the forward scan that brackets the first zero.
pub const SCAN_STEP_KM: f64 = 1.0;
/// Width of the final bisection bracket.
pub const DISTANCE_RESOLUTION_KM: f64 = 1e-3;
pub const FIDELITY_RESOLUTION: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub detector: DetectorParams,
    /// Fiber loss, dB/km.
    pub alpha: f64,
    pub e_x: f64,
    pub e_y: f64,
    pub topology: Topology,
    /// `Q_Eve / Q`; 1 is the working assumption.
    pub q_eve_ratio: f64,
}

impl SystemParams {
    /// Unbiased channel of fidelity `P` (`e_x = e_y = 1 − P`).
    pub fn with_fidelity(
        detector: DetectorParams,
        alpha: f64,
        fidelity: f64,
        topology: Topology,
    ) -> Result<Self> {
        check_probability("fidelity", fidelity)?;
        let p = Self {
            detector,
            alpha,
            e_x: 1.0 - fidelity,
            e_y: 1.0 - fidelity,
            topology,
            q_eve_ratio: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn fidelity(&self) -> f64 {
        1.0 - self.e_x
    }

    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        check_range("alpha", self.alpha, 0.0, f64::MAX, "[0, inf)")?;
        check_range("q_eve_ratio", self.q_eve_ratio, 0.0, f64::MAX, "[0, inf)")?;
        check_validity(self.e_x, self.e_y)
    }

    /// Transmittance seen by one photon: two segments in the symmetric layout,
    /// one in the proximal layout.
    pub fn photon_transmittance(&self, length_km: f64) -> f64 {
        let t = transmittance(self.alpha, length_km);
        match self.topology {
            Topology::Symmetric => t * t,
            Topology::Proximal => t,
        }
    }

    /// Coincidence probability `Q = η₀`.
    pub fn q(&self, length_km: f64) -> Result<f64> {
        check_range("length_km", length_km, 0.0, f64::MAX, "[0, inf)")?;
        let eta_t = transmittance(self.alpha, length_km);
        if eta_t == 0.0 {
            return Ok(0.0);
        }
        coincidence_efficiency(&self.detector, eta_t, self.topology)
    }
}

pub(crate) fn check_validity(e_x: f64, e_y: f64) -> Result<()> {
    check_range("e_x", e_x, 0.0, 0.5, "[0, 1/2]")?;
    check_range("e_y", e_y, 0.0, 0.5, "[0, 1/2]")?;
    if e_x + e_y > 0.5 {
        return Err(Error::ValidityRegion(e_x + e_y));
    }
    Ok(())
}

/// `h(x) = −x log₂x − (1−x) log₂(1−x)`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    check_probability("x", x)?;
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// `Q_Eve · h(e_x + e_y)`.
pub fn holevo_bound(e_x: f64, e_y: f64, q_eve: f64) -> Result<f64> {
    check_validity(e_x, e_y)?;
    check_range("q_eve", q_eve, 0.0, f64::MAX, "[0, inf)")?;
    Ok(q_eve * binary_entropy(e_x + e_y)?)
}

/// `h(1 − √(1 − 2e))`, Eve's term written through the sifted error of an
/// unbiased channel.
pub fn unbiased_eve_entropy(e: f64) -> Result<f64> {
    check_range("e", e, 0.0, 0.5, "[0, 1/2]").map_err(|_| Error::ErrorAboveHalf(e))?;
    binary_entropy(1.0 - (1.0 - 2.0 * e).sqrt())
}

/// Key rate without dark counts: `Q[1 − h(e)] − Q_Eve·h(e_x + e_y)`.
pub fn key_rate(params: &SystemParams, length_km: f64) -> Result<f64> {
    params.validate()?;
    let q = params.q(length_km)?;
    let e = end_to_end_error(params.e_x, params.e_y)?;
    Ok(q * (1.0 - binary_entropy(e)?)
        - holevo_bound(params.e_x, params.e_y, params.q_eve_ratio * q)?)
}

/// `(e_d1, e_d2)`: dark-count-only coincidences and one-photon-plus-dark
/// coincidences.
pub fn dark_count_errors(params: &SystemParams, length_km: f64) -> Result<(f64, f64)> {
    params.validate()?;
    check_range("length_km", length_km, 0.0, f64::MAX, "[0, inf)")?;
    let DetectorParams {
        eta_d,
        p_d,
        eta_analyzer,
    } = params.detector;
    let quiet = (1.0 - p_d) * (1.0 - p_d);
    let e_d1 = 4.0 * p_d * p_d * quiet;
    let t = params.photon_transmittance(length_km);
    let e_d2 = 4.0 * t * eta_analyzer * eta_d * p_d * quiet * (1.0 - t * eta_d);
    Ok((e_d1, e_d2))
}

/// `e_tot = (e_d1 + e_d2/2 + e·Q)/(e_d1 + e_d2 + Q)`; exactly `e` without dark counts.
pub fn total_error(params: &SystemParams, length_km: f64, e: f64) -> Result<f64> {
    check_range("e", e, 0.0, 1.0, "[0, 1]")?;
    let (e_d1, e_d2) = dark_count_errors(params, length_km)?;
    if e_d1 == 0.0 && e_d2 == 0.0 {
        return Ok(e);
    }
    let q = params.q(length_km)?;
    let denom = e_d1 + e_d2 + q;
    if denom <= 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok((e_d1 + 0.5 * e_d2 + e * q) / denom)
}

/// `Q[1 − h(e_tot)] − Q_Eve·h(e_x + e_y)`; Eve's term keeps the raw channel error.
pub fn key_rate_with_dark_counts(params: &SystemParams, length_km: f64) -> Result<f64> {
    params.validate()?;
    let q = params.q(length_km)?;
    let e = end_to_end_error(params.e_x, params.e_y)?;
    let e_tot = total_error(params, length_km, e)?;
    Ok(q * (1.0 - binary_entropy(e_tot)?)
        - holevo_bound(params.e_x, params.e_y, params.q_eve_ratio * q)?)
}

fn bisect(mut lo: f64, mut hi: f64, tol: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let f_lo = f(lo)?;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if (f(mid)? > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// First distance at which the dark-count key rate drops below zero.
///
/// `R(L)` is not monotone: past the cutoff `e_tot → 1` and the rate turns
/// positive again, so the bracket comes from a forward scan rather than from
/// doubling.
pub fn max_distance(params: &SystemParams) -> Result<f64> {
    let r = |l: f64| key_rate_with_dark_counts(params, l);
    let no_bracket = Error::NoSignChange {
        what: "R(L)",
        lo: 0.0,
        hi: MAX_SCAN_KM,
    };
    if r(0.0)? <= 0.0 {
        return Err(no_bracket);
    }
    let mut lo = 0.0;
    while lo < MAX_SCAN_KM {
        let hi = (lo + SCAN_STEP_KM).min(MAX_SCAN_KM);
        if r(hi)? < 0.0 {
            return bisect(lo, hi, DISTANCE_RESOLUTION_KM, r);
        }
        lo = hi;
    }
    Err(no_bracket)
}

/// Channel fidelity at which the loss-free key rate vanishes (`e_y = e_x`,
/// `L = 0`, no dark counts).
pub fn threshold_fidelity(params: &SystemParams) -> Result<f64> {
    let at = |e_x: f64| {
        let p = SystemParams {
            e_x,
            e_y: e_x,
            detector: DetectorParams {
                p_d: 0.0,
                ..params.detector
            },
            ..*params
        };
        key_rate(&p, 0.0)
    };
    let (lo, hi) = (0.0, 0.25);
    if at(lo)? <= 0.0 || at(hi)? >= 0.0 {
        return Err(Error::NoSignChange {
            what: "R(e_x)",
            lo,
            hi,
        });
    }
    Ok(1.0 - bisect(lo, hi, FIDELITY_RESOLUTION, at)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub l_km: f64,
    pub r_raw: f64,
    /// `max(R, 0)`, the exported value.
    pub r_clamped: f64,
    pub e_tot: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub params: SystemParams,
    pub points: Vec<RatePoint>,
}

/// Evaluates [`key_rate_with_dark_counts`] on a distance grid.
pub fn rate_curve(params: &SystemParams, grid: &[f64]) -> Result<RateCurve> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let e = end_to_end_error(params.e_x, params.e_y)?;
    let points = grid
        .iter()
        .map(|&l| {
            let r_raw = key_rate_with_dark_counts(params, l)?;
            Ok(RatePoint {
                l_km: l,
                r_raw,
                r_clamped: r_raw.max(0.0),
                e_tot: total_error(params, l, e)?,
                q: params.q(l)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateCurve {
        params: *params,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn reference(fidelity: f64, topology: Topology, p_d: f64) -> SystemParams {
        let det = DetectorParams::new(0.93, p_d, 0.863).unwrap();
        SystemParams::with_fidelity(det, 0.19, fidelity, topology).unwrap()
    }

    fn ideal(e_x: f64) -> SystemParams {
        SystemParams {
            detector: DetectorParams::IDEAL,
            alpha: 0.19,
            e_x,
            e_y: e_x,
            topology: Topology::Symmetric,
            q_eve_ratio: 1.0,
        }
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // mpmath, 30 digits
        assert_abs_diff_eq!(
            binary_entropy(0.11).unwrap(),
            0.499915958164528,
            epsilon = 1e-14
        );
        assert!(binary_entropy(1.1).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn holevo_values() {
        assert_eq!(holevo_bound(0.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(holevo_bound(0.25, 0.25, 1.0).unwrap(), 1.0);
        assert!(matches!(
            holevo_bound(0.3, 0.3, 1.0),
            Err(Error::ValidityRegion(_))
        ));
    }

    #[test]
    fn unbiased_reduction() {
        for k in 1..=250 {
            let q = k as f64 * 0.001;
            let e = end_to_end_error(q, q).unwrap();
            assert_abs_diff_eq!(e, 2.0 * q * (1.0 - q), epsilon = 1e-12);
            assert_abs_diff_eq!(
                unbiased_eve_entropy(e).unwrap(),
                binary_entropy(2.0 * q).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn rate_at_origin() {
        assert_eq!(key_rate(&ideal(0.0), 0.0).unwrap(), 1.0);
        let r = key_rate(&reference(1.0, Topology::Symmetric, 0.0), 0.0).unwrap();
        assert_abs_diff_eq!(r, 0.93 * 0.93 * 0.863, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 0.7464, epsilon = 1e-4);
    }

    #[test]
    fn threshold() {
        let p = threshold_fidelity(&reference(0.99, Topology::Symmetric, 1e-7)).unwrap();
        assert!((p - 0.943).abs() < 1e-3, "{p}");
        let e_x = 1.0 - p;
        assert_abs_diff_eq!(end_to_end_error(e_x, e_x).unwrap(), 0.107, epsilon = 1e-3);
        assert!(key_rate(&ideal(e_x - 1e-4), 0.0).unwrap() > 0.0);
        assert!(key_rate(&ideal(e_x + 1e-4), 0.0).unwrap() < 0.0);
    }

    #[test]
    fn dark_count_terms() {
        assert_eq!(
            dark_count_errors(&reference(0.99, Topology::Symmetric, 0.0), 100.0).unwrap(),
            (0.0, 0.0)
        );
        let (d1, d2) =
            dark_count_errors(&reference(0.99, Topology::Symmetric, 1e-7), 150.0).unwrap();
        assert_abs_diff_eq!(d1, 4e-14 * (1.0 - 1e-7f64).powi(2), epsilon = 1e-28);
        // mpmath: 4·t·0.863·0.93·1e-7·(1−1e-7)²·(1−0.93t), t = 10^(−5.7)
        assert!((d2 - 6.40549715835764e-13).abs() / d2 < 1e-9, "{d2}");
    }

    #[test]
    fn proximal_dark_counts_are_symmetric_at_half_distance() {
        let sym = reference(0.97, Topology::Symmetric, 1e-6);
        let prox = reference(0.97, Topology::Proximal, 1e-6);
        for k in 0..=100 {
            let l = 4.0 * k as f64;
            let a = dark_count_errors(&prox, l).unwrap().1;
            let b = dark_count_errors(&sym, l / 2.0).unwrap().1;
            assert!((a - b).abs() <= 1e-15 * a.max(1e-300), "L={l}");
        }
    }

    #[test]
    fn total_error_limits() {
        let p = reference(0.99, Topology::Symmetric, 0.0);
        assert_eq!(total_error(&p, 80.0, 0.0198).unwrap(), 0.0198);
        let p = reference(0.99, Topology::Symmetric, 1e-7);
        let e = end_to_end_error(0.01, 0.01).unwrap();
        let e_tot = total_error(&p, 150.0, e).unwrap();
        // mpmath oracle
        assert!((e_tot - 0.114760192455158).abs() < 1e-9, "{e_tot}");
        assert!((e_tot - 0.115).abs() < 0.005);
        // far beyond the cutoff only dark counts remain
        let (d1, d2) = dark_count_errors(&p, 2000.0).unwrap();
        let far = total_error(&p, 2000.0, e).unwrap();
        assert_abs_diff_eq!(far, (d1 + 0.5 * d2) / (d1 + d2), epsilon = 1e-9);
    }

    #[test]
    fn dark_count_rate_reduces_exactly() {
        for fid in [1.0, 0.99, 0.97] {
            for topo in [Topology::Symmetric, Topology::Proximal] {
                let p = reference(fid, topo, 0.0);
                for l in [0.0, 10.0, 163.0, 400.0] {
                    assert_eq!(
                        key_rate_with_dark_counts(&p, l).unwrap(),
                        key_rate(&p, l).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn distance_limits() {
        let cases = [
            (0.99, Topology::Symmetric, 163.0, 5.0),
            (0.97, Topology::Symmetric, 153.0, 5.0),
            (0.99, Topology::Proximal, 326.0, 8.0),
            (0.97, Topology::Proximal, 306.0, 8.0),
        ];
        for (fid, topo, want, tol) in cases {
            let p = reference(fid, topo, 1e-7);
            let l = max_distance(&p).unwrap();
            assert!((l - want).abs() <= tol, "{fid} {topo}: {l}");
            assert!(key_rate_with_dark_counts(&p, l - 0.05).unwrap() > 0.0);
            assert!(key_rate_with_dark_counts(&p, l + 0.05).unwrap() < 0.0);
        }
        let p = reference(0.99, Topology::Symmetric, 1e-7);
        assert!(key_rate_with_dark_counts(&p, 160.0).unwrap() > 0.0);
        assert!(key_rate_with_dark_counts(&p, 166.0).unwrap() < 0.0);
        let p = reference(0.97, Topology::Proximal, 1e-7);
        let l = max_distance(&p).unwrap();
        assert!((296.0..=316.0).contains(&l));
    }

    #[test]
    fn no_crossing_without_noise() {
        let p = reference(1.0, Topology::Symmetric, 0.0);
        assert!(matches!(max_distance(&p), Err(Error::NoSignChange { .. })));
        let p = reference(0.9, Topology::Symmetric, 1e-7);
        assert!(matches!(max_distance(&p), Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn curve_properties() {
        let grid: Vec<f64> = (0..=400).map(|k| k as f64).collect();
        let clean = rate_curve(&reference(1.0, Topology::Symmetric, 0.0), &grid).unwrap();
        for pt in &clean.points {
            assert_eq!(pt.r_raw, pt.q);
            assert!(pt.r_raw > 0.0);
        }
        let hi = rate_curve(&reference(0.99, Topology::Symmetric, 1e-7), &grid).unwrap();
        let lo = rate_curve(&reference(0.97, Topology::Symmetric, 1e-7), &grid).unwrap();
        for (a, b) in hi.points.iter().zip(&lo.points) {
            assert!(a.r_clamped >= b.r_clamped);
            assert!(a.r_clamped >= 0.0 && a.r_raw.is_finite());
        }
        assert!(rate_curve(&reference(0.99, Topology::Symmetric, 1e-7), &[]).is_err());
    }

    #[test]
    fn curve_decreases_before_cutoff() {
        for fid in [0.99, 0.97] {
            for topo in [Topology::Symmetric, Topology::Proximal] {
                let p = reference(fid, topo, 1e-7);
                let cutoff = max_distance(&p).unwrap();
                let grid: Vec<f64> = (0..)
                    .map(|k| k as f64 * 0.5)
                    .take_while(|&l| l < cutoff)
                    .collect();
                let c = rate_curve(&p, &grid).unwrap();
                assert!(c.points.windows(2).all(|w| w[1].r_raw < w[0].r_raw));
            }
        }
    }

    proptest! {
        #[test]
        fn entropy_symmetric_and_bounded(x in 0.0..=1.0f64) {
            let h = binary_entropy(x).unwrap();
            prop_assert!((0.0..=1.0).contains(&h));
            prop_assert!((h - binary_entropy(1.0 - x).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn rate_decreases_with_distance(l in 0.0..140.0f64, d in 0.1..10.0f64, fid in 0.97..=1.0f64) {
            let p = reference(fid, Topology::Symmetric, 1e-7);
            prop_assert!(key_rate_with_dark_counts(&p, l + d).unwrap() < key_rate_with_dark_counts(&p, l).unwrap());
        }

        #[test]
        fn higher_fidelity_dominates(l in 0.0..300.0f64, f1 in 0.95..=1.0f64, f2 in 0.95..=1.0f64) {
            let (hi, lo) = if f1 >= f2 { (f1, f2) } else { (f2, f1) };
            let a = key_rate_with_dark_counts(&reference(hi, Topology::Proximal, 1e-7), l).unwrap();
            let b = key_rate_with_dark_counts(&reference(lo, Topology::Proximal, 1e-7), l).unwrap();
            prop_assert!(a >= b - 1e-15);
        }
    }
}
