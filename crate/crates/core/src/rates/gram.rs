//! Gram matrix of Eve's post-attack ensemble and its von Neumann entropy.

#![allow(clippy::needless_range_loop)]

use serde::{Deserialize, Serialize};

use super::{binary_entropy, check_validity};
use crate::error::{check_range, Result};
use crate::qstate::C64;
use crate::rates::jacobi::hermitian_eigen;

pub type Gram = [[C64; 8]; 8];

/// Number of β samples in the optimization sweep of [`gram_holevo`].
pub const BETA_SWEEP: usize = 41;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramSpectrum {
    pub beta: f64,
    /// Ascending.
    pub eigenvalues: [f64; 8],
    /// Von Neumann entropy in bits.
    pub entropy: f64,
}

/// The 8×8 Gram matrix with overlap parameters `α`, `β` (already divided by 16).
pub fn gram_matrix_with(alpha: f64, beta: f64) -> Gram {
    let c = |re: f64, im: f64| C64::new(re, im);
    let a = [
        [
            c(2.0, 0.0),
            c(0.0, 0.0),
            c(2.0 * alpha, 0.0),
            c(-2.0 * beta, 0.0),
        ],
        [
            c(0.0, 0.0),
            c(2.0, 0.0),
            c(-2.0 * beta, 0.0),
            c(2.0 * alpha, 0.0),
        ],
        [
            c(2.0 * alpha, 0.0),
            c(-2.0 * beta, 0.0),
            c(2.0, 0.0),
            c(0.0, 0.0),
        ],
        [
            c(-2.0 * beta, 0.0),
            c(2.0 * alpha, 0.0),
            c(0.0, 0.0),
            c(2.0, 0.0),
        ],
    ];
    let p = c(1.0 + beta, -alpha);
    let q = c(-alpha, 1.0 - beta);
    let r = c(alpha, 1.0 - beta);
    let s = c(-1.0 - beta, -alpha);
    let b = [[p, q, r, s], [q, p, s, r], [r, s, p, q], [s, r, q, p]];

    let mut g = [[C64::new(0.0, 0.0); 8]; 8];
    for i in 0..4 {
        for j in 0..4 {
            g[i][j] = a[i][j] / 16.0;
            g[i + 4][j + 4] = a[i][j] / 16.0;
            g[i][j + 4] = b[i][j] / 16.0;
            g[j + 4][i] = b[i][j].conj() / 16.0;
        }
    }
    g
}

/// Gram matrix with the auxiliary parameter `α = 0`.
pub fn gram_matrix(beta: f64) -> Gram {
    gram_matrix_with(0.0, beta)
}

fn entropy_bits(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.log2())
        .sum()
}

/// Numerical spectrum of [`gram_matrix`] at `β`.
pub fn gram_spectrum(beta: f64) -> Result<GramSpectrum> {
    check_range("beta", beta, -1.0, 1.0, "[-1, 1]")?;
    let eigen = hermitian_eigen(&gram_matrix(beta))?;
    Ok(GramSpectrum {
        beta,
        eigenvalues: eigen.values,
        entropy: entropy_bits(&eigen.values),
    })
}

/// Closed-form spectrum `{0×4, (1−β)/4 ×2, (1+β)/4 ×2}`, ascending.
pub fn closed_form_spectrum(beta: f64) -> [f64; 8] {
    let lo = (1.0 - beta.abs()) / 4.0;
    let hi = (1.0 + beta.abs()) / 4.0;
    [0.0, 0.0, 0.0, 0.0, lo, lo, hi, hi]
}

/// `S(β) = 1 + h((1+β)/2)`.
pub fn closed_form_entropy(beta: f64) -> Result<f64> {
    Ok(1.0 + binary_entropy((1.0 + beta) / 2.0)?)
}

/// Maximizes the numerical entropy over the allowed β interval and returns
/// the maximizing spectrum with the bound `S_max − 1`.
pub fn gram_holevo(e_x: f64, e_y: f64) -> Result<(GramSpectrum, f64)> {
    check_validity(e_x, e_y)?;
    let lo = (1.0 - 2.0 * e_x - 2.0 * e_y).max(-1.0);
    let hi = (1.0 + 2.0 * e_x - 2.0 * e_y).min(1.0);
    let mut best: Option<GramSpectrum> = None;
    for k in 0..BETA_SWEEP {
        let beta = (lo + (hi - lo) * k as f64 / (BETA_SWEEP - 1) as f64).clamp(lo, hi);
        let s = gram_spectrum(beta)?;
        if best.as_ref().is_none_or(|b| s.entropy > b.entropy) {
            best = Some(s);
        }
    }
    let best = best.expect("sweep is nonempty");
    let bound = best.entropy - 1.0;
    Ok((best, bound))
}
