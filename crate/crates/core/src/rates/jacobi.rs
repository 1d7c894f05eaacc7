//! Cyclic Jacobi eigensolver for small dense Hermitian matrices.
//!
//! Each rotation first removes the phase of `a_pq` with a diagonal unitary and
//! then applies an ordinary real Jacobi rotation, so `U = D·J`.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};
use crate::qstate::C64;

/// Stop once the off-diagonal Frobenius norm falls below this (relative).
pub const OFF_DIAGONAL_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues ascending; `vectors[k]` is the unit eigenvector of `values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEigen<const N: usize> {
    pub values: [f64; N],
    pub vectors: [[C64; N]; N],
    pub sweeps: usize,
}

fn off_norm<const N: usize>(a: &[[C64; N]; N]) -> f64 {
    let mut s = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if i != j {
                s += x.norm_sqr();
            }
        }
    }
    s.sqrt()
}

pub fn hermitian_eigen<const N: usize>(matrix: &[[C64; N]; N]) -> Result<HermitianEigen<N>> {
    let mut a = *matrix;
    let mut scale = 0.0f64;
    let mut dev = 0.0f64;
    for i in 0..N {
        for j in 0..N {
            scale += a[i][j].norm_sqr();
            dev = dev.max((a[i][j] - a[j][i].conj()).norm());
        }
    }
    let scale = scale.sqrt().max(1.0);
    if !dev.is_finite() || dev > 1e-12 * scale {
        return Err(Error::NotHermitian(dev));
    }

    let zero = C64::new(0.0, 0.0);
    let mut v = [[zero; N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }

    let mut sweeps = 0;
    while off_norm(&a) > OFF_DIAGONAL_TOL * scale && sweeps < MAX_SWEEPS {
        sweeps += 1;
        for p in 0..N {
            for q in p + 1..N {
                let apq = a[p][q];
                let r = apq.norm();
                if r < f64::MIN_POSITIVE {
                    continue;
                }
                let phase = (apq / r).conj(); // e^{-iφ}
                let tau = (a[q][q].re - a[p][p].re) / (2.0 * r);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let (upp, upq) = (C64::new(c, 0.0), C64::new(s, 0.0));
                let (uqp, uqq) = (-phase * s, phase * c);

                // A ← A·U
                for row in a.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * upp + y * uqp;
                    row[q] = x * upq + y * uqq;
                }
                // A ← Uᴴ·A
                for k in 0..N {
                    let (x, y) = (a[p][k], a[q][k]);
                    a[p][k] = upp.conj() * x + uqp.conj() * y;
                    a[q][k] = upq.conj() * x + uqq.conj() * y;
                }
                a[p][q] = zero;
                a[q][p] = zero;
                a[p][p].im = 0.0;
                a[q][q].im = 0.0;
                for row in v.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * upp + y * uqp;
                    row[q] = x * upq + y * uqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..N).collect();
    order.sort_by(|&i, &j| a[i][i].re.total_cmp(&a[j][j].re));
    let mut values = [0.0; N];
    let mut vectors = [[zero; N]; N];
    for (k, &i) in order.iter().enumerate() {
        values[k] = a[i][i].re;
        for r in 0..N {
            vectors[k][r] = v[r][i];
        }
    }
    Ok(HermitianEigen {
        values,
        vectors,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian<const N: usize>(rng: &mut ChaCha8Rng) -> [[C64; N]; N] {
        let mut m = [[C64::new(0.0, 0.0); N]; N];
        for i in 0..N {
            m[i][i] = C64::new(rng.gen_range(-2.0..2.0), 0.0);
            for j in i + 1..N {
                let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[i][j] = z;
                m[j][i] = z.conj();
            }
        }
        m
    }

    fn check<const N: usize>(m: &[[C64; N]; N]) {
        let e = hermitian_eigen(m).unwrap();
        let trace: f64 = (0..N).map(|i| m[i][i].re).sum();
        assert_abs_diff_eq!(e.values.iter().sum::<f64>(), trace, epsilon = 1e-12);
        for k in 0..N {
            let x = &e.vectors[k];
            let norm: f64 = x.iter().map(|z| z.norm_sqr()).sum();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
            for i in 0..N {
                let ax: C64 = (0..N).map(|j| m[i][j] * x[j]).sum();
                assert!((ax - x[i] * e.values[k]).norm() < 1e-11, "residual");
            }
            for l in k + 1..N {
                let dot: C64 = (0..N).map(|i| e.vectors[l][i].conj() * x[i]).sum();
                assert!(dot.norm() < 1e-11, "orthogonality");
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            check(&random_hermitian::<8>(&mut rng));
            check(&random_hermitian::<5>(&mut rng));
            check(&random_hermitian::<2>(&mut rng));
        }
    }

    #[test]
    fn pauli_y() {
        let i = C64::new(0.0, 1.0);
        let z = C64::new(0.0, 0.0);
        let e = hermitian_eigen(&[[z, -i], [i, z]]).unwrap();
        assert_abs_diff_eq!(e.values[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_input_needs_no_sweeps() {
        let d = |x| C64::new(x, 0.0);
        let z = d(0.0);
        let e = hermitian_eigen(&[[d(3.0), z, z], [z, d(-1.0), z], [z, z, d(2.0)]]).unwrap();
        assert_eq!(e.sweeps, 0);
        assert_eq!(e.values, [-1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_non_hermitian() {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        assert!(matches!(
            hermitian_eigen(&[[z, one], [z, z]]),
            Err(Error::NotHermitian(_))
        ));
    }
}
