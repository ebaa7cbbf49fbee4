//! Eigen-decomposition of Hermitian matrices by cyclic complex Jacobi rotations.

use num_complex::Complex64 as C64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Ascending eigenvalues and the matching orthonormal eigenvectors (as columns).
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the Hermitian part is used.
pub fn eigvalsh(a: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(jacobi(a, false)?.values)
}

pub fn eigh(a: &ComplexMatrix) -> Result<HermitianEigen> {
    jacobi(a, true)
}

fn jacobi(a: &ComplexMatrix, want_vectors: bool) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::dim(format!("eigen-decomposition of non-square {:?}", a.shape())));
    }
    let n = a.rows();
    let mut m = a.hermitize();
    let mut v = if want_vectors { ComplexMatrix::identity(n) } else { ComplexMatrix::zeros(0, 0) };
    let scale = m.max_abs().max(f64::MIN_POSITIVE);

    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 || r <= 1e-18 * scale {
                    continue;
                }
                let phase = apq / r;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let ph = phase.conj();
                let v00 = C64::new(c, 0.0);
                let v01 = C64::new(s, 0.0);
                let v10 = ph * -s;
                let v11 = ph * c;
                rotate(&mut m, p, q, v00, v01, v10, v11, true);
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                if want_vectors {
                    rotate(&mut v, p, q, v00, v01, v10, v11, false);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = if want_vectors {
        ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])])
    } else {
        v
    };
    Ok(HermitianEigen { values, vectors })
}

/// Applies `A <- A V` on columns p, q and, when `both`, `A <- V^dagger A` on rows p, q.
#[allow(clippy::too_many_arguments)]
fn rotate(a: &mut ComplexMatrix, p: usize, q: usize, v00: C64, v01: C64, v10: C64, v11: C64, both: bool) {
    let n = a.rows();
    for k in 0..n {
        let x = a[(k, p)];
        let y = a[(k, q)];
        a[(k, p)] = x * v00 + y * v10;
        a[(k, q)] = x * v01 + y * v11;
    }
    if both {
        for k in 0..n {
            let x = a[(p, k)];
            let y = a[(q, k)];
            a[(p, k)] = v00.conj() * x + v10.conj() * y;
            a[(q, k)] = v01.conj() * x + v11.conj() * y;
        }
    }
}

/// Smallest eigenvalue of the Hermitian part.
pub fn min_eigenvalue(a: &ComplexMatrix) -> Result<f64> {
    Ok(eigvalsh(a)?.first().copied().unwrap_or(0.0))
}

/// `0.5 * || rho - sigma ||_1` for Hermitian arguments.
pub fn trace_distance(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    let diff = rho.try_sub(sigma)?;
    Ok(0.5 * eigvalsh(&diff)?.iter().map(|x| x.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = ComplexMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        a.hermitize()
    }

    #[test]
    fn pauli_y_spectrum() {
        let sy = ComplexMatrix::from_rows(&[&[C64::new(0.0, 0.0), C64::new(0.0, -1.0)], &[C64::new(0.0, 1.0), C64::new(0.0, 0.0)]]);
        let ev = eigvalsh(&sy).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reconstructs_random_hermitian() {
        for (n, seed) in [(3, 1), (8, 2), (17, 3)] {
            let h = random_hermitian(n, seed);
            let e = eigh(&h).unwrap();
            let d = ComplexMatrix::real_diagonal(&e.values);
            let back = &(&e.vectors * &d) * &e.vectors.dagger();
            assert!((&back - &h).max_abs() < 1e-12, "n = {n}");
            let gram = &e.vectors.dagger() * &e.vectors;
            assert!((&gram - &ComplexMatrix::identity(n)).max_abs() < 1e-12);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
            let tr: f64 = e.values.iter().sum();
            assert!((tr - h.trace().re).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_distance_of_orthogonal_states() {
        let a = ComplexMatrix::real_diagonal(&[1.0, 0.0]);
        let b = ComplexMatrix::real_diagonal(&[0.0, 1.0]);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
        assert!(trace_distance(&a, &a).unwrap().abs() < 1e-15);
    }
}
