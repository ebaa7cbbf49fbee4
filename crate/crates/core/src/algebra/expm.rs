//! Matrix exponential by scaling and squaring with diagonal Padé approximants.

use num_complex::Complex64 as C64;

use super::matrix::{gemm_into, solve, ComplexMatrix};
use crate::error::{Error, Result};

const THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
    (13, 5.371_920_351_148_152),
];

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `exp(A)` for square `A`.
pub fn matrix_exp(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::dim(format!("matrix_exp of non-square {:?}", a.shape())));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(ComplexMatrix::zeros(0, 0));
    }
    if a.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::arg("matrix_exp: non-finite entry"));
    }
    let norm = a.one_norm();
    if norm == 0.0 {
        return Ok(ComplexMatrix::identity(n));
    }
    for &(m, theta) in &THETA[..4] {
        if norm <= theta {
            return pade_low(a, m);
        }
    }
    let theta13 = THETA[4].1;
    let s = if norm > theta13 { (norm / theta13).log2().ceil() as i32 } else { 0 };
    let scaled = a.scale_real(0.5f64.powi(s));
    let mut x = pade13(&scaled)?;
    for _ in 0..s {
        x = square(&x);
    }
    Ok(x)
}

fn square(x: &ComplexMatrix) -> ComplexMatrix {
    let n = x.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    gemm_into(x, x, &mut out, C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    out
}

fn lincomb(terms: &[(f64, &ComplexMatrix)], ident: f64, n: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::identity(n).scale_real(ident);
    for &(c, m) in terms {
        out.axpy(C64::new(c, 0.0), m);
    }
    out
}

fn finish(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<ComplexMatrix> {
    let p = v + u;
    let q = v - u;
    solve(&q, &p)
}

fn pade_low(a: &ComplexMatrix, m: usize) -> Result<ComplexMatrix> {
    let n = a.rows();
    let b: &[f64] = match m {
        3 => &B3,
        5 => &B5,
        7 => &B7,
        9 => &B9,
        _ => unreachable!("unsupported Padé degree"),
    };
    let a2 = square(a);
    let mut powers = vec![a2.clone()];
    for _ in 1..m / 2 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    // powers[k] = A^{2(k+1)}
    let odd: Vec<(f64, &ComplexMatrix)> = (1..=m / 2).map(|k| (b[2 * k + 1], &powers[k - 1])).collect();
    let even: Vec<(f64, &ComplexMatrix)> = (1..=m / 2).map(|k| (b[2 * k], &powers[k - 1])).collect();
    let u = a * &lincomb(&odd, b[1], n);
    let v = lincomb(&even, b[0], n);
    finish(&u, &v)
}

fn pade13(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.rows();
    let b = &B13;
    let a2 = square(a);
    let a4 = square(&a2);
    let a6 = &a4 * &a2;
    let inner_u = lincomb(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], 0.0, n);
    let mut u_sum = &a6 * &inner_u;
    u_sum += &lincomb(&[(b[7], &a6), (b[5], &a4), (b[3], &a2)], b[1], n);
    let u = a * &u_sum;
    let inner_v = lincomb(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], 0.0, n);
    let mut v = &a6 * &inner_v;
    v += &lincomb(&[(b[6], &a6), (b[4], &a4), (b[2], &a2)], b[0], n);
    finish(&u, &v)
}
