//! Dense row-major complex matrices.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Dense complex matrix stored row-major.
///
/// This is the single carrier type for operators, kets (column vectors),
/// density matrices and superoperators.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} elements supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested real rows. Panics on ragged input; meant for literals.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        Self::from_fn(n, m, |r, c| C64::new(rows[r][c], 0.0))
    }

    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        Self::from_fn(n, m, |r, c| rows[r][c])
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m.data[i * n + i] = e;
        }
        m
    }

    pub fn real_diagonal(entries: &[f64]) -> Self {
        let v: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::diagonal(&v)
    }

    /// Column vector from amplitudes.
    pub fn column(amplitudes: &[C64]) -> Self {
        Self { rows: amplitudes.len(), cols: 1, data: amplitudes.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: C64, other: &Self) {
        assert_eq!(self.shape(), other.shape(), "axpy shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    fn check_same_shape(&self, other: &Self, op: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::dim(format!(
                "{op}: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    /// Matrix product, backed by the `matrixmultiply` complex GEMM kernel.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "matmul: {:?} x {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        gemm_into(self, other, &mut out, C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        Ok(out)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        ab.try_sub(&ba)
    }

    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        let ab = self.matmul(other)?;
        let ba = other.matmul(self)?;
        ab.try_add(&ba)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `tr(A rho)` computed without forming the product.
    pub fn expectation(&self, rho: &Self) -> Result<C64> {
        if !self.is_square() || self.shape() != rho.shape() {
            return Err(Error::dim(format!(
                "expectation: {:?} vs {:?}",
                self.shape(),
                rho.shape()
            )));
        }
        let n = self.rows;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * rho.data[k * n + i];
            }
        }
        Ok(acc)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut sums = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (c, s) in sums.iter_mut().enumerate() {
                *s += self.data[r * self.cols + c].norm();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// Largest element of `|A - A^dagger|`, relative to the largest element of `|A|`.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst / scale
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// Replaces the matrix by `(A + A^dagger)/2`.
    pub fn hermitize(&self) -> Self {
        let n = self.rows;
        Self::from_fn(n, n, |r, c| (self[(r, c)] + self[(c, r)].conj()) * 0.5)
    }

    /// Extracts the square sub-matrix on the given index set.
    pub fn submatrix(&self, indices: &[usize]) -> Self {
        Self::from_fn(indices.len(), indices.len(), |r, c| self[(indices[r], indices[c])])
    }

    /// Column-stacking vectorization.
    pub fn vectorize(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(self.rows * self.cols);
        for c in 0..self.cols {
            for r in 0..self.rows {
                v.push(self[(r, c)]);
            }
        }
        v
    }

    /// Inverse of [`vectorize`](Self::vectorize) for a square `n x n` matrix.
    pub fn unvectorize(v: &[C64], n: usize) -> Result<Self> {
        if v.len() != n * n {
            return Err(Error::dim(format!("cannot reshape {} entries to {n}x{n}", v.len())));
        }
        Ok(Self::from_fn(n, n, |r, c| v[c * n + r]))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }
}

/// `c = alpha * a * b + beta * c`
pub(crate) fn gemm_into(a: &ComplexMatrix, b: &ComplexMatrix, c: &mut ComplexMatrix, alpha: C64, beta: C64) {
    debug_assert_eq!(a.cols, b.rows);
    debug_assert_eq!(c.rows, a.rows);
    debug_assert_eq!(c.cols, b.cols);
    let (m, k, n) = (a.rows, a.cols, b.cols);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: Complex64 is #[repr(C)] { re, im }, layout-identical to [f64; 2]. The
    // pointers cover m*k, k*n and m*n elements with the row-major strides given.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [alpha.re, alpha.im],
            a.data.as_ptr() as *const [f64; 2],
            k as isize,
            1,
            b.data.as_ptr() as *const [f64; 2],
            n as isize,
            1,
            [beta.re, beta.im],
            c.data.as_mut_ptr() as *mut [f64; 2],
            n as isize,
            1,
        );
    }
}

/// Solves `A X = B` by LU decomposition with partial pivoting.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() || a.rows != b.rows {
        return Err(Error::dim(format!("solve: {:?} with rhs {:?}", a.shape(), b.shape())));
    }
    let n = a.rows;
    let nrhs = b.cols;
    let mut lu = a.data.clone();
    let mut x = b.data.clone();
    for col in 0..n {
        let mut piv = col;
        let mut best = lu[col * n + col].norm();
        for r in col + 1..n {
            let v = lu[r * n + col].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return Err(Error::arg("solve: singular matrix"));
        }
        if piv != col {
            for c in 0..n {
                lu.swap(col * n + c, piv * n + c);
            }
            for c in 0..nrhs {
                x.swap(col * nrhs + c, piv * nrhs + c);
            }
        }
        let inv = C64::new(1.0, 0.0) / lu[col * n + col];
        let (head, tail) = lu.split_at_mut((col + 1) * n);
        let pivot_row = &head[col * n..col * n + n];
        let (xhead, xtail) = x.split_at_mut((col + 1) * nrhs);
        let pivot_rhs = &xhead[col * nrhs..col * nrhs + nrhs];
        for (r_off, row) in tail.chunks_exact_mut(n).enumerate() {
            let f = row[col] * inv;
            if f.re == 0.0 && f.im == 0.0 {
                continue;
            }
            row[col] = f;
            for c in col + 1..n {
                row[c] -= f * pivot_row[c];
            }
            let xr = &mut xtail[r_off * nrhs..(r_off + 1) * nrhs];
            for c in 0..nrhs {
                xr[c] -= f * pivot_rhs[c];
            }
        }
    }
    // back substitution
    for row in (0..n).rev() {
        let inv = C64::new(1.0, 0.0) / lu[row * n + row];
        for c in 0..nrhs {
            let mut acc = x[row * nrhs + c];
            for k in row + 1..n {
                acc -= lu[row * n + k] * x[k * nrhs + c];
            }
            x[row * nrhs + c] = acc * inv;
        }
    }
    ComplexMatrix::from_vec(n, nrhs, x)
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

// Operator sugar panics on shape mismatch; fallible variants are the `try_*`/`matmul` methods.
impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_add(rhs).expect("shape mismatch in +")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_sub(rhs).expect("shape mismatch in -")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("shape mismatch in *")
    }
}

impl Mul<C64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: C64) -> ComplexMatrix {
        self.scale(rhs)
    }
}

impl Mul<f64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: f64) -> ComplexMatrix {
        self.scale_real(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.axpy(C64::new(1.0, 0.0), rhs);
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        self.axpy(C64::new(-1.0, 0.0), rhs);
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(12) {
            write!(f, "  ")?;
            for c in 0..self.cols.min(12) {
                let z = self[(r, c)];
                write!(f, "{:>9.4}{:+.4}i ", z.re, z.im)?;
            }
            if self.cols > 12 {
                write!(f, "...")?;
            }
            writeln!(f)?;
        }
        if self.rows > 12 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(ComplexMatrix::from_vec(2, 2, vec![c(0.0, 0.0); 3]).is_err());
        assert!(ComplexMatrix::from_vec(2, 3, vec![c(0.0, 0.0); 6]).is_ok());
    }

    #[test]
    fn matmul_against_naive() {
        let a = ComplexMatrix::from_fn(3, 4, |r, k| c(r as f64 + 0.5, k as f64 - 1.0));
        let b = ComplexMatrix::from_fn(4, 2, |k, cc| c((k * cc) as f64, 1.0 / (k + 1) as f64));
        let p = a.matmul(&b).unwrap();
        for r in 0..3 {
            for cc in 0..2 {
                let naive: C64 = (0..4).map(|k| a[(r, k)] * b[(k, cc)]).sum();
                assert!((p[(r, cc)] - naive).norm() < 1e-12);
            }
        }
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn solve_recovers_rhs() {
        let a = ComplexMatrix::from_fn(5, 5, |r, k| {
            if r == k {
                c(4.0, 1.0)
            } else {
                c(1.0 / (1 + r + k) as f64, (r as f64 - k as f64) * 0.1)
            }
        });
        let b = ComplexMatrix::from_fn(5, 2, |r, k| c(r as f64, k as f64));
        let x = solve(&a, &b).unwrap();
        let back = a.matmul(&x).unwrap();
        assert!((&back - &b).max_abs() < 1e-12);
    }

    #[test]
    fn solve_rejects_singular() {
        let a = ComplexMatrix::zeros(3, 3);
        assert!(solve(&a, &ComplexMatrix::identity(3)).is_err());
    }

    #[test]
    fn vectorize_is_column_stacking() {
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let v: Vec<f64> = m.vectorize().iter().map(|z| z.re).collect();
        assert_eq!(v, vec![1.0, 3.0, 2.0, 4.0]);
        assert_eq!(ComplexMatrix::unvectorize(&m.vectorize(), 2).unwrap(), m);
    }

    #[test]
    fn hermitian_defect_detects_asymmetry() {
        let h = ComplexMatrix::from_rows(&[&[c(1.0, 0.0), c(0.0, 2.0)], &[c(0.0, -2.0), c(3.0, 0.0)]]);
        assert!(h.is_hermitian(1e-14));
        let nh = ComplexMatrix::from_rows(&[&[c(1.0, 0.0), c(0.0, 2.0)], &[c(0.0, 2.0), c(3.0, 0.0)]]);
        assert!(!nh.is_hermitian(1e-3));
    }

    #[test]
    fn expectation_matches_trace_of_product() {
        let a = ComplexMatrix::from_fn(3, 3, |r, k| c(r as f64, k as f64));
        let b = ComplexMatrix::from_fn(3, 3, |r, k| c(1.0, (r + k) as f64));
        let direct = a.matmul(&b).unwrap().trace();
        assert!((a.expectation(&b).unwrap() - direct).norm() < 1e-12);
    }
}
