//! Compressed sparse row storage for superoperators, plus block discovery.

use num_complex::Complex64 as C64;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// Square CSR matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<C64>,
}

impl CsrMatrix {
    /// Sums duplicate entries and drops exact zeros.
    pub fn from_triplets(n: usize, mut trip: Vec<(usize, usize, C64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = trip.iter().find(|t| t.0 >= n || t.1 >= n) {
            return Err(Error::dim(format!("triplet ({r}, {c}) outside {n}x{n}")));
        }
        trip.sort_unstable_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(trip.len());
        let mut vals: Vec<C64> = Vec::with_capacity(trip.len());
        let mut rows = Vec::with_capacity(trip.len());
        let mut i = 0;
        while i < trip.len() {
            let (r, c, mut v) = trip[i];
            let mut j = i + 1;
            while j < trip.len() && trip[j].0 == r && trip[j].1 == c {
                v += trip[j].2;
                j += 1;
            }
            if v.re != 0.0 || v.im != 0.0 {
                rows.push(r);
                col_idx.push(c);
                vals.push(v);
            }
            i = j;
        }
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self { n, row_ptr, col_idx, vals })
    }

    pub fn from_dense(a: &ComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dim(format!("sparse storage needs square input, got {:?}", a.shape())));
        }
        let n = a.rows();
        let mut trip = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let v = a[(r, c)];
                if v.re != 0.0 || v.im != 0.0 {
                    trip.push((r, c, v));
                }
            }
        }
        Self::from_triplets(n, trip)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    /// `y = A x`
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            *out = acc;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for (c, v) in self.row_entries(r) {
                out[(r, c)] = v;
            }
        }
        out
    }

    /// Largest absolute row sum (the infinity norm).
    pub fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|r| self.row_entries(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Weakly connected components of the sparsity pattern. Each component is an
    /// invariant subspace, so the matrix is block diagonal after permutation.
    /// Components are returned sorted by their smallest index; indices within a
    /// component are ascending.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut label = vec![usize::MAX; self.n];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in 0..self.n {
            let root = find(&mut parent, i);
            if label[root] == usize::MAX {
                label[root] = groups.len();
                groups.push(Vec::new());
            }
            groups[label[root]].push(i);
        }
        groups
    }

    /// Principal sub-matrix on `indices` (which must be an invariant block for the
    /// result to be meaningful), in the order given.
    pub fn block(&self, indices: &[usize]) -> CsrMatrix {
        let mut local = vec![usize::MAX; self.n];
        for (k, &i) in indices.iter().enumerate() {
            local[i] = k;
        }
        let mut trip = Vec::new();
        for (k, &r) in indices.iter().enumerate() {
            for (c, v) in self.row_entries(r) {
                if local[c] != usize::MAX {
                    trip.push((k, local[c], v));
                }
            }
        }
        CsrMatrix::from_triplets(indices.len(), trip).expect("indices are in range by construction")
    }

    pub fn scale(&self, s: C64) -> CsrMatrix {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out
    }
}
