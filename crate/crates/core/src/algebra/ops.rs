//! Composite-space operator construction: Kronecker products, embeddings,
//! ladder operators, standard states and partial traces.

use num_complex::Complex64 as C64;

use super::layout::SpaceLayout;
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    let oc = ac * bc;
    let od = out.data_mut();
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s.re == 0.0 && s.im == 0.0 {
                continue;
            }
            for k in 0..br {
                let row = (i * br + k) * oc + j * bc;
                let brow = b.row(k);
                for l in 0..bc {
                    od[row + l] = s * brow[l];
                }
            }
        }
    }
    out
}

/// Kronecker product of a sequence, left to right.
pub fn kron_all(factors: &[ComplexMatrix]) -> ComplexMatrix {
    let mut iter = factors.iter();
    let first = iter.next().cloned().unwrap_or_else(|| ComplexMatrix::identity(1));
    iter.fold(first, |acc, f| kron(&acc, f))
}

/// Places `op` on subsystem `index`, identity elsewhere.
pub fn embed(op: &ComplexMatrix, index: usize, layout: &SpaceLayout) -> Result<ComplexMatrix> {
    if index >= layout.len() {
        return Err(Error::arg(format!("subsystem index {index} out of range")));
    }
    let d = layout.dim(index);
    if op.shape() != (d, d) {
        return Err(Error::dim(format!(
            "operator {:?} does not fit subsystem `{}` of dim {d}",
            op.shape(),
            layout.labels()[index]
        )));
    }
    let left: usize = layout.dims()[..index].iter().product();
    let right: usize = layout.dims()[index + 1..].iter().product();
    let inner = kron(op, &ComplexMatrix::identity(right));
    Ok(kron(&ComplexMatrix::identity(left), &inner))
}

pub fn annihilation(dim: usize) -> Result<ComplexMatrix> {
    if dim < 2 {
        return Err(Error::arg(format!("ladder operator needs dim >= 2, got {dim}")));
    }
    let mut a = ComplexMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(a)
}

pub fn creation(dim: usize) -> Result<ComplexMatrix> {
    Ok(annihilation(dim)?.dagger())
}

/// `diag(0, 1, ..., dim-1)`
pub fn number(dim: usize) -> Result<ComplexMatrix> {
    if dim < 2 {
        return Err(Error::arg(format!("number operator needs dim >= 2, got {dim}")));
    }
    Ok(ComplexMatrix::real_diagonal(&(0..dim).map(|n| n as f64).collect::<Vec<_>>()))
}

pub fn fock_state(dim: usize, n: usize) -> Result<ComplexMatrix> {
    if n >= dim {
        return Err(Error::arg(format!("occupation {n} outside Fock space of dim {dim}")));
    }
    let mut v = vec![C64::new(0.0, 0.0); dim];
    v[n] = C64::new(1.0, 0.0);
    Ok(ComplexMatrix::column(&v))
}

/// Truncated Bose-Einstein state, renormalized to unit trace.
pub fn thermal_state(dim: usize, n_th: f64) -> Result<ComplexMatrix> {
    if !(n_th >= 0.0) || !n_th.is_finite() {
        return Err(Error::arg(format!("thermal occupation must be >= 0, got {n_th}")));
    }
    if dim < 1 {
        return Err(Error::arg("thermal state needs dim >= 1"));
    }
    let q = n_th / (1.0 + n_th);
    let mut p: Vec<f64> = (0..dim).map(|n| q.powi(n as i32)).collect();
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= z);
    Ok(ComplexMatrix::real_diagonal(&p))
}

/// `|psi><psi|` for a column vector.
pub fn projector(ket: &ComplexMatrix) -> Result<ComplexMatrix> {
    if ket.cols() != 1 {
        return Err(Error::dim(format!("expected a column vector, got {:?}", ket.shape())));
    }
    ket.matmul(&ket.dagger())
}

/// Reduced density matrix on the `keep` subsystems (in layout order).
pub fn partial_trace(rho: &ComplexMatrix, layout: &SpaceLayout, keep: &[usize]) -> Result<ComplexMatrix> {
    let n = layout.total_dim();
    if rho.shape() != (n, n) {
        return Err(Error::dim(format!(
            "density matrix {:?} vs layout dimension {n}",
            rho.shape()
        )));
    }
    let kept = {
        let mut k = keep.to_vec();
        k.sort_unstable();
        k.dedup();
        if let Some(&bad) = k.iter().find(|&&i| i >= layout.len()) {
            return Err(Error::arg(format!("subsystem index {bad} out of range")));
        }
        k
    };
    let traced: Vec<usize> = (0..layout.len()).filter(|i| !kept.contains(i)).collect();
    let dk: usize = kept.iter().map(|&i| layout.dim(i)).product();
    let dt: usize = traced.iter().map(|&i| layout.dim(i)).product();
    let strides = layout.strides();

    // Flat offsets contributed by each kept / traced multi-index.
    let offsets = |subs: &[usize], count: usize| -> Vec<usize> {
        (0..count)
            .map(|mut f| {
                let mut off = 0;
                for &s in subs.iter().rev() {
                    let d = layout.dim(s);
                    off += (f % d) * strides[s];
                    f /= d;
                }
                off
            })
            .collect()
    };
    let ko = offsets(&kept, dk);
    let to = offsets(&traced, dt);

    let mut out = ComplexMatrix::zeros(dk, dk);
    for (a, &oa) in ko.iter().enumerate() {
        for (b, &ob) in ko.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &t in &to {
                acc += rho[(oa + t, ob + t)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}
