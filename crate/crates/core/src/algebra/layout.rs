//! Tensor-product structure of the composite Hilbert space.

use crate::error::{Error, Result};

/// Ordered subsystem dimensions with unique labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceLayout {
    dims: Vec<usize>,
    labels: Vec<String>,
}

impl SpaceLayout {
    pub fn new(dims: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::arg("layout needs at least one subsystem"));
        }
        if dims.len() != labels.len() {
            return Err(Error::dim(format!("{} dims but {} labels", dims.len(), labels.len())));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::arg(format!("subsystem dimension {d} < 2")));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::arg(format!("duplicate subsystem label `{l}`")));
            }
        }
        Ok(Self { dims, labels })
    }

    /// The (q1, q2, m) layout used by every gate model.
    pub fn qqm(q1: usize, q2: usize, m: usize) -> Result<Self> {
        Self::new(vec![q1, q2, m], vec!["q1".into(), "q2".into(), "m".into()])
    }

    /// Anonymous layout labelled `s0, s1, ...`.
    pub fn from_dims(dims: &[usize]) -> Result<Self> {
        let labels = (0..dims.len()).map(|i| format!("s{i}")).collect();
        Self::new(dims.to_vec(), labels)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn dim(&self, index: usize) -> usize {
        self.dims[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Row-major strides: flat index = sum(occupation[k] * stride[k]).
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.dims[k + 1];
        }
        s
    }

    pub fn flat_index(&self, occupations: &[usize]) -> usize {
        debug_assert_eq!(occupations.len(), self.dims.len());
        occupations.iter().zip(self.strides()).map(|(n, s)| n * s).sum()
    }

    pub fn occupations(&self, mut flat: usize) -> Vec<usize> {
        let mut occ = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            occ[k] = flat % self.dims[k];
            flat /= self.dims[k];
        }
        occ
    }

    /// Sub-layout of the listed subsystems, in layout order.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let mut idx = keep.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if let Some(&bad) = idx.iter().find(|&&k| k >= self.dims.len()) {
            return Err(Error::arg(format!("subsystem index {bad} out of range")));
        }
        Self::new(
            idx.iter().map(|&k| self.dims[k]).collect(),
            idx.iter().map(|&k| self.labels[k].clone()).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_dims_and_duplicates() {
        assert!(SpaceLayout::from_dims(&[2, 1]).is_err());
        assert!(SpaceLayout::new(vec![2, 2], vec!["a".into(), "a".into()]).is_err());
        assert!(SpaceLayout::new(vec![2], vec![]).is_err());
    }

    #[test]
    fn flat_index_round_trip() {
        let l = SpaceLayout::qqm(3, 3, 4).unwrap();
        assert_eq!(l.total_dim(), 36);
        assert_eq!(l.strides(), vec![12, 4, 1]);
        for f in 0..36 {
            assert_eq!(l.flat_index(&l.occupations(f)), f);
        }
        assert_eq!(l.flat_index(&[1, 0, 2]), 14);
        assert_eq!(l.index_of("m"), Some(2));
    }
}
