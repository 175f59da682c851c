//! Shapes and multi-indices.
//!
//! Indices are stored zero-based. Everything that leaves the process
//! (serialized traces, CLI output, `Display`) uses one-based coordinates.
//! Linear indices follow the little-endian convention: `i_1` runs fastest.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, TtError};

/// Mode sizes `n_1..n_d` of a tensor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shape {
    dims: Vec<usize>,
}

impl Shape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(TtError::InvalidShape("a tensor needs at least one mode".into()));
        }
        if let Some(k) = dims.iter().position(|&n| n == 0) {
            return Err(TtError::InvalidShape(format!("mode {} has size 0", k + 1)));
        }
        Ok(Self { dims })
    }

    /// `d` modes of equal size `n`.
    pub fn uniform(d: usize, n: usize) -> Result<Self> {
        Self::new(vec![n; d])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn mode(&self, k: usize) -> usize {
        self.dims[k]
    }

    /// Total number of entries; `u128` so that shapes far beyond memory can
    /// still be described.
    pub fn numel(&self) -> u128 {
        self.dims.iter().fold(1u128, |acc, &n| acc.saturating_mul(n as u128))
    }

    /// Number of entries as `f64`, without overflow for huge shapes.
    pub fn numel_f64(&self) -> f64 {
        self.dims.iter().map(|&n| n as f64).product()
    }

    /// Entry count if it fits within `limit`.
    pub fn dense_len(&self, limit: usize) -> Result<usize> {
        let n = self.numel();
        if n > limit as u128 {
            return Err(TtError::DenseLimit { requested: n, limit });
        }
        Ok(n as usize)
    }

    pub fn check(&self, idx: &[usize]) -> Result<()> {
        if idx.len() != self.dims.len() {
            return Err(TtError::WrongArity {
                expected: self.dims.len(),
                got: idx.len(),
            });
        }
        for (mode, (&i, &n)) in idx.iter().zip(&self.dims).enumerate() {
            if i >= n {
                return Err(TtError::IndexOutOfRange {
                    mode,
                    index: i,
                    size: n,
                });
            }
        }
        Ok(())
    }

    /// Little-endian linear index. Caller guarantees `idx` is valid and the
    /// shape is dense-sized.
    pub fn linear(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.dims).rev().fold(0, |lin, (&i, &n)| lin * n + i)
    }

    /// Inverse of [`Shape::linear`], written into `out`.
    pub fn unravel_into(&self, mut lin: usize, out: &mut [usize]) {
        for (slot, &n) in out.iter_mut().zip(&self.dims) {
            *slot = lin % n;
            lin /= n;
        }
    }

    pub fn unravel(&self, lin: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        self.unravel_into(lin, &mut out);
        out
    }

    /// Product of the first `k` mode sizes (rows of the `k`-th unfolding),
    /// saturating at `usize::MAX`.
    pub fn prefix_size(&self, k: usize) -> usize {
        self.dims[..k].iter().fold(1usize, |acc, &n| acc.saturating_mul(n))
    }

    /// Product of the trailing `d - k` mode sizes, saturating.
    pub fn suffix_size(&self, k: usize) -> usize {
        self.dims[k..].iter().fold(1usize, |acc, &n| acc.saturating_mul(n))
    }

    /// Iterates every multi-index in little-endian order.
    pub fn indices(&self) -> IndexIter<'_> {
        IndexIter {
            shape: self,
            current: Some(vec![0; self.dims.len()]),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|n| n.to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}

pub struct IndexIter<'a> {
    shape: &'a Shape,
    current: Option<Vec<usize>>,
}

impl Iterator for IndexIter<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.current.take()?;
        let mut next = cur.clone();
        for (slot, &n) in next.iter_mut().zip(self.shape.dims()) {
            *slot += 1;
            if *slot < n {
                self.current = Some(next);
                return Some(cur);
            }
            *slot = 0;
        }
        Some(cur)
    }
}

/// A full multi-index `(i_1, ..., i_d)`, stored zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn from_one_based(coords: &[usize]) -> Result<Self> {
        coords
            .iter()
            .enumerate()
            .map(|(mode, &c)| {
                c.checked_sub(1).ok_or(TtError::IndexOutOfRange {
                    mode,
                    index: 0,
                    size: 0,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(MultiIndex)
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|&i| i + 1).collect()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl Serialize for MultiIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<usize>::deserialize(d)?;
        MultiIndex::from_one_based(&coords).map_err(serde::de::Error::custom)
    }
}
