//! Explicit dense tensors for desk-scale validation.

use nalgebra::DMatrix;

use crate::error::{Result, TtError};
use crate::index::Shape;

/// Default cap on the number of entries a dense tensor may hold.
pub const DEFAULT_DENSE_LIMIT: usize = 1 << 24;

/// A dense tensor with values in little-endian order (`i_1` fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Shape,
    values: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Shape, values: Vec<f64>) -> Result<Self> {
        let len = shape.dense_len(usize::MAX)?;
        if values.len() != len {
            return Err(TtError::DimensionMismatch(format!(
                "shape {shape} needs {len} values, got {}",
                values.len()
            )));
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: Shape) -> Result<Self> {
        let len = shape.dense_len(DEFAULT_DENSE_LIMIT)?;
        Ok(Self {
            shape,
            values: vec![0.0; len],
        })
    }

    /// Fills every entry from `f`, visiting indices in linear order.
    pub fn from_fn(shape: Shape, limit: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = shape.dense_len(limit)?;
        let mut values = Vec::with_capacity(len);
        let mut idx = vec![0; shape.ndim()];
        for lin in 0..len {
            shape.unravel_into(lin, &mut idx);
            values.push(f(&idx));
        }
        Ok(Self { shape, values })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, idx: &[usize]) -> Result<f64> {
        self.shape.check(idx)?;
        Ok(self.values[self.shape.linear(idx)])
    }

    /// Max-abs entry.
    pub fn chebyshev_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Entrywise `self - other`.
    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        if self.shape != other.shape {
            return Err(TtError::DimensionMismatch(format!("{} vs {}", self.shape, other.shape)));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(DenseTensor {
            shape: self.shape.clone(),
            values,
        })
    }

    pub fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    /// The `k`-th unfolding, `1 <= k <= d-1`.
    pub fn unfold(&self, k: usize) -> Result<Unfolding<'_>> {
        let d = self.shape.ndim();
        if k == 0 || k >= d {
            return Err(TtError::InvalidSplit { k, d });
        }
        Ok(Unfolding {
            tensor: self,
            rows: self.shape.prefix_size(k),
            cols: self.shape.suffix_size(k),
            k,
        })
    }
}

/// Matrix view of a tensor: rows are `i_{<=k}`, columns `i_{>k}`.
///
/// With little-endian storage the unfolding is the value buffer read as a
/// column-major `rows x cols` matrix, so no data moves.
#[derive(Debug, Clone, Copy)]
pub struct Unfolding<'a> {
    tensor: &'a DenseTensor,
    rows: usize,
    cols: usize,
    k: usize,
}

impl Unfolding<'_> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn split(&self) -> usize {
        self.k
    }

    /// Entry at linear row index `row` and linear column index `col`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.tensor.values[row + self.rows * col]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.rows, self.cols, &self.tensor.values)
    }
}
