//! Tensor trains: a chain of 3-way cores `X^(k)` of size `r_{k-1} x n_k x r_k`
//! with `r_0 = r_d = 1`, so every entry is a product of `d` small matrices.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::dense::DenseTensor;
use crate::error::{Result, TtError};
use crate::index::Shape;
use crate::rng;

/// One TT-core. Entry `(a, i, b)` lives at `a + left * (i + mode * b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Core {
    left: usize,
    mode: usize,
    right: usize,
    data: Vec<f64>,
}

impl Core {
    pub fn zeros(left: usize, mode: usize, right: usize) -> Self {
        Self {
            left,
            mode,
            right,
            data: vec![0.0; left * mode * right],
        }
    }

    pub fn from_vec(left: usize, mode: usize, right: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != left * mode * right {
            return Err(TtError::DimensionMismatch(format!(
                "core {left}x{mode}x{right} needs {} values, got {}",
                left * mode * right,
                data.len()
            )));
        }
        Ok(Self {
            left,
            mode,
            right,
            data,
        })
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn mode(&self) -> usize {
        self.mode
    }

    pub fn right(&self) -> usize {
        self.right
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn offset(&self, a: usize, i: usize, b: usize) -> usize {
        a + self.left * (i + self.mode * b)
    }

    #[inline]
    pub fn get(&self, a: usize, i: usize, b: usize) -> f64 {
        self.data[self.offset(a, i, b)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, i: usize, b: usize, v: f64) {
        let o = self.offset(a, i, b);
        self.data[o] = v;
    }

    /// `out = v * X(i)`, where `v` has length `left` and `out` length `right`.
    #[inline]
    pub fn apply_left(&self, v: &[f64], i: usize, out: &mut [f64]) {
        for (b, slot) in out.iter_mut().enumerate() {
            let start = self.offset(0, i, b);
            let col = &self.data[start..start + self.left];
            *slot = col.iter().zip(v).map(|(x, y)| x * y).sum();
        }
    }

    /// The core as an `(left * mode) x right` matrix (rows `a + left * i`).
    pub fn as_left_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.left * self.mode, self.right, &self.data)
    }

    /// The core as a `left x (mode * right)` matrix.
    pub fn as_right_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.left, self.mode * self.right, &self.data)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorTrain {
    shape: Shape,
    cores: Vec<Core>,
}

impl TensorTrain {
    pub fn new(cores: Vec<Core>) -> Result<Self> {
        if cores.is_empty() {
            return Err(TtError::InvalidShape("a tensor train needs at least one core".into()));
        }
        if cores[0].left != 1 || cores[cores.len() - 1].right != 1 {
            return Err(TtError::InvalidRanks("border ranks must be 1".into()));
        }
        for (k, pair) in cores.windows(2).enumerate() {
            if pair[0].right != pair[1].left {
                return Err(TtError::InvalidRanks(format!(
                    "cores {} and {} disagree on rank ({} vs {})",
                    k + 1,
                    k + 2,
                    pair[0].right,
                    pair[1].left
                )));
            }
        }
        let shape = Shape::new(cores.iter().map(|c| c.mode).collect())?;
        Ok(Self { shape, cores })
    }

    /// All-zero train with every bond rank 1.
    pub fn zeros(shape: &Shape) -> Self {
        let cores = shape.dims().iter().map(|&n| Core::zeros(1, n, 1)).collect();
        Self {
            shape: shape.clone(),
            cores,
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn cores(&self) -> &[Core] {
        &self.cores
    }

    pub fn core_mut(&mut self, k: usize) -> &mut Core {
        &mut self.cores[k]
    }

    pub fn ndim(&self) -> usize {
        self.cores.len()
    }

    /// Bond ranks `r_1..r_{d-1}`.
    pub fn ranks(&self) -> Vec<usize> {
        self.cores[..self.cores.len() - 1].iter().map(|c| c.right).collect()
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    pub fn evaluate(&self, idx: &[usize]) -> Result<f64> {
        self.shape.check(idx)?;
        Ok(self.evaluate_unchecked(idx))
    }

    /// Left-to-right vector-matrix products; `idx` must be valid.
    pub fn evaluate_unchecked(&self, idx: &[usize]) -> f64 {
        let mut v = vec![1.0];
        let mut next = Vec::new();
        for (core, &i) in self.cores.iter().zip(idx) {
            next.clear();
            next.resize(core.right, 0.0);
            core.apply_left(&v, i, &mut next);
            std::mem::swap(&mut v, &mut next);
        }
        v[0]
    }

    pub fn to_dense(&self) -> Result<DenseTensor> {
        self.to_dense_with_limit(crate::dense::DEFAULT_DENSE_LIMIT)
    }

    /// Full contraction, one core at a time. The running matrix has rows
    /// `i_{<=k}` in little-endian order, matching the dense layout.
    pub fn to_dense_with_limit(&self, limit: usize) -> Result<DenseTensor> {
        self.shape.dense_len(limit)?;
        let mut acc = DMatrix::from_element(1, 1, 1.0);
        for core in &self.cores {
            let prod = &acc * core.as_right_matrix();
            let rows = acc.nrows() * core.mode;
            acc = DMatrix::from_column_slice(rows, core.right, prod.as_slice());
        }
        DenseTensor::new(self.shape.clone(), acc.as_slice().to_vec())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.cores[0].data.iter_mut().for_each(|v| *v *= alpha);
    }

    /// Random train with i.i.d. uniform `[0, 1)` entries. Cores are filled
    /// in order `k = 1..d`, each in its storage order.
    pub fn random(shape: &Shape, ranks: &[usize], seed: u64) -> Result<Self> {
        let d = shape.ndim();
        if ranks.len() + 1 != d {
            return Err(TtError::InvalidRanks(format!(
                "expected {} bond ranks, got {}",
                d - 1,
                ranks.len()
            )));
        }
        if ranks.contains(&0) {
            return Err(TtError::InvalidRanks("ranks must be positive".into()));
        }
        let mut rng = rng::seeded(seed);
        let full = bond_chain(ranks);
        let cores = (0..d)
            .map(|k| {
                let len = full[k] * shape.mode(k) * full[k + 1];
                let data = (0..len).map(|_| rng::uniform(&mut rng)).collect();
                Core::from_vec(full[k], shape.mode(k), full[k + 1], data)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cores)
    }

    /// Writes the plain-text container described in the README.
    pub fn write_text(&self, mut w: impl Write) -> std::io::Result<()> {
        let mut s = String::new();
        writeln!(s, "ttcross-tt 1").unwrap();
        writeln!(s, "d {}", self.ndim()).unwrap();
        writeln!(s, "shape {}", join(self.shape.dims())).unwrap();
        let mut ranks = vec![1];
        ranks.extend(self.ranks());
        ranks.push(1);
        writeln!(s, "ranks {}", join(&ranks)).unwrap();
        for (k, core) in self.cores.iter().enumerate() {
            writeln!(s, "core {}", k + 1).unwrap();
            let vals: Vec<String> = core.data.iter().map(|v| format!("{v:e}")).collect();
            writeln!(s, "{}", vals.join(" ")).unwrap();
        }
        w.write_all(s.as_bytes())
    }

    pub fn read_text(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines().map(|l| l.map_err(|e| TtError::Parse(e.to_string())));
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .ok_or_else(|| TtError::Parse(format!("unexpected end of input, wanted {what}")))?
        };
        if next("header")?.trim() != "ttcross-tt 1" {
            return Err(TtError::Parse("missing 'ttcross-tt 1' header".into()));
        }
        let d: usize = field(&next("d")?, "d")?
            .first()
            .copied()
            .ok_or_else(|| TtError::Parse("empty d".into()))?;
        let dims = field(&next("shape")?, "shape")?;
        let ranks = field(&next("ranks")?, "ranks")?;
        if dims.len() != d || ranks.len() != d + 1 {
            return Err(TtError::Parse("shape/ranks length disagrees with d".into()));
        }
        let mut cores = Vec::with_capacity(d);
        for k in 0..d {
            let tag = next("core tag")?;
            if tag.trim() != format!("core {}", k + 1) {
                return Err(TtError::Parse(format!("expected 'core {}', got '{tag}'", k + 1)));
            }
            let data = next("core values")?
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| TtError::Parse(format!("{t}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            cores.push(Core::from_vec(ranks[k], dims[k], ranks[k + 1], data)?);
        }
        Self::new(cores)
    }
}

/// `[1, r_1, ..., r_{d-1}, 1]`.
pub(crate) fn bond_chain(ranks: &[usize]) -> Vec<usize> {
    let mut full = Vec::with_capacity(ranks.len() + 2);
    full.push(1);
    full.extend_from_slice(ranks);
    full.push(1);
    full
}

fn join(xs: &[usize]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn field(line: &str, name: &str) -> Result<Vec<usize>> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(name) {
        return Err(TtError::Parse(format!("expected '{name}' line, got '{line}'")));
    }
    parts
        .map(|t| t.parse::<usize>().map_err(|e| TtError::Parse(format!("{t}: {e}"))))
        .collect()
}
