//! Matrix cross (skeleton) interpolation `A ~ C A(I,J)^{-1} R` and an
//! adaptive cross builder that checks itself on random entries.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Result, TtError};
use crate::lu::{PivotedLu, MACHINE_NULL};
use crate::maxvol::IndexSet;
use crate::rng;

/// On-demand access to matrix entries.
pub trait EntryAccess {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn entry(&self, i: usize, j: usize) -> Result<f64>;
}

impl EntryAccess for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn entry(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self[(i, j)])
    }
}

/// Adapts a closure to [`EntryAccess`].
pub struct FnAccess<F> {
    rows: usize,
    cols: usize,
    f: F,
}

impl<F: Fn(usize, usize) -> Result<f64>> FnAccess<F> {
    pub fn new(rows: usize, cols: usize, f: F) -> Self {
        Self { rows, cols, f }
    }
}

impl<F: Fn(usize, usize) -> Result<f64>> EntryAccess for FnAccess<F> {
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn entry(&self, i: usize, j: usize) -> Result<f64> {
        (self.f)(i, j)
    }
}

/// A cross of `r` rows and columns with the sampled blocks `C = A(:,J)`,
/// `R = A(I,:)` and a factorization of `A(I,J)`.
#[derive(Debug, Clone)]
pub struct CrossSkeleton {
    rows: IndexSet,
    cols: IndexSet,
    c: DMatrix<f64>,
    r: DMatrix<f64>,
    /// `C A(I,J)^{-1}`, cached so each entry costs O(r).
    c_div: DMatrix<f64>,
    lu: Option<PivotedLu>,
    converged: bool,
}

impl CrossSkeleton {
    fn build(rows: Vec<usize>, cols: Vec<usize>, c: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        let k = rows.len();
        let (lu, c_div) = if k == 0 {
            (None, DMatrix::zeros(c.nrows(), 0))
        } else {
            let core = c.select_rows(&rows);
            let lu = PivotedLu::factor(&core).map_err(|_| TtError::SingularSubmatrix)?;
            let c_div = lu.right_divide(&c);
            (Some(lu), c_div)
        };
        Ok(Self {
            rows: IndexSet::from_vec_unchecked(rows),
            cols: IndexSet::from_vec_unchecked(cols),
            c,
            r,
            c_div,
            lu,
            converged: true,
        })
    }

    pub fn rows(&self) -> &IndexSet {
        &self.rows
    }

    pub fn cols(&self) -> &IndexSet {
        &self.cols
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn column_block(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn row_block(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn intersection(&self) -> DMatrix<f64> {
        self.c.select_rows(self.rows.as_slice())
    }

    pub fn factorization(&self) -> Option<&PivotedLu> {
        self.lu.as_ref()
    }

    /// False when the adaptive builder hit its rank cap before the
    /// verification sample passed.
    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn evaluate(&self, i: usize, j: usize) -> f64 {
        (0..self.rank()).map(|t| self.c_div[(i, t)] * self.r[(t, j)]).sum()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        &self.c_div * &self.r
    }

    /// Diagnostic dump: one-based rows and columns, one line each.
    pub fn to_text(&self) -> String {
        format!("rows {}\ncols {}\n", self.rows.to_text(), self.cols.to_text())
    }
}

/// Builds the skeleton on the given cross.
pub fn skeleton_interpolate(access: &impl EntryAccess, rows: &IndexSet, cols: &IndexSet) -> Result<CrossSkeleton> {
    if rows.len() != cols.len() {
        return Err(TtError::DimensionMismatch(format!(
            "{} rows vs {} columns",
            rows.len(),
            cols.len()
        )));
    }
    let (m, n) = (access.nrows(), access.ncols());
    let rows = IndexSet::new(rows.as_slice().to_vec(), m)?;
    let cols = IndexSet::new(cols.as_slice().to_vec(), n)?;
    let mut c = DMatrix::zeros(m, cols.len());
    for (t, &j) in cols.as_slice().iter().enumerate() {
        for i in 0..m {
            c[(i, t)] = access.entry(i, j)?;
        }
    }
    let mut r = DMatrix::zeros(rows.len(), n);
    for (s, &i) in rows.as_slice().iter().enumerate() {
        for j in 0..n {
            r[(s, j)] = access.entry(i, j)?;
        }
    }
    CrossSkeleton::build(rows.as_slice().to_vec(), cols.as_slice().to_vec(), c, r)
}

#[derive(Debug, Clone)]
pub struct AdaptiveCrossConfig {
    /// Relative tolerance against the running max-abs entry.
    pub tolerance: f64,
    pub rank_cap: usize,
    /// Random entries checked per verification round; the whole matrix is
    /// checked when it is smaller.
    pub verify_samples: usize,
    pub seed: u64,
}

impl Default for AdaptiveCrossConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            rank_cap: usize::MAX,
            verify_samples: 64,
            seed: 0,
        }
    }
}

/// Greedy cross growth with partial pivoting on the residual, verified on a
/// fresh random sample after each pass and restarted from the worst sampled
/// entry when the check fails. Seed sets are kept as a prefix of the result.
pub fn matrix_cross_adaptive(
    access: &impl EntryAccess,
    config: &AdaptiveCrossConfig,
    seeds: Option<(&IndexSet, &IndexSet)>,
) -> Result<CrossSkeleton> {
    let (m, n) = (access.nrows(), access.ncols());
    let mut state = GrowingCross::new(m, n);
    if let Some((i0, j0)) = seeds {
        if i0.len() != j0.len() {
            return Err(TtError::DimensionMismatch("seed sets differ in size".into()));
        }
        let i0 = IndexSet::new(i0.as_slice().to_vec(), m)?;
        let j0 = IndexSet::new(j0.as_slice().to_vec(), n)?;
        for (&i, &j) in i0.as_slice().iter().zip(j0.as_slice()) {
            if !state.push(access, i, j)? {
                return Err(TtError::SingularSubmatrix);
            }
        }
    }

    let cap = config.rank_cap.min(m).min(n);
    let mut rng = rng::seeded(config.seed);
    let total = m * n;
    let converged = loop {
        // verification
        let mut worst = (0usize, 0usize, -1.0f64);
        let mut check = |i: usize, j: usize, state: &mut GrowingCross| -> Result<()> {
            let res = state.residual(access, i, j)?.abs();
            let lin = i + m * j;
            if res > worst.2 || (res == worst.2 && lin < worst.0 + m * worst.1) {
                worst = (i, j, res);
            }
            Ok(())
        };
        if total <= config.verify_samples {
            for j in 0..n {
                for i in 0..m {
                    check(i, j, &mut state)?;
                }
            }
        } else {
            for _ in 0..config.verify_samples.max(1) {
                let (i, j) = (rng.gen_range(0..m), rng.gen_range(0..n));
                check(i, j, &mut state)?;
            }
        }
        let threshold = config.tolerance * state.scale;
        if worst.2 <= threshold {
            break true;
        }
        if state.rank() >= cap {
            break false;
        }

        // restart from the worst sampled entry's column
        let mut j = worst.1;
        let mut added = 0;
        loop {
            let col = state.column_residual(access, j)?;
            let Some(i) = argmax_excluding(&col, &state.rows) else {
                break;
            };
            let row = state.row_residual(access, i)?;
            let Some(jp) = argmax_excluding(&row, &state.cols) else {
                break;
            };
            let pivot = row[jp].abs();
            if pivot <= MACHINE_NULL * state.scale || pivot == 0.0 {
                break;
            }
            if !state.push(access, i, jp)? {
                break;
            }
            added += 1;
            if state.rank() >= cap || pivot <= threshold {
                break;
            }
            let mut cols_used = state.cols.clone();
            cols_used.push(jp);
            match argmax_excluding(&row, &cols_used) {
                Some(next) => j = next,
                None => break,
            }
        }
        if added == 0 {
            break false;
        }
    };

    let mut skel = state.finish()?;
    skel.converged = converged;
    Ok(skel)
}

fn argmax_excluding(v: &[f64], used: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, x) in v.iter().enumerate() {
        if used.contains(&i) {
            continue;
        }
        if best.is_none_or(|(_, b)| x.abs() > b) {
            best = Some((i, x.abs()));
        }
    }
    best.map(|(i, _)| i)
}

/// Cross under construction: full columns `C`, full rows `R`.
struct GrowingCross {
    m: usize,
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    c_cols: Vec<Vec<f64>>,
    r_rows: Vec<Vec<f64>>,
    c_div: DMatrix<f64>,
    scale: f64,
}

impl GrowingCross {
    fn new(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            rows: Vec::new(),
            cols: Vec::new(),
            c_cols: Vec::new(),
            r_rows: Vec::new(),
            c_div: DMatrix::zeros(m, 0),
            scale: 0.0,
        }
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }

    fn see(&mut self, v: f64) -> f64 {
        self.scale = self.scale.max(v.abs());
        v
    }

    fn approx(&self, i: usize, j: usize) -> f64 {
        (0..self.rank()).map(|t| self.c_div[(i, t)] * self.r_rows[t][j]).sum()
    }

    fn residual(&mut self, access: &impl EntryAccess, i: usize, j: usize) -> Result<f64> {
        let a = access.entry(i, j)?;
        self.see(a);
        Ok(a - self.approx(i, j))
    }

    fn column_residual(&mut self, access: &impl EntryAccess, j: usize) -> Result<Vec<f64>> {
        (0..self.m).map(|i| self.residual(access, i, j)).collect()
    }

    fn row_residual(&mut self, access: &impl EntryAccess, i: usize) -> Result<Vec<f64>> {
        (0..self.n).map(|j| self.residual(access, i, j)).collect()
    }

    /// Appends the cross `(i, j)`; `false` (and no change) when the
    /// enlarged intersection would be singular.
    fn push(&mut self, access: &impl EntryAccess, i: usize, j: usize) -> Result<bool> {
        let col = (0..self.m)
            .map(|r| access.entry(r, j).map(|v| self.see(v)))
            .collect::<Result<Vec<_>>>()?;
        let row = (0..self.n)
            .map(|c| access.entry(i, c).map(|v| self.see(v)))
            .collect::<Result<Vec<_>>>()?;
        self.rows.push(i);
        self.cols.push(j);
        self.c_cols.push(col);
        self.r_rows.push(row);
        let c = self.c_matrix();
        match PivotedLu::factor(&c.select_rows(&self.rows)) {
            Ok(lu) => {
                self.c_div = lu.right_divide(&c);
                Ok(true)
            }
            Err(_) => {
                self.rows.pop();
                self.cols.pop();
                self.c_cols.pop();
                self.r_rows.pop();
                Ok(false)
            }
        }
    }

    fn c_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m, self.rank(), |i, t| self.c_cols[t][i])
    }

    fn finish(self) -> Result<CrossSkeleton> {
        let c = self.c_matrix();
        let r = DMatrix::from_fn(self.rank(), self.n, |s, j| self.r_rows[s][j]);
        CrossSkeleton::build(self.rows, self.cols, c, r)
    }
}
