//! Maximum-volume submatrix search.
//!
//! `maxvol_rows` is the classical swap iteration: start from the rows picked
//! by partially pivoted elimination, then repeatedly swap in the row with the
//! largest coefficient in `m * m[I,:]^{-1}` until every coefficient is at most
//! `1 + delta` in magnitude. `maxvol_2d` alternates it over rows and columns.
//!
//! Argmax scans break ties toward the lowest column-major linear index.

use nalgebra::DMatrix;

use crate::error::{Result, TtError};
use crate::lu::{PivotedLu, MACHINE_NULL};

pub const DEFAULT_DELTA: f64 = 1e-2;
pub const DEFAULT_SWEEP_LIMIT: usize = 100;

/// Ordered list of distinct row (or column) positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new(positions: Vec<usize>, bound: usize) -> Result<Self> {
        let mut seen = vec![false; bound];
        for &p in &positions {
            if p >= bound {
                return Err(TtError::IndexOutOfRange {
                    mode: 0,
                    index: p,
                    size: bound,
                });
            }
            if std::mem::replace(&mut seen[p], true) {
                return Err(TtError::DimensionMismatch(format!("duplicate position {p}")));
            }
        }
        Ok(Self(positions))
    }

    pub(crate) fn from_vec_unchecked(v: Vec<usize>) -> Self {
        Self(v)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, p: usize) -> bool {
        self.0.contains(&p)
    }

    /// Positions in ascending order.
    pub fn sorted(&self) -> Vec<usize> {
        let mut v = self.0.clone();
        v.sort_unstable();
        v
    }

    /// One-based, space-separated; used for diagnostic dumps.
    pub fn to_text(&self) -> String {
        self.0.iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(" ")
    }
}

/// `|det m|`; zero when the matrix is numerically singular.
pub fn volume(m: &DMatrix<f64>) -> f64 {
    assert!(m.is_square(), "volume of a non-square matrix");
    match PivotedLu::factor(m) {
        Ok(lu) => lu.determinant().abs(),
        Err(_) => 0.0,
    }
}

/// Volume of the submatrix `m[rows, cols]`.
pub fn submatrix_volume(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    volume(&m.select_rows(rows).select_columns(cols))
}

/// Coefficients `m * m[rows,:]^{-1}`.
pub fn coefficients(m: &DMatrix<f64>, rows: &[usize]) -> Result<DMatrix<f64>> {
    let lu = PivotedLu::factor(&m.select_rows(rows)).map_err(|e| TtError::RankDeficient { column: e.step })?;
    Ok(lu.right_divide(m))
}

/// `delta`-dominant set of `r` rows of a tall `n x r` matrix.
pub fn maxvol_rows(m: &DMatrix<f64>, delta: f64) -> Result<IndexSet> {
    let rows = pivoted_rows(m)?;
    maxvol_rows_from(m, delta, rows)
}

/// Row choices of Gaussian elimination with partial pivoting, one per column.
fn pivoted_rows(m: &DMatrix<f64>) -> Result<Vec<usize>> {
    let (n, r) = m.shape();
    if r > n {
        return Err(TtError::DimensionMismatch(format!(
            "maxvol needs a tall matrix, got {n}x{r}"
        )));
    }
    let scale = m.amax();
    let mut work = m.clone();
    let mut picked = vec![false; n];
    let mut rows = Vec::with_capacity(r);
    for c in 0..r {
        let mut best = None;
        let mut best_abs = -1.0;
        for i in 0..n {
            if !picked[i] && work[(i, c)].abs() > best_abs {
                best_abs = work[(i, c)].abs();
                best = Some(i);
            }
        }
        let p = best.ok_or(TtError::RankDeficient { column: c })?;
        if best_abs <= MACHINE_NULL * scale || best_abs == 0.0 {
            return Err(TtError::RankDeficient { column: c });
        }
        picked[p] = true;
        rows.push(p);
        let pivot = work[(p, c)];
        for i in 0..n {
            if picked[i] {
                continue;
            }
            let f = work[(i, c)] / pivot;
            if f != 0.0 {
                for j in c..r {
                    let v = work[(p, j)];
                    work[(i, j)] -= f * v;
                }
            }
        }
    }
    Ok(rows)
}

pub(crate) fn maxvol_rows_from(m: &DMatrix<f64>, delta: f64, mut rows: Vec<usize>) -> Result<IndexSet> {
    let r = m.ncols();
    if r == 0 {
        return Ok(IndexSet::default());
    }
    let bound = 1.0 + delta;
    let max_swaps = DEFAULT_SWEEP_LIMIT * r.max(1);
    let mut swaps = 0;
    loop {
        let b = single_swaps(m, bound, &mut rows, &mut swaps, max_swaps)?;
        if swaps >= max_swaps {
            break;
        }
        // Single swaps stall in local optima; the volume ratio of replacing
        // two slots at once is the 2x2 minor of the coefficients.
        match best_pair_swap(&b, &rows, bound) {
            Some((p1, p2, i1, i2, _)) => {
                rows[p1] = i1;
                rows[p2] = i2;
                swaps += 1;
            }
            _ => break,
        }
    }
    Ok(IndexSet::from_vec_unchecked(rows))
}

/// Two slot positions, two replacement indices, and the volume ratio.
type Swap = (usize, usize, usize, usize, f64);

/// Largest `|det B[{i1,i2},{p1,p2}]|` above `threshold` over rows outside
/// the current set. A minor is bounded by the product of the two row norms
/// restricted to `{p1,p2}`, so rows sorted by that norm are pruned early.
fn best_pair_swap(b: &DMatrix<f64>, rows: &[usize], threshold: f64) -> Option<Swap> {
    let (n, r) = b.shape();
    let mut taken = vec![false; n];
    for &i in rows {
        taken[i] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
    let mut best: Option<Swap> = None;
    let mut bar = threshold;
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(free.len());
    for p1 in 0..r {
        for p2 in p1 + 1..r {
            // squared norms throughout, against the squared bar
            order.clear();
            order.extend(
                free.iter()
                    .map(|&i| (b[(i, p1)] * b[(i, p1)] + b[(i, p2)] * b[(i, p2)], i)),
            );
            let top = order.iter().fold(0.0f64, |t, &(v, _)| t.max(v));
            let cut = bar * bar / top;
            order.retain(|&(v, _)| v > cut);
            if order.len() < 2 {
                continue;
            }
            order.sort_by(|x, y| y.0.total_cmp(&x.0));
            for (a, &(na, i1)) in order.iter().enumerate() {
                if order.get(a + 1).is_none_or(|&(nb, _)| na * nb <= bar * bar) {
                    break;
                }
                for &(nb, i2) in &order[a + 1..] {
                    if na * nb <= bar * bar {
                        break;
                    }
                    let det = (b[(i1, p1)] * b[(i2, p2)] - b[(i1, p2)] * b[(i2, p1)]).abs();
                    if det > bar {
                        bar = det;
                        best = Some((p1, p2, i1, i2, det));
                    }
                }
            }
        }
    }
    best
}

/// Classical single-row swap iteration; returns the final coefficients.
fn single_swaps(
    m: &DMatrix<f64>,
    bound: f64,
    rows: &mut [usize],
    swaps: &mut usize,
    max_swaps: usize,
) -> Result<DMatrix<f64>> {
    let (n, r) = m.shape();
    let mut b = coefficients(m, rows)?;
    loop {
        let (i, j, v) = argmax_abs(&b);
        if v <= bound {
            // rank-one updates drift; confirm against a fresh solve
            b = coefficients(m, rows)?;
            let (_, _, fresh) = argmax_abs(&b);
            if fresh <= bound || *swaps >= max_swaps {
                break;
            }
            continue;
        }
        if *swaps >= max_swaps {
            break;
        }
        rows[j] = i;
        *swaps += 1;
        // B <- B - B[:,j] (B[i,:] - e_j) / B[i,j]
        let col = b.column(j).into_owned();
        let mut row = b.row(i).into_owned();
        row[j] -= 1.0;
        let piv = b[(i, j)];
        for c in 0..r {
            let f = row[c] / piv;
            if f != 0.0 {
                for rr in 0..n {
                    b[(rr, c)] -= col[rr] * f;
                }
            }
        }
    }
    Ok(b)
}

/// `(row, col, |value|)` of the largest magnitude, lowest column-major index
/// on ties.
fn argmax_abs(b: &DMatrix<f64>) -> (usize, usize, f64) {
    let mut best = (0, 0, -1.0);
    for j in 0..b.ncols() {
        for i in 0..b.nrows() {
            let v = b[(i, j)].abs();
            if v > best.2 {
                best = (i, j, v);
            }
        }
    }
    best
}

/// Rows and columns of a `delta`-dominant `r x r` submatrix, found by
/// alternating `maxvol_rows` over the column block and the row block.
pub fn maxvol_2d(m: &DMatrix<f64>, r: usize, delta: f64, sweep_limit: usize) -> Result<(IndexSet, IndexSet)> {
    let (nr, nc) = m.shape();
    if r > nr.min(nc) {
        return Err(TtError::DimensionMismatch(format!(
            "rank {r} exceeds min dimension of {nr}x{nc}"
        )));
    }
    // Local search from several starts: complete pivoting, then complete
    // pivoting forced through each of the next-largest entries.
    let mut best = refine_cross(m, complete_pivot_cross(m, r, None)?, delta, sweep_limit)?;
    let mut best_vol = submatrix_volume(m, &best.0, &best.1);
    for first in largest_entries(m, EXTRA_STARTS + 1).into_iter().skip(1) {
        let Ok(start) = complete_pivot_cross(m, r, Some(first)) else {
            continue;
        };
        let cand = refine_cross(m, start, delta, sweep_limit)?;
        let vol = submatrix_volume(m, &cand.0, &cand.1);
        if vol > best_vol * (1.0 + delta) {
            best = cand;
            best_vol = vol;
        }
    }
    Ok((
        IndexSet::from_vec_unchecked(best.0),
        IndexSet::from_vec_unchecked(best.1),
    ))
}

const EXTRA_STARTS: usize = 4;

/// Positions of the `count` largest magnitudes, lowest index first on ties.
fn largest_entries(m: &DMatrix<f64>, count: usize) -> Vec<(usize, usize)> {
    let mut all: Vec<(usize, f64)> = m.iter().map(|v| v.abs()).enumerate().collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    all.into_iter()
        .take(count)
        .map(|(lin, _)| (lin % m.nrows(), lin / m.nrows()))
        .collect()
}

fn refine_cross(
    m: &DMatrix<f64>,
    start: (Vec<usize>, Vec<usize>),
    delta: f64,
    sweep_limit: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let (mut rows, mut cols) = start;
    let mut prev: Option<(Vec<usize>, Vec<usize>)> = None;
    for _ in 0..sweep_limit.max(1) {
        let block = m.select_columns(&cols);
        rows = maxvol_rows_from(&block, delta, rows)?.0;
        let block_t = m.select_rows(&rows).transpose();
        cols = maxvol_rows_from(&block_t, delta, cols)?.0;
        let key = (sorted(&rows), sorted(&cols));
        if prev.as_ref() == Some(&key) {
            // Row-wise and column-wise dominance alone can leave the cross
            // in a poor local optimum; a simultaneous row and column swap
            // often escapes it.
            match best_joint_swap(m, &rows, &cols)? {
                Some((p, q, i, j, ratio)) if ratio > 1.0 + delta => {
                    rows[p] = i;
                    cols[q] = j;
                    prev = None;
                    continue;
                }
                _ => break,
            }
        }
        prev = Some(key);
    }
    Ok((rows, cols))
}

/// Best simultaneous replacement of row slot `p` by row `i` and column slot
/// `q` by column `j`, with the volume growth factor it yields.
///
/// With `B = A(I,J)^{-1}`, `C = A(:,J) B`, `R = B A(I,:)` and the skeleton
/// residual `S = A - A(:,J) B A(I,:)`, the determinant ratio of the swap is
/// `C[i,p] R[q,j] + S[i,j] B[q,p]`.
fn best_joint_swap(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> Result<Option<Swap>> {
    let r = rows.len();
    if r == 0 {
        return Ok(None);
    }
    let core = m.select_rows(rows).select_columns(cols);
    let lu = PivotedLu::factor(&core).map_err(|e| TtError::RankDeficient { column: e.step })?;
    let b = lu.inverse();
    let col_block = m.select_columns(cols);
    let c = lu.right_divide(&col_block);
    let rr = lu.left_divide(&m.select_rows(rows));
    let s = m - &col_block * &rr;
    let mut best: Option<Swap> = None;
    for j in (0..m.ncols()).filter(|j| !cols.contains(j)) {
        for i in (0..m.nrows()).filter(|i| !rows.contains(i)) {
            for q in 0..r {
                for p in 0..r {
                    let ratio = (c[(i, p)] * rr[(q, j)] + s[(i, j)] * b[(q, p)]).abs();
                    if best.is_none_or(|bst| ratio > bst.4) {
                        best = Some((p, q, i, j, ratio));
                    }
                }
            }
        }
    }
    Ok(best)
}

/// `r` steps of Gaussian elimination with complete pivoting.
/// `first` forces the opening pivot.
fn complete_pivot_cross(m: &DMatrix<f64>, r: usize, first: Option<(usize, usize)>) -> Result<(Vec<usize>, Vec<usize>)> {
    let scale = m.amax();
    let mut work = m.clone();
    let mut rows = Vec::with_capacity(r);
    let mut cols = Vec::with_capacity(r);
    for step in 0..r {
        let (i, j, v) = match first {
            Some((i, j)) if step == 0 => (i, j, work[(i, j)].abs()),
            _ => argmax_abs(&work),
        };
        if v <= MACHINE_NULL * scale || v == 0.0 {
            return Err(TtError::RankDeficient { column: step });
        }
        rows.push(i);
        cols.push(j);
        let pivot = work[(i, j)];
        let col = work.column(j).into_owned();
        let row = work.row(i).into_owned();
        for c in 0..work.ncols() {
            let f = row[c] / pivot;
            if f != 0.0 {
                for rr in 0..work.nrows() {
                    work[(rr, c)] -= col[rr] * f;
                }
            }
        }
        // exact zeros so the pivot row and column are never picked again
        work.row_mut(i).fill(0.0);
        work.column_mut(j).fill(0.0);
    }
    Ok((rows, cols))
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s
}
