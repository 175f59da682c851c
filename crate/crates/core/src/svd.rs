//! TT-SVD: successive reshapes and truncated SVDs, left to right.
//!
//! This is the best-approximation reference against which cross
//! interpolation accuracy is measured.

use nalgebra::DMatrix;

use crate::dense::DenseTensor;
use crate::error::{Result, TtError};
use crate::tt::{Core, TensorTrain};

/// How TT-SVD chooses each bond rank.
#[derive(Debug, Clone, PartialEq)]
pub enum Truncation {
    /// Fixed bond ranks `r_1..r_{d-1}`.
    Ranks(Vec<usize>),
    /// Relative Frobenius accuracy `delta`, spent as `delta / sqrt(d-1)` per
    /// unfolding.
    Tolerance(f64),
}

pub fn tt_svd(a: &DenseTensor, truncation: &Truncation) -> Result<TensorTrain> {
    let shape = a.shape();
    let d = shape.ndim();
    match truncation {
        Truncation::Ranks(ranks) => {
            if ranks.len() + 1 != d {
                return Err(TtError::InvalidRanks(format!(
                    "expected {} bond ranks, got {}",
                    d - 1,
                    ranks.len()
                )));
            }
            for (k, &r) in ranks.iter().enumerate() {
                let max = shape.prefix_size(k + 1).min(shape.suffix_size(k + 1));
                if r == 0 || r > max {
                    return Err(TtError::InvalidRanks(format!(
                        "rank r_{} = {r} outside 1..={max}",
                        k + 1
                    )));
                }
            }
        }
        Truncation::Tolerance(delta) => {
            if delta.is_nan() || *delta < 0.0 {
                return Err(TtError::InvalidRanks(format!("tolerance {delta} must be >= 0")));
            }
        }
    }

    let step_tol = match truncation {
        Truncation::Tolerance(delta) if d > 1 => delta * a.frobenius_norm() / ((d - 1) as f64).sqrt(),
        _ => 0.0,
    };

    let mut cores = Vec::with_capacity(d);
    let mut left_rank = 1;
    // Remainder, viewed as (left_rank * n_k) x (n_{k+1} ... n_d) column-major.
    let mut rest = a.values().to_vec();
    for k in 0..d - 1 {
        let n = shape.mode(k);
        let rows = left_rank * n;
        let cols = rest.len() / rows;
        let m = DMatrix::from_column_slice(rows, cols, &rest);
        let svd = m.svd(true, true);
        let (u, s, vt) = sorted_svd(svd.u.unwrap(), svd.singular_values, svd.v_t.unwrap());
        let full = s.len();
        let r = match truncation {
            Truncation::Ranks(ranks) => ranks[k].min(full),
            Truncation::Tolerance(_) => tolerance_rank(&s, step_tol),
        }
        .max(1);

        let u_r = u.columns(0, r).into_owned();
        cores.push(Core::from_vec(left_rank, n, r, u_r.as_slice().to_vec())?);
        let mut sv = vt.rows(0, r).into_owned();
        for (i, mut row) in sv.row_iter_mut().enumerate() {
            row *= s[i];
        }
        rest = sv.as_slice().to_vec();
        left_rank = r;
    }
    cores.push(Core::from_vec(left_rank, shape.mode(d - 1), 1, rest)?);
    TensorTrain::new(cores)
}

/// Smallest rank whose discarded tail has Frobenius norm `<= tol`.
fn tolerance_rank(s: &[f64], tol: f64) -> usize {
    let mut tail = 0.0;
    let mut r = s.len();
    while r > 0 {
        let next = tail + s[r - 1] * s[r - 1];
        if next.sqrt() > tol {
            break;
        }
        tail = next;
        r -= 1;
    }
    r
}

/// nalgebra does not promise descending order; enforce it.
fn sorted_svd(u: DMatrix<f64>, s: nalgebra::DVector<f64>, vt: DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    if order.iter().enumerate().all(|(a, &b)| a == b) {
        return (u, s.as_slice().to_vec(), vt);
    }
    let u2 = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let vt2 = DMatrix::from_fn(order.len(), vt.ncols(), |r, c| vt[(order[r], c)]);
    let s2 = order.iter().map(|&i| s[i]).collect();
    (u2, s2, vt2)
}
