//! Quasioptimality of a cross interpolation: its Chebyshev error against
//! that of a reference approximation `X` with the same ranks, and the a
//! priori bound that the ratio obeys for maximum-volume sets.

use serde::{Deserialize, Serialize};

use super::factorization::{cross_to_tt, evaluate_unchecked, CrossFactorization};
use crate::dense::DenseTensor;
use crate::error::{Result, TtError};
use crate::oracle::{sample_indices, NoisyTTOracle, Oracle, Sampling};

/// `|A - A~|_C / |A - X|_C`, exactly, over every entry.
pub fn quasiopt_ratio(a: &DenseTensor, x: &DenseTensor, cf: &CrossFactorization) -> Result<f64> {
    let approx = cross_to_tt(cf)?.to_dense()?;
    let num = a.sub(&approx)?.chebyshev_norm();
    let den = a.sub(x)?.chebyshev_norm();
    if den == 0.0 {
        return Err(TtError::ExactReference);
    }
    Ok(num / den)
}

/// The ratio for a noisy oracle against its own generator.
pub fn quasiopt_ratio_noisy(oracle: &NoisyTTOracle, cf: &CrossFactorization) -> Result<f64> {
    quasiopt_ratio(oracle.full(), oracle.reference(), cf)
}

/// The ratio with both norms estimated on a common sample.
pub fn quasiopt_ratio_sampled(
    a: &impl Oracle,
    x: &impl Oracle,
    cf: &CrossFactorization,
    sampling: &Sampling,
) -> Result<f64> {
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for idx in sample_indices(a.shape(), sampling)? {
        let v = a.eval(&idx)?;
        num = num.max((v - evaluate_unchecked(cf, &idx)).abs());
        den = den.max((v - x.eval(&idx)?).abs());
    }
    if den == 0.0 {
        return Err(TtError::ExactReference);
    }
    Ok(num / den)
}

/// Both forms of the a priori bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thm1Bound {
    /// `(2r + kappa r + 1)^ceil(log2 d) (r + 1)^2`.
    pub tensor: f64,
    /// `(r + 1)^2`, the matrix bound.
    pub matrix: f64,
    pub d: usize,
}

impl Thm1Bound {
    /// The matrix bound for `d <= 2`, the tensor bound otherwise.
    pub fn value(&self) -> f64 {
        if self.d <= 2 {
            self.matrix
        } else {
            self.tensor
        }
    }
}

pub fn thm1_bound(d: usize, r: usize, kappa: f64) -> Thm1Bound {
    let r = r as f64;
    let depth = ceil_log2(d);
    let matrix = (r + 1.0) * (r + 1.0);
    Thm1Bound {
        tensor: (2.0 * r + kappa * r + 1.0).powi(depth as i32) * matrix,
        matrix,
        d,
    }
}

fn ceil_log2(d: usize) -> u32 {
    if d <= 1 {
        0
    } else {
        usize::BITS - (d - 1).leading_zeros()
    }
}

/// `max_k r_k |A| max|A_k^{-1}|`, with `|A|` supplied by the caller.
pub fn measure_kappa(cf: &CrossFactorization, a_chebyshev: f64) -> f64 {
    (1..cf.ndim())
        .filter_map(|k| cf.intersection_lu(k).map(|lu| (k, lu)))
        .map(|(k, lu)| {
            let inv_max = lu.inverse().amax();
            cf.ranks()[k - 1] as f64 * a_chebyshev * inv_max
        })
        .fold(0.0, f64::max)
}
