//! Norm estimates from a set of sampled entries:
//! `|A|~ = max |A(i)|` and `||A||~^2 = (n_1 ... n_d / #I) * sum |A(i)|^2`.

use super::Oracle;
use crate::dense::DEFAULT_DENSE_LIMIT;
use crate::error::{Result, TtError};
use crate::index::Shape;
use crate::rng;

/// Which entries an estimate looks at.
#[derive(Debug, Clone, PartialEq)]
pub enum Sampling {
    /// `count` indices drawn uniformly with replacement.
    Random { count: usize, seed: u64 },
    /// Explicit zero-based indices.
    Indices(Vec<Vec<usize>>),
    /// Every index; limited to dense-sized shapes.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub chebyshev: f64,
    pub frobenius: f64,
    pub samples: usize,
}

/// Materializes the sample. Identical sampling on identical shapes yields
/// identical indices, so two oracles can be compared on the same points.
pub fn sample_indices(shape: &Shape, sampling: &Sampling) -> Result<Vec<Vec<usize>>> {
    match sampling {
        Sampling::Random { count, seed } => {
            if *count == 0 {
                return Err(TtError::InvalidShape("sample count must be positive".into()));
            }
            let mut g = rng::seeded(*seed);
            Ok((0..*count)
                .map(|_| {
                    let mut idx = vec![0; shape.ndim()];
                    rng::random_index(&mut g, shape.dims(), &mut idx);
                    idx
                })
                .collect())
        }
        Sampling::Indices(list) => {
            if list.is_empty() {
                return Err(TtError::InvalidShape("sample count must be positive".into()));
            }
            for idx in list {
                shape.check(idx)?;
            }
            Ok(list.clone())
        }
        Sampling::Full => {
            shape.dense_len(DEFAULT_DENSE_LIMIT)?;
            Ok(shape.indices().collect())
        }
    }
}

pub fn estimate_norms(oracle: &impl Oracle, sampling: &Sampling) -> Result<NormEstimate> {
    let shape = oracle.shape().clone();
    let indices = sample_indices(&shape, sampling)?;
    let mut cheb = 0.0f64;
    let mut sum_sq = 0.0;
    for idx in &indices {
        let v = oracle.eval(idx)?;
        cheb = cheb.max(v.abs());
        sum_sq += v * v;
    }
    let n = indices.len();
    Ok(NormEstimate {
        chebyshev: cheb,
        frobenius: (shape.numel_f64() / n as f64 * sum_sq).sqrt(),
        samples: n,
    })
}

pub fn estimate_chebyshev(oracle: &impl Oracle, sampling: &Sampling) -> Result<f64> {
    Ok(estimate_norms(oracle, sampling)?.chebyshev)
}

pub fn estimate_frobenius(oracle: &impl Oracle, sampling: &Sampling) -> Result<f64> {
    Ok(estimate_norms(oracle, sampling)?.frobenius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::TensorOracle;

    #[test]
    fn constant_tensor_is_exact_for_any_sample() {
        let shape = Shape::new(vec![3, 5, 2]).unwrap();
        let o = TensorOracle::from_fn(shape, |_| -2.5);
        for seed in 0..5 {
            let est = estimate_norms(&o, &Sampling::Random { count: 7, seed }).unwrap();
            assert_eq!(est.chebyshev, 2.5);
            assert!((est.frobenius - 2.5 * 30f64.sqrt()).abs() <= 1e-13);
        }
    }

    #[test]
    fn explicit_indices_are_validated() {
        let o = TensorOracle::from_fn(Shape::new(vec![2, 2]).unwrap(), |i| i[0] as f64);
        let est = estimate_norms(&o, &Sampling::Indices(vec![vec![1, 0], vec![0, 1]])).unwrap();
        assert_eq!(est.chebyshev, 1.0);
        assert!((est.frobenius - 2f64.sqrt()).abs() < 1e-15);
        assert!(estimate_norms(&o, &Sampling::Indices(vec![vec![2, 0]])).is_err());
        assert!(estimate_norms(&o, &Sampling::Indices(vec![])).is_err());
        assert!(estimate_norms(&o, &Sampling::Random { count: 0, seed: 0 }).is_err());
    }

    #[test]
    fn same_sampling_same_points() {
        let shape = Shape::uniform(5, 7).unwrap();
        let s = Sampling::Random { count: 50, seed: 3 };
        assert_eq!(sample_indices(&shape, &s).unwrap(), sample_indices(&shape, &s).unwrap());
    }
}
