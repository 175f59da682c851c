use std::sync::Arc;

use super::{Oracle, OracleStats, TensorOracle};
use crate::dense::{DenseTensor, DEFAULT_DENSE_LIMIT};
use crate::error::{Result, TtError};
use crate::index::Shape;
use crate::rng;
use crate::tt::TensorTrain;

/// `1 / sqrt(i_1^2 + ... + i_d^2)` with one-based `i_k`.
pub fn inverse_norm(shape: Shape) -> TensorOracle {
    TensorOracle::from_fn(shape, |idx| {
        let s: f64 = idx.iter().map(|&i| ((i + 1) * (i + 1)) as f64).sum();
        1.0 / s.sqrt()
    })
}

/// Entries of a tensor train.
pub fn exact_tt(tt: TensorTrain) -> TensorOracle {
    let shape = tt.shape().clone();
    TensorOracle::from_fn(shape, move |idx| tt.evaluate_unchecked(idx))
}

/// Entries of a dense tensor.
pub fn dense_oracle(a: DenseTensor) -> TensorOracle {
    let shape = a.shape().clone();
    let a = Arc::new(a);
    TensorOracle::from_fn(shape.clone(), move |idx| a.values()[shape.linear(idx)])
}

/// Seed offset for the noise stream, so `X` and `R` never share draws.
const NOISE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// `A = X + mu * R`: a random TT `X` and dense uniform noise `R`, both
/// scaled to unit Chebyshev norm.
pub struct NoisyTTOracle {
    inner: TensorOracle,
    a: Arc<DenseTensor>,
    x: DenseTensor,
    generator: TensorTrain,
    mu: f64,
}

impl NoisyTTOracle {
    pub fn new(shape: &Shape, ranks: &[usize], mu: f64, seed: u64) -> Result<Self> {
        Self::with_limit(shape, ranks, mu, seed, DEFAULT_DENSE_LIMIT)
    }

    pub fn with_limit(shape: &Shape, ranks: &[usize], mu: f64, seed: u64, limit: usize) -> Result<Self> {
        if !mu.is_finite() || mu < 0.0 {
            return Err(TtError::Oracle(format!("noise level {mu} must be finite and >= 0")));
        }
        let len = shape.dense_len(limit)?;
        let mut generator = TensorTrain::random(shape, ranks, seed)?;
        let mut x = generator.to_dense_with_limit(limit)?;
        let x_max = x.chebyshev_norm();
        if x_max == 0.0 {
            return Err(TtError::Oracle("generator vanished identically".into()));
        }
        x.values_mut().iter_mut().for_each(|v| *v /= x_max);
        generator.scale(1.0 / x_max);

        let mut g = rng::seeded(seed ^ NOISE_STREAM);
        let mut noise: Vec<f64> = (0..len).map(|_| rng::uniform(&mut g)).collect();
        let r_max = noise.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        noise.iter_mut().for_each(|v| *v /= r_max);

        let a_values = x.values().iter().zip(&noise).map(|(xv, rv)| xv + mu * rv).collect();
        let a = Arc::new(DenseTensor::new(shape.clone(), a_values)?);
        let lookup = Arc::clone(&a);
        let lookup_shape = shape.clone();
        let inner = TensorOracle::from_fn(shape.clone(), move |idx| lookup.values()[lookup_shape.linear(idx)]);
        Ok(Self {
            inner,
            a,
            x,
            generator,
            mu,
        })
    }

    /// The dense tensor `A` the oracle serves.
    pub fn full(&self) -> &DenseTensor {
        &self.a
    }

    /// The low-rank part `X`, normalized.
    pub fn reference(&self) -> &DenseTensor {
        &self.x
    }

    /// `X` in TT form (scaled consistently with [`Self::reference`]).
    pub fn generator(&self) -> &TensorTrain {
        &self.generator
    }

    pub fn noise_level(&self) -> f64 {
        self.mu
    }

    pub fn inner(&self) -> &TensorOracle {
        &self.inner
    }
}

impl Oracle for NoisyTTOracle {
    fn shape(&self) -> &Shape {
        self.inner.shape()
    }

    fn eval(&self, idx: &[usize]) -> Result<f64> {
        self.inner.eval(idx)
    }

    fn stats(&self) -> OracleStats {
        self.inner.stats()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_norm_examples() {
        let o = inverse_norm(Shape::uniform(4, 3).unwrap());
        assert_eq!(o.eval(&[0, 0, 0, 0]).unwrap(), 0.5);
        let o = inverse_norm(Shape::uniform(2, 5).unwrap());
        assert!((o.eval(&[2, 3]).unwrap() - 0.2).abs() < 1e-16);
        let o = inverse_norm(Shape::uniform(16, 2).unwrap());
        assert_eq!(o.eval(&[0; 16]).unwrap(), 0.25);
    }

    #[test]
    fn noiseless_oracle_is_the_generator() {
        let shape = Shape::uniform(5, 2).unwrap();
        let o = NoisyTTOracle::new(&shape, &[2, 3, 3, 2], 0.0, 11).unwrap();
        for idx in shape.indices() {
            let v = o.eval(&idx).unwrap();
            assert_eq!(v, o.reference().get(&idx).unwrap());
            assert!((v - o.generator().evaluate(&idx).unwrap()).abs() <= 1e-14);
        }
    }

    #[test]
    fn parts_are_normalized() {
        let shape = Shape::uniform(6, 2).unwrap();
        let mu = 1e-3;
        let o = NoisyTTOracle::new(&shape, &[2; 5], mu, 3).unwrap();
        assert_eq!(o.reference().chebyshev_norm(), 1.0);
        // recover R from A - X; its maximum is one up to rounding in A
        let r_max = o
            .full()
            .values()
            .iter()
            .zip(o.reference().values())
            .map(|(a, x)| ((a - x) / mu).abs())
            .fold(0.0, f64::max);
        assert!((r_max - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn deterministic_per_seed() {
        let shape = Shape::uniform(4, 3).unwrap();
        let a = NoisyTTOracle::new(&shape, &[2, 2, 2], 1e-2, 5).unwrap();
        let b = NoisyTTOracle::new(&shape, &[2, 2, 2], 1e-2, 5).unwrap();
        let c = NoisyTTOracle::new(&shape, &[2, 2, 2], 1e-2, 6).unwrap();
        assert_eq!(a.full(), b.full());
        assert_ne!(a.full(), c.full());
    }

    #[test]
    fn rejects_negative_noise_and_huge_shapes() {
        let shape = Shape::uniform(3, 2).unwrap();
        assert!(NoisyTTOracle::new(&shape, &[1, 1], -1.0, 0).is_err());
        let big = Shape::uniform(30, 2).unwrap();
        assert!(matches!(
            NoisyTTOracle::new(&big, &[1; 29], 0.1, 0),
            Err(TtError::DenseLimit { .. })
        ));
    }

    #[test]
    fn dense_and_tt_oracles_agree() {
        let shape = Shape::new(vec![2, 3, 2]).unwrap();
        let tt = TensorTrain::random(&shape, &[2, 2], 9).unwrap();
        let dense = dense_oracle(tt.to_dense().unwrap());
        let exact = exact_tt(tt);
        for idx in shape.indices() {
            assert!((dense.eval(&idx).unwrap() - exact.eval(&idx).unwrap()).abs() <= 1e-15);
        }
    }
}
