//! Tensors available only through entry evaluation.
//!
//! Every oracle is deterministic and shareable across threads. The memoized
//! [`TensorOracle`] counts both total and distinct evaluations, so the cost of
//! an algorithm can be reported as the number of distinct entries it touched.

mod estimate;
mod families;
mod residual;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use crate::error::{Result, TtError};
use crate::index::Shape;

pub use estimate::{estimate_chebyshev, estimate_frobenius, estimate_norms, sample_indices, NormEstimate, Sampling};
pub use families::{dense_oracle, exact_tt, inverse_norm, NoisyTTOracle};
pub use residual::{residual_oracle, ResidualOracle};

/// Evaluation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct OracleStats {
    pub total: u64,
    pub distinct: u64,
}

pub trait Oracle: Sync {
    fn shape(&self) -> &Shape;

    /// Entry at a zero-based multi-index.
    fn eval(&self, idx: &[usize]) -> Result<f64>;

    fn stats(&self) -> OracleStats {
        OracleStats::default()
    }

    /// Whether concurrent `eval` calls are allowed.
    fn concurrency_safe(&self) -> bool {
        true
    }
}

impl<T: Oracle + ?Sized> Oracle for &T {
    fn shape(&self) -> &Shape {
        (**self).shape()
    }

    fn eval(&self, idx: &[usize]) -> Result<f64> {
        (**self).eval(idx)
    }

    fn stats(&self) -> OracleStats {
        (**self).stats()
    }

    fn concurrency_safe(&self) -> bool {
        (**self).concurrency_safe()
    }
}

type EntryFn = dyn Fn(&[usize]) -> Result<f64> + Send + Sync;

/// Memo keys: the linear index when it fits in 128 bits, else the coordinates.
enum Memo {
    Linear(HashMap<u128, f64>),
    Coords(HashMap<Box<[usize]>, f64>),
}

/// A memoized, counting oracle around an entry function.
pub struct TensorOracle {
    shape: Shape,
    f: Box<EntryFn>,
    memo: Mutex<Memo>,
    linear_keys: bool,
    total: AtomicU64,
    distinct: AtomicU64,
}

impl TensorOracle {
    pub fn new(shape: Shape, f: impl Fn(&[usize]) -> Result<f64> + Send + Sync + 'static) -> Self {
        let linear_keys = shape.numel() < u128::MAX;
        let memo = if linear_keys {
            Memo::Linear(HashMap::new())
        } else {
            Memo::Coords(HashMap::new())
        };
        Self {
            shape,
            f: Box::new(f),
            memo: Mutex::new(memo),
            linear_keys,
            total: AtomicU64::new(0),
            distinct: AtomicU64::new(0),
        }
    }

    /// Infallible entry function.
    pub fn from_fn(shape: Shape, f: impl Fn(&[usize]) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(shape, move |idx| Ok(f(idx)))
    }

    fn linear_key(&self, idx: &[usize]) -> u128 {
        let mut key = 0u128;
        for (&i, &n) in idx.iter().zip(self.shape.dims()).rev() {
            key = key * n as u128 + i as u128;
        }
        key
    }

    /// Forget memoized values and reset the counters.
    pub fn reset(&self) {
        let mut memo = self.memo.lock().unwrap();
        match &mut *memo {
            Memo::Linear(m) => m.clear(),
            Memo::Coords(m) => m.clear(),
        }
        self.total.store(0, Ordering::Relaxed);
        self.distinct.store(0, Ordering::Relaxed);
    }
}

impl Oracle for TensorOracle {
    fn shape(&self) -> &Shape {
        &self.shape
    }

    fn eval(&self, idx: &[usize]) -> Result<f64> {
        self.shape.check(idx)?;
        self.total.fetch_add(1, Ordering::Relaxed);
        let key = if self.linear_keys { self.linear_key(idx) } else { 0 };
        {
            let memo = self.memo.lock().unwrap();
            let hit = match &*memo {
                Memo::Linear(m) => m.get(&key).copied(),
                Memo::Coords(m) => m.get(idx).copied(),
            };
            if let Some(v) = hit {
                return Ok(v);
            }
        }
        let v = (self.f)(idx)?;
        if !v.is_finite() {
            return Err(TtError::Oracle(format!("non-finite value {v} at {idx:?}")));
        }
        let mut memo = self.memo.lock().unwrap();
        let fresh = match &mut *memo {
            Memo::Linear(m) => m.insert(key, v).is_none(),
            Memo::Coords(m) => m.insert(idx.into(), v).is_none(),
        };
        if fresh {
            self.distinct.fetch_add(1, Ordering::Relaxed);
        }
        Ok(v)
    }

    fn stats(&self) -> OracleStats {
        OracleStats {
            total: self.total.load(Ordering::Relaxed),
            distinct: self.distinct.load(Ordering::Relaxed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memo_counts_distinct_and_total() {
        let o = TensorOracle::from_fn(Shape::new(vec![3, 4]).unwrap(), |i| (i[0] * 10 + i[1]) as f64);
        assert_eq!(o.eval(&[2, 3]).unwrap(), 23.0);
        assert_eq!(o.eval(&[2, 3]).unwrap(), 23.0);
        assert_eq!(o.eval(&[0, 1]).unwrap(), 1.0);
        assert_eq!(o.stats(), OracleStats { total: 3, distinct: 2 });
        o.reset();
        assert_eq!(o.stats(), OracleStats::default());
    }

    #[test]
    fn rejects_bad_indices_and_values() {
        let o = TensorOracle::from_fn(
            Shape::new(vec![2, 2]).unwrap(),
            |i| if i[0] == 1 { f64::NAN } else { 1.0 },
        );
        assert!(matches!(o.eval(&[2, 0]), Err(TtError::IndexOutOfRange { .. })));
        assert!(matches!(o.eval(&[0]), Err(TtError::WrongArity { .. })));
        assert!(matches!(o.eval(&[1, 0]), Err(TtError::Oracle(_))));
        assert_eq!(o.eval(&[0, 0]).unwrap(), 1.0);
    }

    #[test]
    fn huge_shapes_key_by_coordinates() {
        let o = TensorOracle::from_fn(Shape::uniform(40, 1 << 20).unwrap(), |i| i[39] as f64);
        let mut idx = vec![0; 40];
        idx[39] = 7;
        assert_eq!(o.eval(&idx).unwrap(), 7.0);
        assert_eq!(o.eval(&idx).unwrap(), 7.0);
        assert_eq!(o.stats().distinct, 1);
    }

    #[test]
    fn failures_propagate() {
        let o = TensorOracle::new(Shape::new(vec![2]).unwrap(), |_| {
            Err(TtError::Oracle("solver diverged".into()))
        });
        assert_eq!(o.eval(&[0]).unwrap_err(), TtError::Oracle("solver diverged".into()));
        assert_eq!(o.stats().distinct, 0);
    }
}
