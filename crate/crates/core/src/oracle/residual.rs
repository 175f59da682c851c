use super::{Oracle, OracleStats};
use crate::cross::{cross_evaluate, CrossFactorization};
use crate::error::Result;
use crate::index::Shape;

/// `A - A~` for an oracle `A` and an interpolation `A~` of it. Counters are
/// those of the underlying oracle.
pub struct ResidualOracle<'a, O: Oracle> {
    base: &'a O,
    cf: &'a CrossFactorization,
}

pub fn residual_oracle<'a, O: Oracle>(base: &'a O, cf: &'a CrossFactorization) -> ResidualOracle<'a, O> {
    ResidualOracle { base, cf }
}

impl<O: Oracle> Oracle for ResidualOracle<'_, O> {
    fn shape(&self) -> &Shape {
        self.base.shape()
    }

    fn eval(&self, idx: &[usize]) -> Result<f64> {
        Ok(self.base.eval(idx)? - cross_evaluate(self.cf, idx)?)
    }

    fn stats(&self) -> OracleStats {
        self.base.stats()
    }

    fn concurrency_safe(&self) -> bool {
        self.base.concurrency_safe()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross::{greedy_restricted, RestrictedConfig};
    use crate::oracle::{exact_tt, TensorOracle};
    use crate::tt::TensorTrain;

    #[test]
    fn empty_interpolation_leaves_the_oracle() {
        let o = TensorOracle::from_fn(Shape::uniform(3, 3).unwrap(), |i| i[0] as f64 + 0.5);
        let cf = CrossFactorization::empty(&o).unwrap();
        let r = residual_oracle(&o, &cf);
        for idx in o.shape().indices() {
            assert_eq!(r.eval(&idx).unwrap(), o.eval(&idx).unwrap());
        }
        assert_eq!(r.stats(), o.stats());
    }

    #[test]
    fn exact_recovery_has_null_residual() {
        let shape = Shape::uniform(4, 3).unwrap();
        let tt = TensorTrain::random(&shape, &[2, 3, 2], 6).unwrap();
        let scale = tt.to_dense().unwrap().chebyshev_norm();
        let o = exact_tt(tt);
        let cf = greedy_restricted(
            &o,
            &RestrictedConfig {
                tolerance: 1e-13,
                ..Default::default()
            },
        )
        .unwrap();
        let r = residual_oracle(&o, &cf);
        for idx in shape.indices() {
            assert!(r.eval(&idx).unwrap().abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn block_entries_have_zero_residual() {
        let shape = Shape::uniform(5, 4).unwrap();
        let o = TensorOracle::from_fn(shape, |i| (1.0 + i.iter().sum::<usize>() as f64).ln());
        let cf = greedy_restricted(
            &o,
            &RestrictedConfig {
                rank_cap: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let r = residual_oracle(&o, &cf);
        let scale = cf.block_max_abs();
        let block = &cf.blocks()[2];
        for b in 0..block.right() {
            for a in 0..block.left() {
                let idx = cf.block_index(2, a, 1, b);
                assert!(r.eval(&idx).unwrap().abs() <= 1e-13 * scale);
            }
        }
    }
}
