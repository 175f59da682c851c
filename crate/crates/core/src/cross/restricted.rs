//! Greedy restricted cross: DMRG-style sweeps in which each separator `k`
//! searches for a pivot inside the supercore
//! `A(I^{<=k-1} i_k, i_{k+1} I^{>k+1})` and adds at most one cross.
//!
//! Pivots found there extend nested sets without breaking nestedness, and
//! on the supercore the interpolation reduces to `G_k A_k^{-1} G_{k+1}`, so
//! each residual entry costs `O(r)` plus one oracle call.

use nalgebra::DMatrix;
use rand::Rng;

use super::factorization::{evaluate_unchecked, CrossFactorization, Direction, StopReason, TraceEntry};
use super::sets::NestedCrossSets;
use crate::error::Result;
use crate::index::MultiIndex;
use crate::lu::MACHINE_NULL;
use crate::maxvol::IndexSet;
use crate::oracle::Oracle;
use crate::rng::{self, TtRng};
use crate::skeleton::{matrix_cross_adaptive, AdaptiveCrossConfig, FnAccess};

/// How many crosses a supercore visit may add.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SupercoreUpdate {
    /// At most one cross per visit.
    #[default]
    SingleCross,
    /// An adaptive matrix cross of the whole supercore, seeded with the
    /// current sets.
    FullCross,
}

#[derive(Debug, Clone)]
pub struct RestrictedConfig {
    /// Relative tolerance against the running max-abs entry.
    pub tolerance: f64,
    pub rank_cap: usize,
    pub max_sweeps: usize,
    /// Random global entries checked after each sweep.
    pub verify_samples: usize,
    pub seed: u64,
    pub update: SupercoreUpdate,
}

impl Default for RestrictedConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            rank_cap: usize::MAX,
            max_sweeps: 50,
            verify_samples: 64,
            seed: 0,
            update: SupercoreUpdate::SingleCross,
        }
    }
}

pub fn greedy_restricted(oracle: &impl Oracle, config: &RestrictedConfig) -> Result<CrossFactorization> {
    let shape = oracle.shape().clone();
    let d = shape.ndim();
    let mut rng = rng::seeded(config.seed);
    if d == 1 {
        return CrossFactorization::from_sets(oracle, NestedCrossSets::empty(&shape));
    }

    let mut scale = 0.0f64;
    let mut start = vec![0; d];
    let first = oracle.eval(&start)?.abs();
    scale = scale.max(first);
    let probe = random_points(&mut rng, shape.dims(), config.verify_samples.max(1));
    let mut best = (first, start.clone());
    for idx in probe {
        let v = oracle.eval(&idx)?.abs();
        scale = scale.max(v);
        if v > best.0 {
            best = (v, idx);
        }
    }
    if first <= MACHINE_NULL * scale || first == 0.0 {
        if best.0 == 0.0 {
            // nothing nonzero found: keep the zero interpolation
            let mut cf = CrossFactorization::empty(oracle)?;
            cf.stop = StopReason::Converged;
            return Ok(cf);
        }
        start = best.1;
    }
    let sets = NestedCrossSets::from_full_index(&shape, &start)?;
    let mut cf = CrossFactorization::from_sets(oracle, sets)?;

    let mut stop = StopReason::SweepLimit;
    let mut sweeps = 0;
    for sweep in 1..=config.max_sweeps {
        sweeps = sweep;
        let mut blacklist: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut added = 0;
        let mut sweep_err = 0.0f64;
        let order = (1..d)
            .map(|k| (k, Direction::LeftToRight))
            .chain((1..d).rev().map(|k| (k, Direction::RightToLeft)));
        for (k, dir) in order {
            let visit = match config.update {
                SupercoreUpdate::SingleCross => {
                    single_cross_visit(oracle, &mut cf, k, dir, config, &mut rng, &mut scale, &mut blacklist)?
                }
                SupercoreUpdate::FullCross => full_cross_visit(oracle, &mut cf, k, config, &mut rng, &mut scale)?,
            };
            sweep_err = sweep_err.max(visit.error);
            added += visit.added;
            cf.trace.push(TraceEntry {
                sweep,
                separators: if visit.added > 0 { vec![k] } else { Vec::new() },
                direction: Some(dir),
                pivot: visit.pivot.map(MultiIndex),
                residual: visit.error,
                ranks: cf.ranks(),
                oracle_calls: oracle.stats().distinct,
            });
        }

        for idx in random_points(&mut rng, shape.dims(), config.verify_samples) {
            let v = oracle.eval(&idx)?;
            scale = scale.max(v.abs());
            sweep_err = sweep_err.max((v - evaluate_unchecked(&cf, &idx)).abs());
        }
        if sweep_err <= config.tolerance * scale {
            stop = StopReason::Converged;
            break;
        }
        if added == 0 {
            stop = if at_cap(&cf, config.rank_cap) {
                StopReason::RankCapReached
            } else {
                StopReason::Stagnated
            };
            break;
        }
    }
    cf.stop = stop;
    cf.sweeps = sweeps;
    Ok(cf)
}

/// Every bond rank is at the cap or at the size of its unfolding.
fn at_cap(cf: &CrossFactorization, cap: usize) -> bool {
    let shape = cf.shape();
    cf.ranks()
        .iter()
        .enumerate()
        .all(|(k0, &r)| r >= cap.min(shape.prefix_size(k0 + 1)).min(shape.suffix_size(k0 + 1)))
}

fn random_points(rng: &mut TtRng, dims: &[usize], count: usize) -> Vec<Vec<usize>> {
    (0..count)
        .map(|_| {
            let mut idx = vec![0; dims.len()];
            rng::random_index(rng, dims, &mut idx);
            idx
        })
        .collect()
}

struct Visit {
    error: f64,
    added: usize,
    pivot: Option<Vec<usize>>,
}

/// The supercore at separator `k` with its residual against the current
/// interpolation.
struct Supercore<'a, O: Oracle> {
    oracle: &'a O,
    cf: &'a CrossFactorization,
    k: usize,
    /// `G_k A_k^{-1}`, rows `a + r_{k-1} i_k`.
    interface: DMatrix<f64>,
    rows: usize,
    cols: usize,
    buf: Vec<usize>,
}

impl<'a, O: Oracle> Supercore<'a, O> {
    fn new(oracle: &'a O, cf: &'a CrossFactorization, k: usize) -> Self {
        let shape = cf.shape();
        let rows = cf.sets().left(k - 1).len() * shape.mode(k - 1);
        let cols = shape.mode(k) * cf.sets().right(k + 1).len();
        Self {
            oracle,
            cf,
            k,
            interface: cf.left_interface(k),
            rows,
            cols,
            buf: Vec::with_capacity(shape.ndim()),
        }
    }

    /// Full multi-index of supercore entry `(row, col)`.
    fn index(&self, row: usize, col: usize) -> Vec<usize> {
        let mut idx = Vec::with_capacity(self.cf.ndim());
        self.fill(row, col, &mut idx);
        idx
    }

    fn fill(&self, row: usize, col: usize, idx: &mut Vec<usize>) {
        let k = self.k;
        let sets = self.cf.sets();
        let rl = sets.left(k - 1).len();
        let n = self.cf.shape().mode(k);
        idx.clear();
        idx.extend_from_slice(&sets.left(k - 1)[row % rl]);
        idx.push(row / rl);
        idx.push(col % n);
        idx.extend_from_slice(&sets.right(k + 1)[col / n]);
    }

    fn value(&mut self, row: usize, col: usize) -> Result<f64> {
        let mut idx = std::mem::take(&mut self.buf);
        self.fill(row, col, &mut idx);
        let v = self.oracle.eval(&idx);
        self.buf = idx;
        v
    }

    fn approx(&self, row: usize, col: usize) -> f64 {
        let n = self.cf.shape().mode(self.k);
        let next = &self.cf.blocks()[self.k];
        let (i, b) = (col % n, col / n);
        (0..self.interface.ncols())
            .map(|t| self.interface[(row, t)] * next.get(t, i, b))
            .sum()
    }

    fn residual(&mut self, row: usize, col: usize, scale: &mut f64) -> Result<f64> {
        let v = self.value(row, col)?;
        *scale = scale.max(v.abs());
        Ok(v - self.approx(row, col))
    }
}

/// `(|value|, linear position)`, larger value first, then lower position.
fn better(candidate: (f64, usize), current: Option<(f64, usize)>) -> bool {
    match current {
        None => true,
        Some(cur) => candidate.0 > cur.0 || (candidate.0 == cur.0 && candidate.1 < cur.1),
    }
}

#[allow(clippy::too_many_arguments)]
fn single_cross_visit(
    oracle: &impl Oracle,
    cf: &mut CrossFactorization,
    k: usize,
    dir: Direction,
    config: &RestrictedConfig,
    rng: &mut TtRng,
    scale: &mut f64,
    blacklist: &mut Vec<(usize, Vec<usize>)>,
) -> Result<Visit> {
    let d = cf.ndim();
    let (pivot_idx, pivot_abs, worst_abs) = {
        let mut sc = Supercore::new(oracle, cf, k);
        let (m, n) = (sc.rows, sc.cols);
        let mut worst: Option<(f64, usize)> = None;
        for _ in 0..m + n {
            let (row, col) = (rng.gen_range(0..m), rng.gen_range(0..n));
            let e = sc.residual(row, col, scale)?.abs();
            if better((e, row + m * col), worst) {
                worst = Some((e, row + m * col));
            }
        }
        let (worst_abs, lin) = worst.expect("supercore is never empty");
        let (wr, wc) = (lin % m, lin / m);
        let mut pivot: Option<(f64, usize)> = None;
        match dir {
            Direction::RightToLeft => {
                for col in 0..n {
                    let e = sc.residual(wr, col, scale)?.abs();
                    if better((e, wr + m * col), pivot) {
                        pivot = Some((e, wr + m * col));
                    }
                }
            }
            Direction::LeftToRight => {
                for row in 0..m {
                    let e = sc.residual(row, wc, scale)?.abs();
                    if better((e, row + m * wc), pivot) {
                        pivot = Some((e, row + m * wc));
                    }
                }
            }
        }
        let (p_abs, p_lin) = pivot.expect("supercore is never empty");
        (sc.index(p_lin % m, p_lin / m), p_abs, worst_abs)
    };

    let error = worst_abs.max(pivot_abs);
    let mut visit = Visit {
        error,
        added: 0,
        pivot: Some(pivot_idx.clone()),
    };
    let (left, right) = pivot_idx.split_at(k);
    let null = pivot_abs <= MACHINE_NULL * *scale || pivot_abs == 0.0;
    let duplicate = cf.sets().position_left(k, left).is_some() || cf.sets().position_right(k, right).is_some();
    let capped = cf.ranks()[k - 1] >= config.rank_cap;
    let banned = blacklist.iter().any(|(bk, p)| *bk == k && *p == pivot_idx);
    if null || duplicate || capped || banned || d < 2 {
        return Ok(visit);
    }
    if cf.insert_cross(oracle, k, left, right)? {
        visit.added = 1;
    } else {
        blacklist.push((k, pivot_idx));
    }
    Ok(visit)
}

fn full_cross_visit(
    oracle: &impl Oracle,
    cf: &mut CrossFactorization,
    k: usize,
    config: &RestrictedConfig,
    rng: &mut TtRng,
    scale: &mut f64,
) -> Result<Visit> {
    let (new_crosses, error, last) = {
        let sc = Supercore::new(oracle, cf, k);
        let (m, n) = (sc.rows, sc.cols);
        let sets = cf.sets();
        let rl = sets.left(k - 1).len();
        let nk = cf.shape().mode(k);
        // current crosses as supercore positions
        let seed_rows: Vec<usize> = sets
            .left(k)
            .iter()
            .map(|l| sets.position_left(k - 1, &l[..k - 1]).expect("nested sets") + rl * l[k - 1])
            .collect();
        let seed_cols: Vec<usize> = sets
            .right(k)
            .iter()
            .map(|r| r[0] + nk * sets.position_right(k + 1, &r[1..]).expect("nested sets"))
            .collect();
        let access = FnAccess::new(m, n, |row, col| oracle.eval(&sc.index(row, col)));
        let adaptive = AdaptiveCrossConfig {
            tolerance: config.tolerance,
            rank_cap: config.rank_cap.max(seed_rows.len()),
            verify_samples: config.verify_samples,
            seed: rng.gen(),
        };
        let rows = IndexSet::new(seed_rows.clone(), m)?;
        let cols = IndexSet::new(seed_cols.clone(), n)?;
        let skel = matrix_cross_adaptive(&access, &adaptive, Some((&rows, &cols)))?;
        let fresh: Vec<Vec<usize>> = skel.rows().as_slice()[seed_rows.len()..]
            .iter()
            .zip(&skel.cols().as_slice()[seed_cols.len()..])
            .map(|(&r, &c)| sc.index(r, c))
            .collect();
        // residual of the incoming interpolation at the first new pivot
        let error = match fresh.first() {
            Some(_) => {
                let (r, c) = (
                    skel.rows().as_slice()[seed_rows.len()],
                    skel.cols().as_slice()[seed_cols.len()],
                );
                let v = oracle.eval(&sc.index(r, c))?;
                (v - sc.approx(r, c)).abs()
            }
            None => 0.0,
        };
        let last = fresh.last().cloned();
        (fresh, error, last)
    };
    let mut added = 0;
    for idx in &new_crosses {
        *scale = scale.max(oracle.eval(idx)?.abs());
        let (left, right) = idx.split_at(k);
        if cf.insert_cross(oracle, k, left, right)? {
            added += 1;
        } else {
            break;
        }
    }
    Ok(Visit {
        error,
        added,
        pivot: last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cross::factorization::{
        cross_evaluate, distinct_entries, interpolation_residual_on_blocks, parameter_count,
    };
    use crate::cross::sets::check_nestedness;
    use crate::index::Shape;
    use crate::oracle::{exact_tt, inverse_norm, TensorOracle};
    use crate::tt::TensorTrain;

    #[test]
    fn constant_tensor_converges_immediately() {
        let o = TensorOracle::from_fn(Shape::uniform(5, 3).unwrap(), |_| 2.5);
        let cf = greedy_restricted(&o, &RestrictedConfig::default()).unwrap();
        assert!(cf.converged());
        assert_eq!(cf.ranks(), vec![1; 4]);
        assert_eq!(cf.sweeps(), 1);
        assert_eq!(cross_evaluate(&cf, &[2, 1, 0, 2, 1]).unwrap(), 2.5);
    }

    #[test]
    fn exact_tt_recovery_small() {
        let shape = Shape::uniform(4, 3).unwrap();
        let tt = TensorTrain::random(&shape, &[2, 2, 2], 12).unwrap();
        let o = exact_tt(tt.clone());
        let config = RestrictedConfig {
            tolerance: 1e-12,
            ..Default::default()
        };
        let cf = greedy_restricted(&o, &config).unwrap();
        assert!(cf.converged(), "{:?}", cf.stop_reason());
        assert!(cf.ranks().iter().all(|&r| r <= 2));
        let dense = tt.to_dense().unwrap();
        let scale = dense.chebyshev_norm();
        for idx in shape.indices() {
            assert!((cross_evaluate(&cf, &idx).unwrap() - dense.get(&idx).unwrap()).abs() <= 1e-11 * scale);
        }
        assert!(check_nestedness(cf.sets()).is_nested());
        assert_eq!(distinct_entries(&cf), parameter_count(&shape, &cf.ranks()).unwrap());
    }

    #[test]
    fn trace_records_every_visit() {
        let o = inverse_norm(Shape::uniform(4, 6).unwrap());
        let config = RestrictedConfig {
            rank_cap: 3,
            max_sweeps: 3,
            ..Default::default()
        };
        let cf = greedy_restricted(&o, &config).unwrap();
        assert_eq!(cf.trace().len(), cf.sweeps() * 6);
        assert!(cf.ranks().iter().all(|&r| r <= 3));
        let calls: Vec<u64> = cf.trace().iter().map(|t| t.oracle_calls).collect();
        assert!(calls.windows(2).all(|w| w[0] <= w[1]));
        let scale = cf.block_max_abs();
        assert!(interpolation_residual_on_blocks(&cf, &o).unwrap() <= 1e-12 * scale);
    }

    #[test]
    fn zero_tensor_stays_empty() {
        let o = TensorOracle::from_fn(Shape::uniform(3, 4).unwrap(), |_| 0.0);
        let cf = greedy_restricted(&o, &RestrictedConfig::default()).unwrap();
        assert!(cf.converged());
        assert_eq!(cf.ranks(), vec![0, 0]);
    }

    #[test]
    fn zero_corner_restarts_elsewhere() {
        let o = TensorOracle::from_fn(Shape::uniform(3, 4).unwrap(), |i| (i[0] * i[1] * i[2]) as f64);
        let cf = greedy_restricted(&o, &RestrictedConfig::default()).unwrap();
        assert!(cf.converged());
        assert_eq!(cf.ranks(), vec![1, 1]);
        assert_eq!(cross_evaluate(&cf, &[3, 2, 1]).unwrap(), 6.0);
    }

    #[test]
    fn full_cross_variant_recovers_exact_tt() {
        let shape = Shape::uniform(5, 3).unwrap();
        let tt = TensorTrain::random(&shape, &[2, 3, 3, 2], 2).unwrap();
        let o = exact_tt(tt.clone());
        let config = RestrictedConfig {
            tolerance: 1e-12,
            update: SupercoreUpdate::FullCross,
            ..Default::default()
        };
        let cf = greedy_restricted(&o, &config).unwrap();
        assert!(cf.converged());
        assert!(check_nestedness(cf.sets()).is_nested());
        let dense = tt.to_dense().unwrap();
        for idx in shape.indices() {
            assert!(
                (cross_evaluate(&cf, &idx).unwrap() - dense.get(&idx).unwrap()).abs() <= 1e-11 * dense.chebyshev_norm()
            );
        }
    }

    #[test]
    fn same_seed_same_result() {
        let o1 = inverse_norm(Shape::uniform(5, 5).unwrap());
        let o2 = inverse_norm(Shape::uniform(5, 5).unwrap());
        let config = RestrictedConfig {
            rank_cap: 4,
            seed: 9,
            ..Default::default()
        };
        let a = greedy_restricted(&o1, &config).unwrap();
        let b = greedy_restricted(&o2, &config).unwrap();
        assert_eq!(a.sets(), b.sets());
        assert_eq!(a.trace(), b.trace());
    }
}
