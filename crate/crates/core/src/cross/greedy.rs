//! Greedy global cross: pick the largest residual entry anywhere and add it
//! to the interpolation sets at every separator where that keeps the sets
//! nested and the intersection matrices nonsingular.

use rand::Rng;

use super::factorization::{cross_to_tt, evaluate_unchecked, CrossFactorization, StopReason, TraceEntry};
use crate::dense::DEFAULT_DENSE_LIMIT;
use crate::error::{Result, TtError};
use crate::index::MultiIndex;
use crate::lu::MACHINE_NULL;
use crate::oracle::Oracle;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotStrategy {
    /// Exact argmax over every entry; dense-sized tensors only.
    Full,
    /// Max over `count` uniformly sampled entries.
    RandomSample { count: usize },
}

#[derive(Debug, Clone)]
pub struct GlobalConfig {
    pub tolerance: f64,
    pub rank_cap: usize,
    pub max_iterations: usize,
    pub strategy: PivotStrategy,
    pub seed: u64,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            rank_cap: usize::MAX,
            max_iterations: 1000,
            strategy: PivotStrategy::Full,
            seed: 0,
        }
    }
}

pub fn greedy_global(oracle: &impl Oracle, config: &GlobalConfig) -> Result<CrossFactorization> {
    let shape = oracle.shape().clone();
    let d = shape.ndim();
    if let PivotStrategy::Full = config.strategy {
        shape.dense_len(DEFAULT_DENSE_LIMIT)?;
    }
    if let PivotStrategy::RandomSample { count: 0 } = config.strategy {
        return Err(TtError::InvalidShape("pivot sample count must be positive".into()));
    }
    let mut cf = CrossFactorization::empty(oracle)?;
    if d == 1 {
        return Ok(cf);
    }
    let mut rng = rng::seeded(config.seed);
    let mut scale = 0.0f64;
    let mut stop = StopReason::SweepLimit;
    let mut iterations = 0;

    for it in 1..=config.max_iterations {
        iterations = it;
        let candidates = residual_candidates(oracle, &cf, config.strategy, &mut rng, &mut scale)?;
        let top = candidates.first().map_or(0.0, |c| c.0);
        if top <= config.tolerance * scale || top <= MACHINE_NULL * scale {
            stop = StopReason::Converged;
            cf.trace.push(entry(it, Vec::new(), None, top, &cf, oracle));
            break;
        }
        let mut inserted = None;
        for (value, idx) in &candidates {
            if *value <= config.tolerance * scale || *value <= MACHINE_NULL * scale {
                break;
            }
            let mut separators = insertion_separators(oracle, &cf, idx, config.rank_cap, scale)?;
            while !separators.is_empty() {
                let mut sets = cf.sets().clone();
                for &k in &separators {
                    sets.push(k, idx[..k].to_vec(), idx[k..].to_vec());
                }
                match CrossFactorization::from_sets(oracle, sets) {
                    Ok(next) => {
                        cf = next;
                        inserted = Some((separators.clone(), idx.clone(), *value));
                        break;
                    }
                    Err(TtError::SingularIntersection { separator }) => {
                        separators.retain(|&k| k != separator);
                        separators = prune(&cf, idx, separators);
                    }
                    Err(e) => return Err(e),
                }
            }
            if inserted.is_some() {
                break;
            }
        }
        match inserted {
            Some((seps, idx, value)) => cf.trace.push(entry(it, seps, Some(idx), value, &cf, oracle)),
            None => {
                let capped = cf.ranks().iter().all(|&r| r >= config.rank_cap);
                stop = if capped {
                    StopReason::RankCapReached
                } else {
                    StopReason::Stagnated
                };
                cf.trace.push(entry(it, Vec::new(), None, top, &cf, oracle));
                break;
            }
        }
    }
    cf.stop = stop;
    cf.sweeps = iterations;
    Ok(cf)
}

fn entry(
    sweep: usize,
    separators: Vec<usize>,
    pivot: Option<Vec<usize>>,
    residual: f64,
    cf: &CrossFactorization,
    oracle: &impl Oracle,
) -> TraceEntry {
    TraceEntry {
        sweep,
        separators,
        direction: None,
        pivot: pivot.map(MultiIndex),
        residual,
        ranks: cf.ranks(),
        oracle_calls: oracle.stats().distinct,
    }
}

/// Residual magnitudes with their indices, largest first, lowest linear
/// index first among equals.
fn residual_candidates(
    oracle: &impl Oracle,
    cf: &CrossFactorization,
    strategy: PivotStrategy,
    rng: &mut rng::TtRng,
    scale: &mut f64,
) -> Result<Vec<(f64, Vec<usize>)>> {
    let shape = oracle.shape();
    let mut list: Vec<(f64, usize, Vec<usize>)> = match strategy {
        PivotStrategy::Full => {
            let approx = cross_to_tt(cf)?.to_dense()?;
            shape
                .indices()
                .enumerate()
                .map(|(lin, idx)| {
                    let v = oracle.eval(&idx)?;
                    *scale = scale.max(v.abs());
                    Ok(((v - approx.values()[lin]).abs(), lin, idx))
                })
                .collect::<Result<_>>()?
        }
        PivotStrategy::RandomSample { count } => (0..count)
            .map(|_| {
                let idx: Vec<usize> = shape.dims().iter().map(|&n| rng.gen_range(0..n)).collect();
                let v = oracle.eval(&idx)?;
                *scale = scale.max(v.abs());
                let lin = linear_or_max(shape, &idx);
                Ok(((v - evaluate_unchecked(cf, &idx)).abs(), lin, idx))
            })
            .collect::<Result<_>>()?,
    };
    list.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    list.dedup_by(|a, b| a.2 == b.2);
    Ok(list.into_iter().map(|(v, _, idx)| (v, idx)).collect())
}

fn linear_or_max(shape: &crate::index::Shape, idx: &[usize]) -> usize {
    let mut lin: usize = 0;
    for (&i, &n) in idx.iter().zip(shape.dims()).rev() {
        lin = match lin.checked_mul(n).and_then(|v| v.checked_add(i)) {
            Some(v) => v,
            None => return usize::MAX,
        };
    }
    lin
}

/// Largest set of separators at which `idx` can be inserted: the cross is
/// new there, the rank is below the cap, the unfolding residual at `idx` is
/// not machine-null, and the neighbours keep the sets nested.
fn insertion_separators(
    oracle: &impl Oracle,
    cf: &CrossFactorization,
    idx: &[usize],
    cap: usize,
    scale: f64,
) -> Result<Vec<usize>> {
    let d = cf.ndim();
    let sets = cf.sets();
    let mut chosen = Vec::new();
    for k in 1..d {
        let (left, right) = idx.split_at(k);
        if sets.position_left(k, left).is_some() || sets.position_right(k, right).is_some() {
            continue;
        }
        if sets.left(k).len() >= cap {
            continue;
        }
        if unfolding_residual(oracle, cf, idx, k)?.abs() <= MACHINE_NULL * scale {
            continue;
        }
        chosen.push(k);
    }
    Ok(prune(cf, idx, chosen))
}

/// Removes separators whose insertion would break nestedness, to a fixpoint.
fn prune(cf: &CrossFactorization, idx: &[usize], mut chosen: Vec<usize>) -> Vec<usize> {
    let d = cf.ndim();
    let sets = cf.sets();
    loop {
        let keep: Vec<usize> = chosen
            .iter()
            .copied()
            .filter(|&k| {
                let prefix_ok =
                    k == 1 || chosen.contains(&(k - 1)) || sets.position_left(k - 1, &idx[..k - 1]).is_some();
                let tail_ok =
                    k + 1 == d || chosen.contains(&(k + 1)) || sets.position_right(k + 1, &idx[k + 1..]).is_some();
                prefix_ok && tail_ok
            })
            .collect();
        if keep.len() == chosen.len() {
            return keep;
        }
        chosen = keep;
    }
}

/// Schur complement of the `k`-th unfolding skeleton at `idx`:
/// `A(i) - A(i_{<=k}, I^{>k}) A_k^{-1} A(I^{<=k}, i_{>k})`.
fn unfolding_residual(oracle: &impl Oracle, cf: &CrossFactorization, idx: &[usize], k: usize) -> Result<f64> {
    let sets = cf.sets();
    let value = oracle.eval(idx)?;
    let Some(lu) = cf.intersection_lu(k) else {
        return Ok(value);
    };
    let (left, right) = idx.split_at(k);
    let mut buf = Vec::with_capacity(idx.len());
    let mut row: Vec<f64> = Vec::with_capacity(lu.dim());
    for r in sets.right(k) {
        buf.clear();
        buf.extend_from_slice(left);
        buf.extend_from_slice(r);
        row.push(oracle.eval(&buf)?);
    }
    let mut col: Vec<f64> = Vec::with_capacity(lu.dim());
    for l in sets.left(k) {
        buf.clear();
        buf.extend_from_slice(l);
        buf.extend_from_slice(right);
        col.push(oracle.eval(&buf)?);
    }
    lu.solve_in_place(&mut col);
    Ok(value - row.iter().zip(&col).map(|(a, b)| a * b).sum::<f64>())
}
