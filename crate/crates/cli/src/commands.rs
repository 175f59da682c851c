//! The four experiments.

use std::time::Instant;

use anyhow::Context;
use rayon::prelude::*;
use ttcross::oracle::{estimate_norms, exact_tt};
use ttcross::{
    cross_evaluate, distinct_entries, greedy_restricted, inverse_norm, measure_kappa, parameter_count, quasiopt_ratio,
    residual_oracle, thm1_bound, CrossFactorization, NoisyTTOracle, Oracle, RestrictedConfig, Sampling, StopReason,
    TensorTrain, TtError,
};

use crate::config::{Cell, ExperimentConfig, OracleKind};
use crate::record::{QuasioptReport, QuasioptTrial, RunRecord};

/// Keeps the error-estimation sample independent of the pivot search.
const SAMPLE_STREAM: u64 = 0x5bd1_e995_0000_0001;

/// Recovery runs are checked entry by entry up to this many entries.
const EXHAUSTIVE_LIMIT: u128 = 1 << 20;

/// A finished interpolation and its record.
pub struct Interpolation {
    pub record: RunRecord,
    pub cf: CrossFactorization,
}

/// Builds the oracle of a cell. The generator of random oracles has
/// uniform bond rank `r`.
pub fn build_oracle(kind: OracleKind, cell: Cell, noise: f64, seed: u64) -> anyhow::Result<Box<dyn Oracle>> {
    let shape = cell.shape()?;
    let ranks = vec![cell.r; cell.d - 1];
    Ok(match kind {
        OracleKind::InverseNorm => Box::new(inverse_norm(shape)),
        OracleKind::ExactTt => Box::new(exact_tt(TensorTrain::random(&shape, &ranks, seed)?)),
        OracleKind::NoisyTt => Box::new(NoisyTTOracle::new(&shape, &ranks, noise, seed)?),
    })
}

fn restricted_config(cfg: &ExperimentConfig, cell: Cell, seed: u64) -> RestrictedConfig {
    RestrictedConfig {
        tolerance: cfg.tolerance,
        rank_cap: cell.r,
        max_sweeps: cfg.sweeps,
        seed,
        update: cfg.update.into(),
        ..Default::default()
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Runs the restricted greedy cross on `oracle` and measures it. Only the
/// interpolation call is timed; error estimation happens afterwards on
/// `cfg.samples` random entries.
pub fn interpolate_oracle(
    oracle: &dyn Oracle,
    kind: OracleKind,
    cell: Cell,
    cfg: &ExperimentConfig,
) -> anyhow::Result<Interpolation> {
    let seed = cfg.seed;
    let start = Instant::now();
    let cf = greedy_restricted(&oracle, &restricted_config(cfg, cell, seed))?;
    let seconds = start.elapsed().as_secs_f64();
    let calls = oracle.stats().distinct;

    let sampling = Sampling::Random {
        count: cfg.samples,
        seed: seed ^ SAMPLE_STREAM,
    };
    let reference = estimate_norms(&oracle, &sampling)?;
    let residual = estimate_norms(&residual_oracle(&oracle, &cf), &sampling)?;
    let stop = cf.stop_reason();
    let record = RunRecord {
        d: cell.d,
        n: cell.n,
        r: cell.r,
        oracle: kind,
        seed,
        ranks: cf.ranks(),
        stop: Some(stop),
        success: matches!(stop, StopReason::Converged | StopReason::RankCapReached),
        sweeps: cf.sweeps(),
        oracle_calls: calls,
        parameter_count: Some(parameter_count(cf.shape(), &cf.ranks())?),
        distinct_entries: Some(distinct_entries(&cf)),
        cheb_err: Some(ratio(residual.chebyshev, reference.chebyshev)),
        frob_err: Some(ratio(residual.frobenius, reference.frobenius)),
        exhaustive_err: None,
        seconds,
        error: None,
        trace: cfg.trace.then(|| cf.trace().to_vec()),
    };
    Ok(Interpolation { record, cf })
}

/// Interpolates the configured oracle at the configured cell.
pub fn cmd_interpolate(cfg: &ExperimentConfig) -> anyhow::Result<Interpolation> {
    let cell = cfg.cell();
    let oracle = build_oracle(cfg.oracle, cell, cfg.noise, cfg.seed)?;
    interpolate_oracle(oracle.as_ref(), cfg.oracle, cell, cfg)
}

/// Interpolates a random exact TT and checks the recovery: entry by entry
/// at desk scale, on the error sample otherwise. Success requires the
/// relative Chebyshev error to be within the tolerance.
pub fn cmd_recover(cfg: &ExperimentConfig) -> anyhow::Result<Interpolation> {
    let cell = cfg.cell();
    let oracle = build_oracle(OracleKind::ExactTt, cell, 0.0, cfg.seed)?;
    let mut run = interpolate_oracle(oracle.as_ref(), OracleKind::ExactTt, cell, cfg)?;
    let shape = cell.shape()?;
    let err = if shape.numel() <= EXHAUSTIVE_LIMIT {
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for idx in shape.indices() {
            let v = oracle.eval(&idx)?;
            num = num.max((v - cross_evaluate(&run.cf, &idx)?).abs());
            den = den.max(v.abs());
        }
        let e = ratio(num, den);
        run.record.exhaustive_err = Some(e);
        e
    } else {
        run.record.cheb_err.unwrap_or(f64::INFINITY)
    };
    run.record.success = run.cf.stop_reason() == StopReason::Converged && err <= cfg.tolerance;
    Ok(run)
}

/// Interpolates every cell of the grid, in order. A failing cell becomes a
/// record carrying the error; the remaining cells still run.
pub fn cmd_table(cfg: &ExperimentConfig) -> Vec<RunRecord> {
    cfg.grid()
        .into_iter()
        .map(|cell| {
            build_oracle(cfg.oracle, cell, cfg.noise, cfg.seed)
                .and_then(|o| interpolate_oracle(o.as_ref(), cfg.oracle, cell, cfg))
                .map(|run| run.record)
                .unwrap_or_else(|e| RunRecord::failed(cell, cfg.oracle, cfg.seed, format!("{e:#}")))
        })
        .collect()
}

/// One noisy trial with seed `cfg.seed + trial`.
pub fn quasiopt_trial(cfg: &ExperimentConfig, cell: Cell, trial: usize) -> anyhow::Result<QuasioptTrial> {
    let seed = cfg.seed.wrapping_add(trial as u64);
    let shape = cell.shape()?;
    let oracle = NoisyTTOracle::new(&shape, &vec![cell.r; cell.d - 1], cfg.noise, seed)?;
    let cf = greedy_restricted(&oracle, &restricted_config(cfg, cell, seed))?;
    let kappa = measure_kappa(&cf, oracle.full().chebyshev_norm());
    let bound = thm1_bound(cell.d, cf.max_rank().max(1), kappa).value();
    let ratio = match quasiopt_ratio(oracle.full(), oracle.reference(), &cf) {
        Ok(q) => Some(q),
        Err(TtError::ExactReference) => None,
        Err(e) => return Err(e).with_context(|| format!("trial {trial}")),
    };
    Ok(QuasioptTrial {
        trial,
        seed,
        ranks: cf.ranks(),
        stop: cf.stop_reason(),
        ratio,
        log2_ratio: ratio.map(f64::log2),
        kappa,
        bound,
    })
}

/// Independent trials in parallel; results are ordered by trial number.
pub fn cmd_quasiopt(cfg: &ExperimentConfig) -> anyhow::Result<QuasioptReport> {
    let cell = cfg.cell();
    let trials = (0..cfg.trials)
        .into_par_iter()
        .map(|t| quasiopt_trial(cfg, cell, t))
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(QuasioptReport::new(cell, cfg.noise, cfg.bins, trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentKind;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            dims: vec![5],
            mode_sizes: vec![3],
            ranks: vec![2],
            samples: 500,
            ..ExperimentConfig::defaults(kind)
        }
    }

    #[test]
    fn rank_one_matrix_needs_one_cross() {
        let cfg = ExperimentConfig {
            dims: vec![2],
            mode_sizes: vec![7],
            ranks: vec![1],
            oracle: OracleKind::ExactTt,
            tolerance: 1e-12,
            ..small(ExperimentKind::Interpolate)
        };
        let run = cmd_interpolate(&cfg).unwrap();
        assert!(run.record.success);
        assert_eq!(run.record.ranks, vec![1]);
        assert!(run.record.cheb_err.unwrap() <= 1e-12);
        assert!(run.record.frob_err.unwrap() <= 1e-12);
    }

    #[test]
    fn same_seed_same_record_modulo_time() {
        let cfg = small(ExperimentKind::Interpolate);
        let mut a = cmd_interpolate(&cfg).unwrap().record;
        let mut b = cmd_interpolate(&cfg).unwrap().record;
        a.seconds = 0.0;
        b.seconds = 0.0;
        assert_eq!(a, b);
    }

    #[test]
    fn recover_reports_parameter_count() {
        let run = cmd_recover(&small(ExperimentKind::Recover)).unwrap();
        assert!(run.record.success);
        assert_eq!(run.record.distinct_entries, run.record.parameter_count);
        assert!(run.record.exhaustive_err.unwrap() <= 1e-11);
    }

    #[test]
    fn table_keeps_failed_cells() {
        let cfg = ExperimentConfig {
            dims: vec![3, 30],
            mode_sizes: vec![2],
            ranks: vec![1],
            oracle: OracleKind::NoisyTt,
            noise: 1e-3,
            ..small(ExperimentKind::Table)
        };
        let rows = cmd_table(&cfg);
        assert_eq!(rows.len(), 2);
        assert!(rows[0].success);
        assert!(!rows[1].success && rows[1].error.is_some());
    }

    #[test]
    fn noiseless_quasiopt_trials_are_excluded() {
        let cfg = ExperimentConfig {
            dims: vec![4],
            mode_sizes: vec![2],
            ranks: vec![2],
            noise: 0.0,
            trials: 3,
            ..ExperimentConfig::defaults(ExperimentKind::Quasiopt)
        };
        let rep = cmd_quasiopt(&cfg).unwrap();
        assert_eq!((rep.summary.included, rep.summary.excluded), (0, 3));
    }

    #[test]
    fn quasiopt_trials_are_ordered_and_bounded() {
        let cfg = ExperimentConfig {
            dims: vec![6],
            mode_sizes: vec![2],
            ranks: vec![2],
            noise: 1e-4,
            trials: 16,
            ..ExperimentConfig::defaults(ExperimentKind::Quasiopt)
        };
        let rep = cmd_quasiopt(&cfg).unwrap();
        assert!(rep
            .trials
            .iter()
            .enumerate()
            .all(|(i, t)| t.trial == i && t.seed == i as u64));
        assert_eq!(rep.summary.included, 16);
        assert_eq!(rep.summary.bound_violations, 0);
    }
}
