//! Result types emitted by the experiments.

use serde::Serialize;
use ttcross::{StopReason, TraceEntry};

use crate::config::{Cell, OracleKind};

/// One interpolation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub d: usize,
    pub n: usize,
    pub r: usize,
    pub oracle: OracleKind,
    pub seed: u64,
    pub ranks: Vec<usize>,
    /// `None` when the run failed before producing an interpolation.
    pub stop: Option<StopReason>,
    pub success: bool,
    pub sweeps: usize,
    /// Distinct oracle entries requested by the interpolation itself.
    pub oracle_calls: u64,
    pub parameter_count: Option<usize>,
    pub distinct_entries: Option<usize>,
    /// Sampled `|A - A~| / |A|`.
    pub cheb_err: Option<f64>,
    /// Sampled `||A - A~|| / ||A||`.
    pub frob_err: Option<f64>,
    /// Exact relative Chebyshev error, when every entry was checked.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exhaustive_err: Option<f64>,
    /// Wall time of the interpolation call alone.
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEntry>>,
}

impl RunRecord {
    pub fn failed(cell: Cell, oracle: OracleKind, seed: u64, error: String) -> Self {
        Self {
            d: cell.d,
            n: cell.n,
            r: cell.r,
            oracle,
            seed,
            ranks: Vec::new(),
            stop: None,
            success: false,
            sweeps: 0,
            oracle_calls: 0,
            parameter_count: None,
            distinct_entries: None,
            cheb_err: None,
            frob_err: None,
            exhaustive_err: None,
            seconds: 0.0,
            error: Some(error),
            trace: None,
        }
    }

    pub fn csv_row(&self) -> CsvRow {
        let ran = self.stop.is_some();
        CsvRow {
            d: self.d,
            n: self.n,
            r: self.r,
            cheb_err: self.cheb_err,
            frob_err: self.frob_err,
            seconds: ran.then_some(self.seconds),
            oracle_calls: ran.then_some(self.oracle_calls),
        }
    }
}

/// The flat CSV schema; column order is the field order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub d: usize,
    pub n: usize,
    pub r: usize,
    pub cheb_err: Option<f64>,
    pub frob_err: Option<f64>,
    pub seconds: Option<f64>,
    pub oracle_calls: Option<u64>,
}

pub const CSV_COLUMNS: [&str; 7] = ["d", "n", "r", "cheb_err", "frob_err", "seconds", "oracle_calls"];

/// One quasioptimality trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasioptTrial {
    pub trial: usize,
    pub seed: u64,
    pub ranks: Vec<usize>,
    pub stop: StopReason,
    /// `|A - A~|_C / |A - X|_C`; `None` when the reference is exact.
    pub ratio: Option<f64>,
    pub log2_ratio: Option<f64>,
    pub kappa: f64,
    /// The a priori bound at the achieved maximal rank and measured kappa.
    pub bound: f64,
}

pub const QUASIOPT_CSV_COLUMNS: [&str; 8] = [
    "trial",
    "seed",
    "max_rank",
    "stop",
    "ratio",
    "log2_ratio",
    "kappa",
    "bound",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges; the last bin is closed.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Self {
        if values.is_empty() {
            return Self {
                edges: Vec::new(),
                counts: Vec::new(),
            };
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            hi = lo + 1.0;
        }
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|b| lo + width * b as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Self { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasioptSummary {
    pub d: usize,
    pub n: usize,
    pub r: usize,
    pub noise: f64,
    pub trials: usize,
    pub included: usize,
    /// Trials whose reference is exact, left out of the statistics.
    pub excluded: usize,
    pub mean_log2: Option<f64>,
    /// Sample standard deviation.
    pub sd_log2: Option<f64>,
    pub min_log2: Option<f64>,
    pub max_log2: Option<f64>,
    /// Trials whose ratio exceeds the a priori bound.
    pub bound_violations: usize,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasioptReport {
    pub summary: QuasioptSummary,
    pub trials: Vec<QuasioptTrial>,
}

impl QuasioptReport {
    pub fn new(cell: Cell, noise: f64, bins: usize, trials: Vec<QuasioptTrial>) -> Self {
        let logs: Vec<f64> = trials.iter().filter_map(|t| t.log2_ratio).collect();
        let k = logs.len();
        let mean = (k > 0).then(|| logs.iter().sum::<f64>() / k as f64);
        let sd = mean.filter(|_| k > 1).map(|m| {
            let ss: f64 = logs.iter().map(|x| (x - m) * (x - m)).sum();
            (ss / (k - 1) as f64).sqrt()
        });
        let summary = QuasioptSummary {
            d: cell.d,
            n: cell.n,
            r: cell.r,
            noise,
            trials: trials.len(),
            included: k,
            excluded: trials.len() - k,
            mean_log2: mean,
            sd_log2: sd,
            min_log2: logs.iter().copied().reduce(f64::min),
            max_log2: logs.iter().copied().reduce(f64::max),
            bound_violations: trials.iter().filter(|t| t.ratio.is_some_and(|q| q > t.bound)).count(),
            histogram: Histogram::new(&logs, bins),
        };
        Self { summary, trials }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_everything() {
        let h = Histogram::new(&[0.0, 0.5, 1.0, 2.0], 2);
        assert_eq!(h.edges, vec![0.0, 1.0, 2.0]);
        assert_eq!(h.counts, vec![2, 2]);
        let flat = Histogram::new(&[3.0, 3.0], 4);
        assert_eq!(flat.counts.iter().sum::<usize>(), 2);
        assert!(Histogram::new(&[], 3).counts.is_empty());
    }

    fn trial(t: usize, ratio: Option<f64>) -> QuasioptTrial {
        QuasioptTrial {
            trial: t,
            seed: t as u64,
            ranks: vec![1],
            stop: StopReason::RankCapReached,
            ratio,
            log2_ratio: ratio.map(f64::log2),
            kappa: 1.0,
            bound: 16.0,
        }
    }

    #[test]
    fn summary_statistics() {
        let cell = Cell { d: 2, n: 2, r: 1 };
        let rep = QuasioptReport::new(
            cell,
            1e-3,
            4,
            vec![trial(0, Some(2.0)), trial(1, Some(8.0)), trial(2, None)],
        );
        let s = &rep.summary;
        assert_eq!((s.included, s.excluded), (2, 1));
        assert_eq!(s.mean_log2, Some(2.0));
        assert!((s.sd_log2.unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.bound_violations, 0);
        let all_out = QuasioptReport::new(cell, 0.0, 4, vec![trial(0, None)]);
        assert_eq!(all_out.summary.mean_log2, None);
    }
}
