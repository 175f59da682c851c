//! Rendering of results as a text table, CSV, or JSON.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, Write};

use anyhow::Context;
use serde::Serialize;

use crate::config::{ExperimentConfig, OutputFormat};
use crate::record::{QuasioptReport, RunRecord, CSV_COLUMNS, QUASIOPT_CSV_COLUMNS};

/// Writes `text` to the configured file, or to stdout.
pub fn emit(cfg: &ExperimentConfig, text: &str) -> anyhow::Result<()> {
    match &cfg.out {
        Some(path) => {
            let mut f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            f.write_all(text.as_bytes())?;
        }
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct RunsJson<'a> {
    config: &'a ExperimentConfig,
    records: &'a [RunRecord],
}

#[derive(Serialize)]
struct QuasioptJson<'a> {
    config: &'a ExperimentConfig,
    #[serde(flatten)]
    report: &'a QuasioptReport,
}

fn opt(v: Option<f64>, f: impl Fn(f64) -> String) -> String {
    v.map(f).unwrap_or_else(|| "-".into())
}

fn sci(v: f64) -> String {
    format!("{v:.0e}")
}

/// Renders interpolation records.
pub fn render_runs(cfg: &ExperimentConfig, records: &[RunRecord]) -> anyhow::Result<String> {
    match cfg.format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(&RunsJson { config: cfg, records })? + "\n"),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            if records.is_empty() {
                w.write_record(CSV_COLUMNS)?;
            }
            for r in records {
                w.serialize(r.csv_row())?;
            }
            Ok(String::from_utf8(w.into_inner()?)?)
        }
        OutputFormat::Table if records.len() == 1 => Ok(listing(&records[0])),
        OutputFormat::Table => Ok(grid_table(cfg, records)),
    }
}

fn listing(r: &RunRecord) -> String {
    let mut s = String::new();
    let mut line = |k: &str, v: String| writeln!(s, "{k:<18}{v}").unwrap();
    line("cell", format!("d={} n={} r={}", r.d, r.n, r.r));
    line("oracle", format!("{:?}", r.oracle));
    line("seed", r.seed.to_string());
    if let Some(e) = &r.error {
        line("error", e.clone());
    }
    line("stop", opt_debug(&r.stop));
    line("success", r.success.to_string());
    line("ranks", format!("{:?}", r.ranks));
    line("sweeps", r.sweeps.to_string());
    line("oracle calls", r.oracle_calls.to_string());
    line(
        "parameter count",
        r.parameter_count.map_or("-".into(), |p| p.to_string()),
    );
    line(
        "distinct entries",
        r.distinct_entries.map_or("-".into(), |p| p.to_string()),
    );
    line("cheb err", opt(r.cheb_err, |v| format!("{v:.3e}")));
    line("frob err", opt(r.frob_err, |v| format!("{v:.3e}")));
    if let Some(e) = r.exhaustive_err {
        line("exhaustive err", format!("{e:.3e}"));
    }
    line("seconds", format!("{:.3}", r.seconds));
    if let Some(trace) = &r.trace {
        writeln!(s, "trace").unwrap();
        for t in trace {
            writeln!(s, "  {}", serde_json::to_string(t).unwrap()).unwrap();
        }
    }
    s
}

fn opt_debug<T: std::fmt::Debug>(v: &Option<T>) -> String {
    v.as_ref().map_or("-".into(), |x| format!("{x:?}"))
}

type Column = fn(&RunRecord) -> String;

/// Rows are `(d, n)` pairs, columns are ranks; each cell holds the
/// Chebyshev error, the Frobenius error and the seconds on three lines.
fn grid_table(cfg: &ExperimentConfig, records: &[RunRecord]) -> String {
    let width = 10;
    let mut s = String::new();
    write!(s, "{:<12}", "d, n").unwrap();
    for r in &cfg.ranks {
        write!(s, "{:>width$}", format!("r={r}")).unwrap();
    }
    s.push('\n');
    for chunk in records.chunks(cfg.ranks.len().max(1)) {
        let head = format!("{}, {}", chunk[0].d, chunk[0].n);
        let rows: [(&str, Column); 3] = [
            ("C", |r| opt(r.cheb_err, sci)),
            ("F", |r| opt(r.frob_err, sci)),
            ("sec", |r| {
                if r.stop.is_some() {
                    format!("{:.3}", r.seconds)
                } else {
                    "-".into()
                }
            }),
        ];
        for (i, (tag, f)) in rows.iter().enumerate() {
            let label = if i == 0 { head.as_str() } else { "" };
            write!(s, "{label:<8}{tag:<4}").unwrap();
            for r in chunk {
                write!(s, "{:>width$}", f(r)).unwrap();
            }
            s.push('\n');
        }
    }
    for r in records.iter().filter(|r| r.error.is_some()) {
        writeln!(
            s,
            "d={} n={} r={}: {}",
            r.d,
            r.n,
            r.r,
            r.error.as_deref().unwrap_or_default()
        )
        .unwrap();
    }
    s
}

/// Renders a quasioptimality report.
pub fn render_quasiopt(cfg: &ExperimentConfig, rep: &QuasioptReport) -> anyhow::Result<String> {
    match cfg.format {
        OutputFormat::Json => Ok(serde_json::to_string_pretty(&QuasioptJson {
            config: cfg,
            report: rep,
        })? + "\n"),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(QUASIOPT_CSV_COLUMNS)?;
            for t in &rep.trials {
                let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                w.write_record([
                    t.trial.to_string(),
                    t.seed.to_string(),
                    t.ranks.iter().max().copied().unwrap_or(0).to_string(),
                    serde_json::to_value(t.stop)?.as_str().unwrap_or_default().to_string(),
                    f(t.ratio),
                    f(t.log2_ratio),
                    t.kappa.to_string(),
                    t.bound.to_string(),
                ])?;
            }
            Ok(String::from_utf8(w.into_inner()?)?)
        }
        OutputFormat::Table => {
            let q = &rep.summary;
            let mut s = String::new();
            let mut line = |k: &str, v: String| writeln!(s, "{k:<18}{v}").unwrap();
            line("cell", format!("d={} n={} r={}", q.d, q.n, q.r));
            line("noise", format!("{:e}", q.noise));
            line(
                "trials",
                format!("{} ({} included, {} excluded)", q.trials, q.included, q.excluded),
            );
            line("mean log2 ratio", opt(q.mean_log2, |v| format!("{v:.3}")));
            line("sd log2 ratio", opt(q.sd_log2, |v| format!("{v:.3}")));
            line("min log2 ratio", opt(q.min_log2, |v| format!("{v:.3}")));
            line("max log2 ratio", opt(q.max_log2, |v| format!("{v:.3}")));
            line("bound violations", q.bound_violations.to_string());
            let peak = q.histogram.counts.iter().copied().max().unwrap_or(0).max(1);
            for (i, &c) in q.histogram.counts.iter().enumerate() {
                let (lo, hi) = (q.histogram.edges[i], q.histogram.edges[i + 1]);
                let bar = "#".repeat((c * 50).div_ceil(peak));
                writeln!(
                    s,
                    "[{lo:>7.3}, {hi:>7.3}{} {c:>6} {bar}",
                    if i + 1 == q.histogram.counts.len() { "]" } else { ")" }
                )
                .unwrap();
            }
            Ok(s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Cell, ExperimentKind, OracleKind};

    fn cfg(format: OutputFormat) -> ExperimentConfig {
        ExperimentConfig {
            format,
            ..ExperimentConfig::defaults(ExperimentKind::Table)
        }
    }

    #[test]
    fn empty_grid_csv_is_header_only() {
        let out = render_runs(&cfg(OutputFormat::Csv), &[]).unwrap();
        assert_eq!(out, "d,n,r,cheb_err,frob_err,seconds,oracle_calls\n");
    }

    #[test]
    fn failed_rows_leave_measurements_empty() {
        let r = RunRecord::failed(Cell { d: 2, n: 3, r: 1 }, OracleKind::InverseNorm, 0, "boom".into());
        let out = render_runs(&cfg(OutputFormat::Csv), std::slice::from_ref(&r)).unwrap();
        assert_eq!(out.lines().nth(1), Some("2,3,1,,,,"));
        let table = render_runs(&cfg(OutputFormat::Table), &[r.clone(), r]).unwrap();
        assert!(table.contains("boom"));
    }

    #[test]
    fn json_carries_config_and_records() {
        let r = RunRecord::failed(Cell { d: 2, n: 3, r: 1 }, OracleKind::InverseNorm, 0, "x".into());
        let v: serde_json::Value = serde_json::from_str(&render_runs(&cfg(OutputFormat::Json), &[r]).unwrap()).unwrap();
        assert_eq!(v["records"][0]["d"], 2);
        assert_eq!(v["config"]["kind"], "table");
    }
}
