//! Experiment configuration: command-line flags layered over an optional
//! TOML file, layered over per-experiment defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use ttcross::{Shape, SupercoreUpdate, DEFAULT_DENSE_LIMIT};

/// A configuration that cannot be run. Maps to exit code 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvalidConfig(pub String);

impl fmt::Display for InvalidConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for InvalidConfig {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    InvalidConfig(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Interpolate,
    Quasiopt,
    Table,
    Recover,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    /// `1 / sqrt(i_1^2 + ... + i_d^2)`.
    InverseNorm,
    /// A random tensor train with uniform bond rank `r`.
    ExactTt,
    /// A random tensor train plus dense uniform noise of level `--noise`.
    NoisyTt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateKind {
    /// One cross per supercore visit.
    Single,
    /// Adaptive matrix cross inside each supercore.
    Full,
}

impl From<UpdateKind> for SupercoreUpdate {
    fn from(u: UpdateKind) -> Self {
        match u {
            UpdateKind::Single => SupercoreUpdate::SingleCross,
            UpdateKind::Full => SupercoreUpdate::FullCross,
        }
    }
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to the experiment's defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    /// TOML file with any of the keys below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of dimensions d (a comma-separated grid for `table`).
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Mode size n (a comma-separated grid for `table`).
    #[arg(long = "mode-size", value_delimiter = ',')]
    pub mode_size: Option<Vec<usize>>,
    /// Rank cap r, also the generator rank of random oracles (a grid for `table`).
    #[arg(long, visible_alias = "rank-cap", value_delimiter = ',')]
    pub ranks: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    pub oracle: Option<OracleKind>,
    /// Noise level mu of the noisy oracle.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stopping tolerance, relative to the largest entry seen.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Random entries used to estimate error norms.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Sweep limit.
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long, value_enum)]
    pub update: Option<UpdateKind>,
    /// Histogram bins for `quasiopt`.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Write the output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Include per-sweep traces in JSON output.
    #[arg(long)]
    pub trace: bool,
}

/// Keys accepted in a config file; names match the long flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub dims: Option<Vec<usize>>,
    pub mode_size: Option<Vec<usize>>,
    #[serde(alias = "rank-cap")]
    pub ranks: Option<Vec<usize>>,
    pub oracle: Option<OracleKind>,
    pub noise: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub samples: Option<usize>,
    pub sweeps: Option<usize>,
    pub update: Option<UpdateKind>,
    pub bins: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub trace: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }
}

/// A fully resolved, validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub dims: Vec<usize>,
    pub mode_sizes: Vec<usize>,
    pub ranks: Vec<usize>,
    pub oracle: OracleKind,
    pub noise: f64,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub samples: usize,
    pub sweeps: usize,
    pub update: UpdateKind,
    pub bins: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub trace: bool,
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = Self {
            kind,
            dims: vec![16],
            mode_sizes: vec![32],
            ranks: vec![12],
            oracle: OracleKind::InverseNorm,
            noise: 0.0,
            trials: 1,
            seed: 0,
            tolerance: 1e-10,
            samples: 100_000,
            sweeps: 50,
            update: UpdateKind::Single,
            bins: 20,
            out: None,
            format: OutputFormat::Table,
            trace: false,
        };
        match kind {
            ExperimentKind::Interpolate => base,
            ExperimentKind::Table => Self {
                ranks: vec![6, 12],
                format: OutputFormat::Table,
                ..base
            },
            ExperimentKind::Quasiopt => Self {
                mode_sizes: vec![2],
                ranks: vec![5],
                oracle: OracleKind::NoisyTt,
                noise: 1e-7,
                trials: 1000,
                tolerance: 1e-14,
                ..base
            },
            ExperimentKind::Recover => Self {
                dims: vec![6],
                mode_sizes: vec![4],
                ranks: vec![3],
                oracle: OracleKind::ExactTt,
                tolerance: 1e-11,
                ..base
            },
        }
    }

    /// Flags over file over defaults, then validation.
    pub fn resolve(kind: ExperimentKind, args: &ExperimentArgs) -> anyhow::Result<Self> {
        let file = match &args.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let d = Self::defaults(kind);
        let cfg = Self {
            kind,
            dims: args.dims.clone().or(file.dims).unwrap_or(d.dims),
            mode_sizes: args.mode_size.clone().or(file.mode_size).unwrap_or(d.mode_sizes),
            ranks: args.ranks.clone().or(file.ranks).unwrap_or(d.ranks),
            oracle: args.oracle.or(file.oracle).unwrap_or(d.oracle),
            noise: args.noise.or(file.noise).unwrap_or(d.noise),
            trials: args.trials.or(file.trials).unwrap_or(d.trials),
            seed: args.seed.or(file.seed).unwrap_or(d.seed),
            tolerance: args.tol.or(file.tol).unwrap_or(d.tolerance),
            samples: args.samples.or(file.samples).unwrap_or(d.samples),
            sweeps: args.sweeps.or(file.sweeps).unwrap_or(d.sweeps),
            update: args.update.or(file.update).unwrap_or(d.update),
            bins: args.bins.or(file.bins).unwrap_or(d.bins),
            out: args.out.clone().or(file.out),
            format: args.format.or(file.format).unwrap_or(d.format),
            trace: args.trace || file.trace.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let grid = self.kind == ExperimentKind::Table;
        for (name, list) in [
            ("dims", &self.dims),
            ("mode-size", &self.mode_sizes),
            ("ranks", &self.ranks),
        ] {
            if list.contains(&0) {
                return Err(invalid(format!("{name} must be positive")));
            }
            if !grid && list.len() != 1 {
                return Err(invalid(format!("{name} takes exactly one value for this experiment")));
            }
        }
        for (name, v) in [
            ("trials", self.trials),
            ("samples", self.samples),
            ("sweeps", self.sweeps),
            ("bins", self.bins),
        ] {
            if v == 0 {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(invalid(format!("tolerance {} must be positive", self.tolerance)));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(invalid(format!("noise {} must be finite and non-negative", self.noise)));
        }
        match self.kind {
            ExperimentKind::Quasiopt if self.oracle != OracleKind::NoisyTt => {
                return Err(invalid("quasiopt needs the noisy-tt oracle"));
            }
            ExperimentKind::Recover if self.oracle != OracleKind::ExactTt => {
                return Err(invalid("recover needs the exact-tt oracle"));
            }
            _ => {}
        }
        if self.oracle == OracleKind::NoisyTt {
            for &d in &self.dims {
                for &n in &self.mode_sizes {
                    let shape = Shape::uniform(d, n).map_err(|e| invalid(e.to_string()))?;
                    if shape.numel() > DEFAULT_DENSE_LIMIT as u128 {
                        return Err(invalid(format!(
                            "the noisy oracle is dense: {n}^{d} entries exceed the limit of {DEFAULT_DENSE_LIMIT}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// The single `(d, n, r)` of a non-grid experiment.
    pub fn cell(&self) -> Cell {
        Cell {
            d: self.dims[0],
            n: self.mode_sizes[0],
            r: self.ranks[0],
        }
    }

    /// Every `(d, n, r)` of the grid, `d` outermost, `r` innermost.
    pub fn grid(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &d in &self.dims {
            for &n in &self.mode_sizes {
                for &r in &self.ranks {
                    out.push(Cell { d, n, r });
                }
            }
        }
        out
    }
}

/// One `(d, n, r)` point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub d: usize,
    pub n: usize,
    pub r: usize,
}

impl Cell {
    pub fn shape(&self) -> anyhow::Result<Shape> {
        Shape::uniform(self.d, self.n).map_err(|e| invalid(e.to_string()))
    }
}
