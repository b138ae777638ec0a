//! Experiment description files (TOML).
//!
//! ```toml
//! name = "linear-1d"
//! dim = 1
//! seed = 7
//! sample_sizes = [500, 2000]
//!
//! [target]
//! family = "product"
//! factors = [{ family = "linear_tilt", a = 0.0, b = 2.0 }]
//!
//! [qoi]
//! family = "coordinate"
//! axis = 0
//!
//! [grid]
//! levels = [2, 4, 6]
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use lti_core::analysis::{Probe, Qoi, QoiSpec};
use lti_core::training::TrainConfig;
use lti_core::transport::{Density, Univariate};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// A density on `[0,1]^dim` built from the built-in families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Uniform,
    /// One univariate factor per axis.
    Product {
        factors: Vec<Univariate>,
    },
    /// The same univariate factor on every axis.
    Repeated {
        factor: Univariate,
    },
    /// `1 + c Π_i cos(π x_i)`.
    CosineCoupling {
        strength: f64,
    },
}

impl DensitySpec {
    pub fn build(&self, dim: usize) -> std::result::Result<Density, String> {
        let d = match self {
            DensitySpec::Uniform => Ok(Density::uniform(dim)),
            DensitySpec::Product { factors } => {
                if factors.len() != dim {
                    return Err(format!("{} factors given for dim = {dim}", factors.len()));
                }
                Density::product(factors.clone())
            }
            DensitySpec::Repeated { factor } => Density::product(vec![factor.clone(); dim]),
            DensitySpec::CosineCoupling { strength } => Density::cosine_coupling(dim, *strength),
        };
        d.map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Sparsity levels to evaluate, in output order.
    pub levels: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSpec {
    /// Probe for TV and KL; defaults by dimension.
    pub probe: Option<Probe>,
    pub divergences: bool,
    /// Measure the quadrature error against a dense oracle; defaults to `dim <= 2`.
    pub quadrature_error: Option<bool>,
    pub oracle_panels: usize,
    pub oracle_order: usize,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self { probe: None, divergences: true, quadrature_error: None, oracle_panels: 16, oracle_order: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub reports: PathBuf,
    pub table: PathBuf,
    pub telemetry: PathBuf,
    pub grids: PathBuf,
    pub checkpoints: PathBuf,
    /// Add wall-clock timings to telemetry. Off by default so that reruns
    /// reproduce every output byte.
    pub timing: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            reports: "reports.jsonl".into(),
            table: "convergence.csv".into(),
            telemetry: "telemetry.jsonl".into(),
            grids: "grids".into(),
            checkpoints: "checkpoints".into(),
            timing: false,
        }
    }
}

impl OutputSpec {
    pub fn path(&self, rel: &Path) -> PathBuf {
        self.dir.join(rel)
    }
}

fn default_source() -> DensitySpec {
    DensitySpec::Uniform
}

fn default_sample_sizes() -> Vec<usize> {
    vec![1000]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_sample_sizes")]
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_source")]
    pub source: DensitySpec,
    pub target: DensitySpec,
    pub qoi: QoiSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub training: TrainConfig,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
}

/// Densities and qoi built from a checked experiment.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub source: Density,
    pub target: Density,
    pub qoi: Qoi,
}

/// Pull the offending key out of a deserializer message such as
/// "missing field `dim`".
fn field_of(message: &str) -> String {
    for marker in ["missing field `", "unknown field `", "unknown variant `"] {
        if let Some(rest) = message.split(marker).nth(1) {
            if let Some(name) = rest.split('`').next() {
                return name.to_string();
            }
        }
    }
    "<file>".into()
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            CliError::config(field_of(&message), e)
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment descriptions always serialize")
    }

    /// Checks cross-field consistency and builds the densities.
    pub fn resolve(&self) -> Result<Resolved> {
        if self.dim == 0 {
            return Err(CliError::config("dim", "must be >= 1"));
        }
        if self.name.trim().is_empty() {
            return Err(CliError::config("name", "must not be empty"));
        }
        if self.grid.levels.is_empty() {
            return Err(CliError::config("grid.levels", "needs at least one level"));
        }
        if let Some(&l) = self.grid.levels.iter().find(|&&l| l > 20) {
            return Err(CliError::config("grid.levels", format!("level {l} is out of range (max 20)")));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.iter().any(|&n| n < 2) {
            return Err(CliError::config("sample_sizes", "needs at least one size, each >= 2"));
        }
        self.training.validate().map_err(|e| CliError::config("training", e))?;
        if self.analysis.oracle_panels == 0 || self.analysis.oracle_order == 0 {
            return Err(CliError::config("analysis", "oracle panels and order must be >= 1"));
        }
        let source = self.source.build(self.dim).map_err(|e| CliError::config("source", e))?;
        if source.factors().is_none() {
            return Err(CliError::config("source", "the source must be a product density"));
        }
        let target = self.target.build(self.dim).map_err(|e| CliError::config("target", e))?;
        let qoi = Qoi::from_spec(&self.qoi, self.dim).map_err(|e| CliError::config("qoi", e))?;
        Ok(Resolved { source, target, qoi })
    }
}

/// Parses `a..b` (inclusive), `a..=b` or a single level.
pub fn parse_levels(s: &str) -> std::result::Result<Vec<u32>, String> {
    let parse = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("{t:?}: {e}"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(format!("empty level range {s:?}"));
    }
    Ok((lo..=hi).collect())
}
