//! Experiment configs and runners: point and weight tables, the moment-transform table,
//! the moment-integral comparison, and Monte Carlo filtering studies.
//!
//! A config is one JSON document; [`run`] dispatches on its `experiment` field and returns a
//! [`Report`] table.

mod moments;
mod report;
mod spec;
mod tables;
mod tracking;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::models::{BotConfig, Ungm};
use crate::{Error, Result};

pub use moments::{kl_gauss, kl_scalar, mc_truth, run_moments, MomentCell, MomentsResult, MomentsSpec, Truth};
pub use report::{format_num, Cell, Report};
pub use spec::{read_points_csv, Count, KernelSpec, MethodSpec, PointSpec};
pub use tables::{FunctionSpec, TransformSpec};
pub use tracking::{run_bot, run_tracking, run_ungm, MethodRuns, TrackingResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Points,
    Weights,
    Transform,
    Moments,
    Ungm,
    Bot,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Points => "points",
            ExperimentKind::Weights => "weights",
            ExperimentKind::Transform => "transform",
            ExperimentKind::Moments => "moments",
            ExperimentKind::Ungm => "ungm",
            ExperimentKind::Bot => "bot",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

/// Either an explicit list or `{"start": s, "count": c}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range { start: u64, count: usize },
}

impl Seeds {
    pub fn resolve(&self, offset: u64) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.iter().map(|s| s.wrapping_add(offset)).collect(),
            Seeds::Range { start, count } => (0..*count as u64).map(|i| start.wrapping_add(i).wrapping_add(offset)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub methods: Vec<MethodSpec>,
    /// Trajectory seeds for `ungm` and `bot`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Seeds>,
    /// Time steps `T` for `ungm` and `bot`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// State dimension for `points` and `weights`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ungm: Option<Ungm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bot: Option<BotConfig>,
    #[serde(default)]
    pub output: OutputSpec,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        let kind = self.experiment;
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        for m in &self.methods {
            if kind != ExperimentKind::Points {
                m.validate()?;
            }
            if kind == ExperimentKind::Weights && m.kernel == KernelSpec::Classical {
                return Err(Error::Config(format!("{}: the weights experiment needs a GP kernel", m.label())));
            }
        }
        match kind {
            ExperimentKind::Points | ExperimentKind::Weights => {
                if !matches!(self.dim, Some(d) if d >= 1) {
                    return Err(Error::Config(format!("{} needs \"dim\" ≥ 1", kind.name())));
                }
            }
            ExperimentKind::Transform => {
                self.transform
                    .as_ref()
                    .ok_or_else(|| Error::Config("transform needs a \"transform\" section".into()))?
                    .validate()?;
            }
            ExperimentKind::Moments => self.moments_spec().validate()?,
            ExperimentKind::Ungm | ExperimentKind::Bot => {
                if self.seeds.as_ref().is_some_and(|s| s.resolve(0).is_empty()) {
                    return Err(Error::Config("seeds must be non-empty".into()));
                }
                if self.steps == Some(0) {
                    return Err(Error::Config("steps must be ≥ 1".into()));
                }
                if kind == ExperimentKind::Bot {
                    self.bot_config().validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn moments_spec(&self) -> MomentsSpec {
        self.moments.clone().unwrap_or_default()
    }

    pub fn bot_config(&self) -> BotConfig {
        self.bot.clone().unwrap_or_default()
    }

    /// Resolved trajectory seeds; 100 seeds from 0 when absent.
    pub fn seed_list(&self, offset: u64) -> Vec<u64> {
        self.seeds.clone().unwrap_or(Seeds::Range { start: 0, count: 100 }).resolve(offset)
    }

    /// Resolved `T`; 500 for `ungm` and 100 for `bot` when absent.
    pub fn step_count(&self) -> usize {
        self.steps.unwrap_or(match self.experiment {
            ExperimentKind::Bot => 100,
            _ => 500,
        })
    }
}

/// Runs the configured experiment. `seed_offset` shifts trajectory seeds and the Monte Carlo
/// oracle seed.
pub fn run(cfg: &ExperimentConfig, seed_offset: u64) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = match cfg.experiment {
        ExperimentKind::Points => tables::run_points(cfg)?,
        ExperimentKind::Weights => tables::run_weights(cfg)?,
        ExperimentKind::Transform => tables::run_transform(cfg)?,
        ExperimentKind::Moments => {
            let mut spec = cfg.moments_spec();
            spec.mc_seed = spec.mc_seed.wrapping_add(seed_offset);
            run_moments(&spec, &cfg.methods)?.to_report()
        }
        ExperimentKind::Ungm => run_ungm(
            &cfg.ungm.clone().unwrap_or_default(),
            &cfg.methods,
            &cfg.seed_list(seed_offset),
            cfg.step_count(),
        )?
        .to_report("ungm", "state"),
        ExperimentKind::Bot => run_bot(&cfg.bot_config(), &cfg.methods, &cfg.seed_list(seed_offset), cfg.step_count())?
            .to_report("bot", "position"),
    };
    report.metadata.insert("config".into(), serde_json::to_value(cfg)?);
    report.metadata.insert("seed_offset".into(), json!(seed_offset));
    report.metadata.insert("wall_time_s".into(), json!(start.elapsed().as_secs_f64()));
    Ok(report)
}
