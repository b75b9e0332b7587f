//! Point, weight and moment-transform tables.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::report::{Cell, Report};
use super::{ExperimentConfig, KernelSpec};
use crate::models::{bot_model, BotConfig, MomentIntegrand, Ungm};
use crate::{Error, Result};

fn point_columns(n: usize, extra: &[&str]) -> Vec<String> {
    let mut cols = vec!["method".to_string(), "index".to_string()];
    cols.extend((1..=n).map(|i| format!("xi{i}")));
    cols.extend(extra.iter().map(|s| s.to_string()));
    cols
}

fn table(experiment: &str, columns: Vec<String>) -> Report {
    let mut r = Report::new(experiment, &[]);
    r.columns = columns;
    r
}

fn error_row(label: String, width: usize, e: &Error) -> Vec<Cell> {
    let mut row = vec![Cell::Text(label)];
    row.extend((1..width).map(|_| Cell::Error(e.to_string())));
    row
}

/// One row per point: `method, index, xi1..xin, weight`.
///
/// Sets without classical weights (Hammersley, random, CSV) get an explicit error in the
/// weight column unless the method names a GP kernel.
pub(super) fn run_points(cfg: &ExperimentConfig) -> Result<Report> {
    let n = cfg.dim.expect("validated");
    let mut report = table("points", point_columns(n, &["weight"]));
    let mut failures = 0;
    for m in &cfg.methods {
        let outcome = (|| {
            let kernel = m.kernel.build(n)?;
            let pts = m.points.unit_points(n, kernel.as_ref(), m.jitter())?;
            let weights = if m.kernel == KernelSpec::Classical {
                match m.points.classical(n)? {
                    Some(rule) => Ok(rule.weights),
                    None => Err(format!("{} points have no classical weights", m.points.label())),
                }
            } else {
                Ok(m.build_rule(n)?.weights)
            };
            Ok::<_, Error>((pts, weights))
        })();
        match outcome {
            Ok((pts, weights)) => {
                for (i, p) in pts.iter().enumerate() {
                    let mut row = vec![Cell::Text(m.label()), Cell::Int(i as i64)];
                    row.extend(p.iter().map(|v| Cell::Num(*v)));
                    row.push(match &weights {
                        Ok(w) => Cell::Num(w[i]),
                        Err(e) => Cell::Error(e.clone()),
                    });
                    report.push(row);
                }
            }
            Err(e) => {
                failures += 1;
                report.push(error_row(m.label(), n + 3, &e));
            }
        }
    }
    report.all_methods_failed = failures == cfg.methods.len();
    Ok(report)
}

/// `method, index, xi1..xin, weight, posterior_variance`.
pub(super) fn run_weights(cfg: &ExperimentConfig) -> Result<Report> {
    let n = cfg.dim.expect("validated");
    let mut report = table("weights", point_columns(n, &["weight", "posterior_variance"]));
    let mut failures = 0;
    for m in &cfg.methods {
        match m.build_rule(n) {
            Ok(rule) => {
                let var = rule.posterior_variance.expect("GP kernel");
                for (i, p) in rule.points.iter().enumerate() {
                    let mut row = vec![Cell::Text(m.label()), Cell::Int(i as i64)];
                    row.extend(p.iter().map(|v| Cell::Num(*v)));
                    row.push(Cell::Num(rule.weights[i]));
                    row.push(Cell::Num(var));
                    report.push(row);
                }
            }
            Err(e @ Error::Config(_)) => return Err(e),
            Err(e) => {
                failures += 1;
                report.push(error_row(m.label(), n + 4, &e));
            }
        }
    }
    report.all_methods_failed = failures == cfg.methods.len();
    Ok(report)
}

/// Named test functions for the transform table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Identity,
    /// `(1 + xᵀx)^{p/2}`.
    Moment { p: f64 },
    UngmTransition { k: usize },
    UngmMeasurement,
    BotTransition {
        #[serde(default)]
        bot: BotConfig,
    },
    BotMeasurement {
        #[serde(default)]
        bot: BotConfig,
    },
    /// `(r, θ) ↦ (r cos θ, r sin θ)`.
    Polar,
}

impl FunctionSpec {
    /// Required input dimension, if fixed.
    fn input_dim(&self) -> Option<usize> {
        match self {
            FunctionSpec::Identity | FunctionSpec::Moment { .. } => None,
            FunctionSpec::UngmTransition { .. } | FunctionSpec::UngmMeasurement => Some(1),
            FunctionSpec::BotTransition { .. } | FunctionSpec::BotMeasurement { .. } => Some(5),
            FunctionSpec::Polar => Some(2),
        }
    }

    pub fn build(&self) -> Result<Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>> {
        Ok(match self.clone() {
            FunctionSpec::Identity => Box::new(|x| x.clone()),
            FunctionSpec::Moment { p } => {
                let g = MomentIntegrand::new(p);
                Box::new(move |x| DVector::from_element(1, g.y(x.as_slice())))
            }
            FunctionSpec::UngmTransition { k } => Box::new(move |x| DVector::from_element(1, Ungm::f(x[0], k))),
            FunctionSpec::UngmMeasurement => Box::new(|x| DVector::from_element(1, Ungm::h(x[0]))),
            FunctionSpec::BotTransition { bot } => {
                let m = bot_model(bot)?;
                Box::new(move |x| m.ct_step(x))
            }
            FunctionSpec::BotMeasurement { bot } => {
                let m = bot_model(bot)?;
                Box::new(move |x| m.bearings(x))
            }
            FunctionSpec::Polar => Box::new(|x| DVector::from_column_slice(&[x[0] * x[1].cos(), x[0] * x[1].sin()])),
        })
    }
}

/// Input Gaussian, additive output noise, and the function to push through.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSpec {
    pub mean: Vec<f64>,
    /// Row-major rows.
    pub cov: Vec<Vec<f64>>,
    /// Output noise covariance; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<Vec<Vec<f64>>>,
    pub function: FunctionSpec,
}

fn rows_to_matrix(rows: &[Vec<f64>], n: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("{what} must be {n}×{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl TransformSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.mean.len();
        if n == 0 {
            return Err(Error::Config("transform mean must be non-empty".into()));
        }
        if let Some(d) = self.function.input_dim() {
            if d != n {
                return Err(Error::Config(format!("function expects {d}-dimensional input, mean has {n}")));
            }
        }
        rows_to_matrix(&self.cov, n, "cov")?;
        let _ = self.function.build()?;
        Ok(())
    }
}

/// `method, quantity, i, j, value` with quantities `mean`, `cov`, `cross_cov`.
pub(super) fn run_transform(cfg: &ExperimentConfig) -> Result<Report> {
    let spec = cfg.transform.as_ref().expect("validated");
    let n = spec.mean.len();
    let mean = DVector::from_column_slice(&spec.mean);
    let cov = rows_to_matrix(&spec.cov, n, "cov")?;
    let g = spec.function.build()?;
    let d = g(&mean).len();
    let noise = match &spec.noise {
        Some(rows) => rows_to_matrix(rows, d, "noise")?,
        None => DMatrix::zeros(d, d),
    };
    let mut report = Report::new("transform", &["method", "quantity", "i", "j", "value"]);
    let mut failures = 0;
    for m in &cfg.methods {
        let result = m.build_rule(n).and_then(|rule| rule.transform(&g, &mean, &cov, &noise));
        match result {
            Ok(t) => {
                let mut emit = |q: &str, mat: &DMatrix<f64>| {
                    for i in 0..mat.nrows() {
                        for j in 0..mat.ncols() {
                            report.push(vec![
                                Cell::Text(m.label()),
                                Cell::Text(q.into()),
                                Cell::Int(i as i64),
                                Cell::Int(j as i64),
                                Cell::Num(mat[(i, j)]),
                            ]);
                        }
                    }
                };
                emit("mean", &DMatrix::from_column_slice(d, 1, t.mean.as_slice()));
                emit("cov", &t.cov);
                emit("cross_cov", &t.cross_cov);
            }
            Err(e @ Error::Config(_)) => return Err(e),
            Err(e) => {
                failures += 1;
                report.push(error_row(m.label(), 5, &e));
            }
        }
    }
    report.all_methods_failed = failures == cfg.methods.len();
    Ok(report)
}
