//! Method specifications: which unit points, which kernel, which jitter.

use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::kernels::Kernel;
use crate::points::{
    cubature_points, gauss_hermite_points, hammersley_points, optimize_points, random_points, symmetric5_points,
    ut_points, ClassicalRule, OptimizeOptions, PointSetKind, UnitPointSet,
};
use crate::quadrature::{gpq_weights, QuadratureRule, DEFAULT_SE_JITTER};
use crate::{Error, Result};

/// A point count, either fixed or linear in the dimension (`"2n"`, `"2n+1"`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Count {
    Fixed(usize),
    PerDim(String),
}

impl Count {
    pub fn resolve(&self, n: usize) -> Result<usize> {
        let count = match self {
            Count::Fixed(c) => *c,
            Count::PerDim(expr) => {
                let bad = || Error::Config(format!("point count {expr:?} is not of the form \"an\" or \"an+b\""));
                let s: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
                let (lin, off) = match s.split_once('+') {
                    Some((l, o)) => (l, o.parse::<usize>().map_err(|_| bad())?),
                    None => (s.as_str(), 0),
                };
                let a = lin.strip_suffix('n').ok_or_else(bad)?;
                let a = if a.is_empty() { 1 } else { a.parse::<usize>().map_err(|_| bad())? };
                a * n + off
            }
        };
        if count == 0 {
            return Err(Error::Config("point count must be ≥ 1".into()));
        }
        Ok(count)
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Count::Fixed(c) => write!(f, "{c}"),
            Count::PerDim(s) => write!(f, "{s}"),
        }
    }
}

fn default_restarts() -> usize {
    OptimizeOptions::default().restarts
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointSpec {
    Ut { kappa: f64 },
    Cubature,
    Symmetric5,
    GaussHermite { order: usize },
    Random { count: Count, #[serde(default)] seed: u64 },
    Hammersley { count: Count },
    /// Minimum-variance points for the method's own kernel and jitter.
    Optimized {
        count: Count,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_restarts")]
        restarts: usize,
    },
    /// Columns named `xi1..xin` of a CSV file with a header row.
    Csv { path: PathBuf },
}

impl PointSpec {
    /// The classical rule that comes with these points, if any.
    pub fn classical(&self, n: usize) -> Result<Option<ClassicalRule>> {
        Ok(Some(match self {
            PointSpec::Ut { kappa } => ut_points(n, *kappa)?,
            PointSpec::Cubature => cubature_points(n)?,
            PointSpec::Symmetric5 => symmetric5_points(n)?,
            PointSpec::GaussHermite { order } => gauss_hermite_points(n, *order)?,
            _ => return Ok(None),
        }))
    }

    /// Unit points in dimension `n`. `kernel` and `jitter` are only used by optimized sets.
    pub fn unit_points(&self, n: usize, kernel: Option<&Kernel>, jitter: f64) -> Result<UnitPointSet> {
        if let Some(rule) = self.classical(n)? {
            return Ok(rule.points);
        }
        match self {
            PointSpec::Random { count, seed } => random_points(n, count.resolve(n)?, *seed),
            PointSpec::Hammersley { count } => hammersley_points(n, count.resolve(n)?),
            PointSpec::Optimized { count, seed, restarts } => {
                let kernel = kernel.ok_or_else(|| Error::Config("optimized points need a GP kernel".into()))?;
                let opts = OptimizeOptions { restarts: *restarts, jitter, ..Default::default() };
                optimize_points(kernel, n, count.resolve(n)?, *seed, &opts)
            }
            PointSpec::Csv { path } => {
                let pts = read_points_csv(path)?;
                if pts.dim() != n {
                    return Err(Error::Config(format!(
                        "{} holds {}-dimensional points, expected {n}",
                        path.display(),
                        pts.dim()
                    )));
                }
                Ok(pts)
            }
            _ => unreachable!("classical point sets handled above"),
        }
    }

    pub fn label(&self) -> String {
        match self {
            PointSpec::Ut { kappa } => format!("UT(kappa={kappa})"),
            PointSpec::Cubature => "cubature".into(),
            PointSpec::Symmetric5 => "symmetric5".into(),
            PointSpec::GaussHermite { order } => format!("GH-{order}"),
            PointSpec::Random { count, seed } => format!("random-{count}(seed={seed})"),
            PointSpec::Hammersley { count } => format!("Hammersley-{count}"),
            PointSpec::Optimized { count, .. } => format!("optimized-{count}"),
            PointSpec::Csv { path } => format!("csv:{}", path.display()),
        }
    }
}

/// Reads unit points from the `xi1..xin` columns of a CSV file; other columns are ignored.
pub fn read_points_csv(path: &Path) -> Result<UnitPointSet> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::Config(format!("cannot read point CSV {}: {e}", path.display())))?;
    let headers = rdr.headers()?.clone();
    let mut cols: Vec<(usize, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(c, h)| h.trim().strip_prefix("xi").and_then(|i| i.parse::<usize>().ok()).map(|i| (i, c)))
        .collect();
    cols.sort();
    if cols.is_empty() || cols.iter().enumerate().any(|(j, (i, _))| *i != j + 1) {
        return Err(Error::Config(format!("{}: expected columns xi1..xin", path.display())));
    }
    let n = cols.len();
    let mut data = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        for &(_, c) in &cols {
            let v = rec.get(c).unwrap_or("").trim();
            data.push(v.parse::<f64>().map_err(|_| {
                Error::Config(format!("{}: cannot parse {v:?} as a number", path.display()))
            })?);
        }
    }
    if data.is_empty() {
        return Err(Error::Config(format!("{}: no points", path.display())));
    }
    UnitPointSet::new(DMatrix::from_column_slice(n, data.len() / n, &data), PointSetKind::Custom)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    /// Classical weights of the point set.
    Classical,
    Se { scale: f64, length: f64 },
    /// Hermite kernel matched to the unscented transform of the given order.
    Ut { order: usize },
    /// Hermite kernel matched to the Gauss–Hermite rule of the given order.
    GaussHermite { order: usize },
}

/// Accepts `"classical"` or a tagged kernel object.
impl<'de> Deserialize<'de> for KernelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
        enum Tagged {
            Classical,
            Se { scale: f64, length: f64 },
            Ut { order: usize },
            GaussHermite { order: usize },
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Either {
            Name(String),
            Tagged(Tagged),
        }
        match Either::deserialize(d)? {
            Either::Name(s) if s == "classical" => Ok(KernelSpec::Classical),
            Either::Name(s) => Err(serde::de::Error::custom(format!(
                "unknown kernel {s:?}; use \"classical\" or an object with a \"type\" field"
            ))),
            Either::Tagged(Tagged::Classical) => Ok(KernelSpec::Classical),
            Either::Tagged(Tagged::Se { scale, length }) => Ok(KernelSpec::Se { scale, length }),
            Either::Tagged(Tagged::Ut { order }) => Ok(KernelSpec::Ut { order }),
            Either::Tagged(Tagged::GaussHermite { order }) => Ok(KernelSpec::GaussHermite { order }),
        }
    }
}

impl KernelSpec {
    pub fn build(&self, n: usize) -> Result<Option<Kernel>> {
        Ok(match self {
            KernelSpec::Classical => None,
            KernelSpec::Se { scale, length } => Some(Kernel::squared_exponential(*scale, *length)?),
            KernelSpec::Ut { order } => Some(Kernel::ut(n, *order)?),
            KernelSpec::GaussHermite { order } => Some(Kernel::gauss_hermite(n, *order)?),
        })
    }

    fn default_jitter(&self) -> f64 {
        match self {
            KernelSpec::Se { .. } => DEFAULT_SE_JITTER,
            _ => 0.0,
        }
    }

    pub fn label(&self) -> String {
        match self {
            KernelSpec::Classical => "classical".into(),
            KernelSpec::Se { scale, length } => format!("GPQ-SE(s={scale},l={length})"),
            KernelSpec::Ut { order } => format!("GPQ-UT{order}"),
            KernelSpec::GaussHermite { order } => format!("GPQ-GH{order}"),
        }
    }
}

/// One quadrature method: a point set, a kernel (or classical weights) and a jitter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    /// Report label; derived from the points and kernel when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub points: PointSpec,
    #[serde(default = "classical")]
    pub kernel: KernelSpec,
    /// Gram jitter; defaults to 1e-8 for SE kernels and 0 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter: Option<f64>,
}

fn classical() -> KernelSpec {
    KernelSpec::Classical
}

impl MethodSpec {
    pub fn new(points: PointSpec, kernel: KernelSpec) -> Self {
        MethodSpec { name: None, points, kernel, jitter: None }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn jitter(&self) -> f64 {
        self.jitter.unwrap_or_else(|| self.kernel.default_jitter())
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("{} {}", self.kernel.label(), self.points.label()))
    }

    pub fn validate(&self) -> Result<()> {
        let j = self.jitter();
        if !(j >= 0.0 && j.is_finite()) {
            return Err(Error::Config(format!("{}: jitter must be finite and ≥ 0", self.label())));
        }
        let has_classical = !matches!(
            self.points,
            PointSpec::Random { .. } | PointSpec::Hammersley { .. } | PointSpec::Optimized { .. } | PointSpec::Csv { .. }
        );
        match (&self.kernel, &self.points) {
            (KernelSpec::Classical, _) if !has_classical => Err(Error::Config(format!(
                "{}: {} points have no classical weights; choose a GP kernel",
                self.label(),
                self.points.label()
            ))),
            _ => Ok(()),
        }
    }

    /// Unit points and weights in dimension `n`.
    pub fn build_rule(&self, n: usize) -> Result<QuadratureRule> {
        self.validate()?;
        let kernel = self.kernel.build(n)?;
        match kernel {
            None => Ok(self
                .points
                .classical(n)?
                .expect("validated: classical weights exist")
                .into()),
            Some(k) => {
                let pts = self.points.unit_points(n, Some(&k), self.jitter())?;
                gpq_weights(&k, &pts, self.jitter())
            }
        }
    }
}
