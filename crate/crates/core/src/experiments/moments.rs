//! Moments of `y(x) = (1 + xᵀx)^{p/2}` under `N(0, I)`, scored by Gaussian KL divergence
//! against a seeded Monte Carlo reference.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::report::{Cell, Report};
use super::MethodSpec;
use crate::filtering::GaussianState;
use crate::linalg::cholesky;
use crate::models::MomentIntegrand;
use crate::{Error, Result};

const MC_CHUNK: u64 = 100_000;

/// Variance estimates at or below this fraction of `E[y²]` are treated as non-positive.
const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsSpec {
    pub dims: Vec<usize>,
    pub exponents: Vec<f64>,
    pub mc_samples: u64,
    pub mc_seed: u64,
    /// Reference values are cached here when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

impl Default for MomentsSpec {
    fn default() -> Self {
        MomentsSpec {
            dims: vec![2, 5, 10],
            exponents: MomentIntegrand::STANDARD_EXPONENTS.to_vec(),
            mc_samples: 10_000_000,
            mc_seed: 0,
            cache_dir: None,
        }
    }
}

impl MomentsSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(Error::Config("moments needs a non-empty list of dims ≥ 1".into()));
        }
        if self.exponents.is_empty() || self.exponents.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("moments needs a non-empty list of finite exponents".into()));
        }
        if self.mc_samples < 2 {
            return Err(Error::Config("mc_samples must be ≥ 2".into()));
        }
        Ok(())
    }
}

/// Reference `E[y]` and `Var[y]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    n: usize,
    p: f64,
    seed: u64,
    samples: u64,
    mean: f64,
    second_moment: f64,
}

fn cache_path(dir: &Path, n: usize, p: f64, seed: u64, samples: u64) -> PathBuf {
    dir.join(format!("mc_n{n}_p{p}_seed{seed}_s{samples}.json"))
}

/// Chunk `c` of the draws for dimension `n` uses its own ChaCha8 stream, so the result does
/// not depend on how chunks are scheduled.
fn chunk_rng(seed: u64, n: usize, c: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(n as u64).to_le_bytes());
    key[16..24].copy_from_slice(&c.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Monte Carlo `(E[y], E[y²])` for every exponent, from `samples` draws of `‖x‖² ~ χ²(n)`.
fn mc_moments(n: usize, exponents: &[f64], samples: u64, seed: u64) -> Vec<(f64, f64)> {
    let chi = ChiSquared::new(n as f64).expect("n ≥ 1");
    let chunks = samples.div_ceil(MC_CHUNK);
    let run_chunk = |c: u64| {
        let mut rng = chunk_rng(seed, n, c);
        let len = MC_CHUNK.min(samples - c * MC_CHUNK);
        let mut acc = vec![(0.0, 0.0); exponents.len()];
        for _ in 0..len {
            let r2: f64 = chi.sample(&mut rng);
            for (a, &p) in acc.iter_mut().zip(exponents) {
                let y = MomentIntegrand::new(p).of_norm2(r2);
                a.0 += y;
                a.1 += y * y;
            }
        }
        acc
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<Vec<(f64, f64)>> = {
        use rayon::prelude::*;
        (0..chunks).into_par_iter().map(run_chunk).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Vec<(f64, f64)>> = (0..chunks).map(run_chunk).collect();

    let mut total = vec![(0.0, 0.0); exponents.len()];
    for part in parts {
        for (t, a) in total.iter_mut().zip(part) {
            t.0 += a.0;
            t.1 += a.1;
        }
    }
    total.into_iter().map(|(s, s2)| (s / samples as f64, s2 / samples as f64)).collect()
}

/// Reference moments for dimension `n`, one per exponent, read from or written to
/// `cache_dir` when given. Keyed by `(n, p, seed, samples)`.
pub fn mc_truth(n: usize, exponents: &[f64], samples: u64, seed: u64, cache_dir: Option<&Path>) -> Result<Vec<Truth>> {
    let to_truth = |(m, m2): (f64, f64)| Truth { mean: m, variance: m2 - m * m };
    let cached: Option<Vec<(f64, f64)>> = cache_dir.and_then(|dir| {
        exponents
            .iter()
            .map(|&p| {
                let text = std::fs::read_to_string(cache_path(dir, n, p, seed, samples)).ok()?;
                let e: CacheEntry = serde_json::from_str(&text).ok()?;
                (e.n == n && e.p == p && e.seed == seed && e.samples == samples).then_some((e.mean, e.second_moment))
            })
            .collect()
    });
    if let Some(c) = cached {
        return Ok(c.into_iter().map(to_truth).collect());
    }
    let fresh = mc_moments(n, exponents, samples, seed);
    if let Some(dir) = cache_dir {
        std::fs::create_dir_all(dir)?;
        for (&p, &(mean, second_moment)) in exponents.iter().zip(&fresh) {
            let entry = CacheEntry { n, p, seed, samples, mean, second_moment };
            std::fs::write(cache_path(dir, n, p, seed, samples), serde_json::to_string_pretty(&entry)?)?;
        }
    }
    Ok(fresh.into_iter().map(to_truth).collect())
}

/// `KL(p ‖ q) = ½[tr(Σq⁻¹Σp) + (μq−μp)ᵀΣq⁻¹(μq−μp) − n + ln(det Σq / det Σp)]`.
pub fn kl_gauss(p: &GaussianState, q: &GaussianState) -> Result<f64> {
    let n = p.dim();
    if q.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: q.dim() });
    }
    let lp = cholesky(&p.cov, "first covariance")?;
    let lq = cholesky(&q.cov, "second covariance")?;
    let trace = lq.solve(&p.cov).trace();
    let dm = &q.mean - &p.mean;
    let maha = dm.dot(&lq.solve(&dm));
    let logdet = |l: &nalgebra::Cholesky<f64, nalgebra::Dyn>| 2.0 * l.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok(0.5 * (trace + maha - n as f64 + logdet(&lq) - logdet(&lp)).max(0.0))
}

/// Scalar `KL(N(μp, vp) ‖ N(μq, vq))`.
pub fn kl_scalar(mp: f64, vp: f64, mq: f64, vq: f64) -> Result<f64> {
    if !(vp > 0.0 && vq > 0.0) {
        return Err(Error::NotPositiveDefinite {
            what: "variance",
            min_eigenvalue: vp.min(vq),
        });
    }
    let r = vp / vq;
    Ok((0.5 * (r + (mq - mp).powi(2) / vq - 1.0 - r.ln())).max(0.0))
}

/// One (method, n, p) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentCell {
    pub method: String,
    pub n: usize,
    pub p: f64,
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub truth: Truth,
    /// `KL(estimate ‖ truth)`, or why it could not be formed.
    pub kl: std::result::Result<f64, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentsResult {
    pub cells: Vec<MomentCell>,
}

impl MomentsResult {
    pub fn cell(&self, method: &str, n: usize, p: f64) -> Option<&MomentCell> {
        self.cells.iter().find(|c| c.method == method && c.n == n && c.p == p)
    }

    /// `method, n, p, mean, variance, true_mean, true_variance, kl`.
    pub fn to_report(&self) -> Report {
        let mut r = Report::new(
            "moments",
            &["method", "n", "p", "mean", "variance", "true_mean", "true_variance", "kl"],
        );
        for c in &self.cells {
            let opt = |v: Option<f64>, kl: &std::result::Result<f64, String>| match (v, kl) {
                (Some(v), _) => Cell::Num(v),
                (None, Err(e)) => Cell::Error(e.clone()),
                (None, Ok(_)) => Cell::Error("missing".into()),
            };
            r.push(vec![
                Cell::Text(c.method.clone()),
                Cell::Int(c.n as i64),
                Cell::Num(c.p),
                opt(c.mean, &c.kl),
                opt(c.variance, &c.kl),
                Cell::Num(c.truth.mean),
                Cell::Num(c.truth.variance),
                Cell::num_or_err(c.kl.clone()),
            ]);
        }
        r.all_methods_failed = !self.cells.is_empty() && self.cells.iter().all(|c| c.kl.is_err());
        r.metadata.insert("kl_direction".into(), json!("KL(method estimate || Monte Carlo truth)"));
        r
    }
}

/// Estimates `E[y]` and `Var[y] = E[y²] − E[y]²` with each method on `N(0, I)` and scores
/// them against the Monte Carlo reference. Failures are recorded per cell.
pub fn run_moments(spec: &MomentsSpec, methods: &[MethodSpec]) -> Result<MomentsResult> {
    spec.validate()?;
    for m in methods {
        m.validate()?;
    }
    let mut cells = Vec::new();
    for &n in &spec.dims {
        let truths = mc_truth(n, &spec.exponents, spec.mc_samples, spec.mc_seed, spec.cache_dir.as_deref())?;
        for m in methods {
            let rule = m.build_rule(n);
            for (&p, &truth) in spec.exponents.iter().zip(&truths) {
                let g = MomentIntegrand::new(p);
                let (mean, variance, kl) = match &rule {
                    Err(e) => (None, None, Err(e.to_string())),
                    Ok(rule) => {
                        let mut e1 = 0.0;
                        let mut e2 = 0.0;
                        for (xi, w) in rule.points.iter().zip(rule.weights.iter()) {
                            e1 += w * g.y(xi);
                            e2 += w * g.y2(xi);
                        }
                        let var = e2 - e1 * e1;
                        let kl = if var > VARIANCE_FLOOR * e2.abs() {
                            kl_scalar(e1, var, truth.mean, truth.variance).map_err(|e| e.to_string())
                        } else {
                            Err(format!("variance estimate {var:e} is not positive"))
                        };
                        (Some(e1), Some(var), kl)
                    }
                };
                cells.push(MomentCell { method: m.label(), n, p, mean, variance, truth, kl });
            }
        }
    }
    Ok(MomentsResult { cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{KernelSpec, PointSpec};
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};

    /// Composite Simpson over `r ∈ [0, 40]` against the chi density of `‖x‖`.
    fn radial_oracle(n: usize, f: impl Fn(f64) -> f64) -> f64 {
        let steps = 40_000;
        let h = 40.0 / steps as f64;
        let norm = 2f64.powf(n as f64 / 2.0 - 1.0) * libm::tgamma(n as f64 / 2.0);
        let dens = |r: f64| r.powi(n as i32 - 1) * (-r * r / 2.0).exp() / norm;
        let mut s = 0.0;
        for i in 0..=steps {
            let r = i as f64 * h;
            let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(r) * dens(r);
        }
        s * h / 3.0
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_scalar(0.3, 2.0, 0.3, 2.0).unwrap(), 0.0);
        assert_abs_diff_eq!(kl_scalar(0.0, 2.0, 0.0, 1.0).unwrap(), (1.0 - 2f64.ln()) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(kl_scalar(0.0, 2.0, 0.0, 1.0).unwrap(), 0.153426, epsilon = 1e-6);
        assert_abs_diff_eq!(kl_scalar(1.0, 1.0, 0.0, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert!(kl_scalar(0.0, 0.0, 0.0, 1.0).is_err());

        let g = |m: &[f64], c: &[f64]| {
            GaussianState::new(DVector::from_column_slice(m), DMatrix::from_row_slice(m.len(), m.len(), c)).unwrap()
        };
        let a = g(&[1.0, -1.0], &[2.0, 0.3, 0.3, 1.0]);
        let b = g(&[0.0, 0.5], &[1.0, -0.2, -0.2, 3.0]);
        assert_eq!(kl_gauss(&a, &a).unwrap(), 0.0);
        assert!(kl_gauss(&a, &b).unwrap() > 0.0);
        let s = kl_gauss(&g(&[0.0], &[2.0]), &g(&[0.0], &[1.0])).unwrap();
        assert_abs_diff_eq!(s, kl_scalar(0.0, 2.0, 0.0, 1.0).unwrap(), epsilon = 1e-14);
        // Independent blocks add.
        let ab = kl_gauss(&g(&[1.0, 0.0], &[2.0, 0.0, 0.0, 1.0]), &g(&[0.0, 0.0], &[1.0, 0.0, 0.0, 3.0])).unwrap();
        let sum = kl_scalar(1.0, 2.0, 0.0, 1.0).unwrap() + kl_scalar(0.0, 1.0, 0.0, 3.0).unwrap();
        assert_abs_diff_eq!(ab, sum, epsilon = 1e-14);
        let singular = GaussianState { mean: DVector::zeros(2), cov: DMatrix::zeros(2, 2) };
        assert!(kl_gauss(&singular, &a).is_err());
    }

    #[test]
    fn mc_truth_matches_radial_oracle() {
        let exps = [1.0, -2.0, -3.0, -5.0];
        for n in [1, 2, 5] {
            let t = mc_truth(n, &exps, 1_000_000, 0, None).unwrap();
            for (tp, &p) in t.iter().zip(&exps) {
                let m = radial_oracle(n, |r| (1.0 + r * r).powf(p / 2.0));
                let m2 = radial_oracle(n, |r| (1.0 + r * r).powf(p));
                let sd = (m2 - m * m).sqrt();
                assert!((tp.mean - m).abs() < 5.0 * sd / 1e3, "n={n} p={p}: {} vs {m}", tp.mean);
                assert!((tp.variance - (m2 - m * m)).abs() < 0.02 * (m2 - m * m) + 1e-6, "n={n} p={p}");
            }
        }
        // E[√(1 + x²)], x ~ N(0, 1), by 150-point Gauss–Hermite: 1.35453080648196.
        assert_abs_diff_eq!(radial_oracle(1, |r| (1.0 + r * r).sqrt()), 1.35453080648196, epsilon = 1e-10);
        assert_abs_diff_eq!(mc_truth(1, &[1.0], 1_000_000, 3, None).unwrap()[0].mean, 1.3545, epsilon = 3e-3);
    }

    #[test]
    fn mc_truth_is_deterministic_and_cached() {
        let dir = tempfile::tempdir().unwrap();
        let a = mc_truth(3, &[1.0, -2.0], 250_001, 9, Some(dir.path())).unwrap();
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
        let b = mc_truth(3, &[1.0, -2.0], 250_001, 9, Some(dir.path())).unwrap();
        let c = mc_truth(3, &[1.0, -2.0], 250_001, 9, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_ne!(a, mc_truth(3, &[1.0, -2.0], 250_001, 10, None).unwrap());
    }

    #[test]
    fn cubature_estimates_are_degenerate() {
        let spec = MomentsSpec { dims: vec![2], exponents: vec![1.0], mc_samples: 10_000, ..Default::default() };
        let methods = [
            MethodSpec::new(PointSpec::Cubature, KernelSpec::Classical).named("cub"),
            MethodSpec::new(PointSpec::Cubature, KernelSpec::Se { scale: 1.0, length: 1.0 }).named("gp"),
        ];
        let res = run_moments(&spec, &methods).unwrap();
        let cub = res.cell("cub", 2, 1.0).unwrap();
        assert_abs_diff_eq!(cub.mean.unwrap(), 3f64.sqrt(), epsilon = 1e-15);
        assert!(cub.variance.unwrap().abs() < 1e-15);
        assert!(cub.kl.is_err());
        assert!(res.cell("gp", 2, 1.0).unwrap().kl.is_ok());
        let report = res.to_report();
        assert!(!report.all_methods_failed);
        assert_eq!(report.metadata["kl_direction"], "KL(method estimate || Monte Carlo truth)");
    }

    #[test]
    fn exact_estimate_has_zero_kl() {
        let t = Truth { mean: 1.3, variance: 0.2 };
        assert_eq!(kl_scalar(t.mean, t.variance, t.mean, t.variance).unwrap(), 0.0);
    }
}
