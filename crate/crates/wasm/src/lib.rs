//! Browser bindings for three interactive demos: the long length-scale limit of squared
//! exponential weights on 1-D unscented points, 2-D point sets with their GPQ weights, and
//! a filter/smoother run on the non-linear growth model.
//!
//! Every export returns a JSON string; failures come back as `{"error": "..."}`.

use gpq::filtering::{rmse, run_filter, run_smoother};
use gpq::kernels::Kernel;
use gpq::models::{simulate, Ungm};
use gpq::points::{
    cubature_points, gauss_hermite_points, hammersley_points, optimize_points, random_points, symmetric5_points,
    ut_points, OptimizeOptions,
};
use gpq::quadrature::{gpq_weights, QuadratureRule};
use gpq::UnitPointSet;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Longest UNGM run the page may request.
pub const MAX_DEMO_STEPS: usize = 2_000;

#[derive(Debug, Serialize)]
pub struct LimitRow {
    pub length: f64,
    pub weights: Vec<f64>,
    /// Max-norm distance to the unscented weights.
    pub error: f64,
    pub variance: f64,
}

#[derive(Debug, Serialize)]
pub struct LimitTable {
    pub unscented: Vec<f64>,
    pub rows: Vec<LimitRow>,
}

/// SE weights (`s = 1`, no jitter) on the 1-D unscented points for length scales
/// `10^log_min ..= 10^log_max`, `steps` values on a log grid.
pub fn se_limit(kappa: f64, log_min: f64, log_max: f64, steps: usize) -> gpq::Result<LimitTable> {
    let ut = ut_points(1, kappa)?;
    let unscented: Vec<f64> = ut.weights.iter().copied().collect();
    let steps = steps.clamp(2, 50);
    let rows = (0..steps)
        .map(|i| {
            let length = 10f64.powf(log_min + (log_max - log_min) * i as f64 / (steps - 1) as f64);
            let rule = gpq_weights(&Kernel::squared_exponential(1.0, length)?, &ut.points, 0.0)?;
            let error = rule.weights.iter().zip(&unscented).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            Ok(LimitRow {
                length,
                weights: rule.weights.iter().copied().collect(),
                error,
                variance: rule.posterior_variance.unwrap_or(f64::NAN),
            })
        })
        .collect::<gpq::Result<_>>()?;
    Ok(LimitTable { unscented, rows })
}

#[derive(Debug, Serialize)]
pub struct PointTable {
    pub kind: String,
    /// `[ξ₁, ξ₂]` per point.
    pub points: Vec<[f64; 2]>,
    pub classical_weights: Option<Vec<f64>>,
    pub gpq_weights: Vec<f64>,
    pub posterior_variance: f64,
}

fn unit_set(kind: &str, count: usize, kernel: &Kernel, seed: u64) -> gpq::Result<(UnitPointSet, Option<Vec<f64>>)> {
    let classical = |r: gpq::ClassicalRule| (r.points, Some(r.weights.iter().copied().collect()));
    Ok(match kind {
        "ut" => classical(ut_points(2, 1.0)?),
        "cubature" => classical(cubature_points(2)?),
        "symmetric5" => classical(symmetric5_points(2)?),
        "gauss_hermite" => classical(gauss_hermite_points(2, count.clamp(1, 10))?),
        "hammersley" => (hammersley_points(2, count)?, None),
        "random" => (random_points(2, count, seed)?, None),
        "optimized" => {
            let opts = OptimizeOptions { restarts: 2, max_iter: 100, ..Default::default() };
            (optimize_points(kernel, 2, count, seed, &opts)?, None)
        }
        other => return Err(gpq::Error::InvalidParameter(format!("unknown point set {other:?}"))),
    })
}

/// A 2-D unit point set with its classical weights (if any) and SE GPQ weights.
/// `count` sets the Gauss–Hermite order or the size of free-form sets (capped at 40).
pub fn point_table(kind: &str, count: usize, length: f64, jitter: f64, seed: u64) -> gpq::Result<PointTable> {
    let kernel = Kernel::squared_exponential(1.0, length)?;
    let (points, classical_weights) = unit_set(kind, count.clamp(1, 40), &kernel, seed)?;
    let rule = gpq_weights(&kernel, &points, jitter)?;
    Ok(PointTable {
        kind: kind.into(),
        points: points.iter().map(|p| [p[0], p[1]]).collect(),
        classical_weights,
        gpq_weights: rule.weights.iter().copied().collect(),
        posterior_variance: rule.posterior_variance.unwrap_or(f64::NAN),
    })
}

#[derive(Debug, Serialize)]
pub struct TrackRun {
    pub truth: Vec<f64>,
    pub measurements: Vec<f64>,
    pub filtered: Vec<f64>,
    pub filtered_std: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub filter_rmse: f64,
    pub smoother_rmse: f64,
}

/// UNGM trajectory from `seed`, filtered and smoothed with the named 1-D rule:
/// `ukf` (κ = 2), `ghkf` (order `count`), `gpq_hammersley` or `gpq_optimized` (SE `s = 1`,
/// `ℓ = length` on `count` Hammersley or minimum-variance points, jitter `1e-8`).
pub fn ungm_run(method: &str, count: usize, length: f64, seed: u64, steps: usize) -> gpq::Result<TrackRun> {
    let model = Ungm::default();
    let rule: QuadratureRule = match method {
        "ukf" => ut_points(1, 2.0)?.into(),
        "ghkf" => gauss_hermite_points(1, count.clamp(1, 30))?.into(),
        "gpq_hammersley" | "gpq_optimized" => {
            let kernel = Kernel::squared_exponential(1.0, length)?;
            let count = count.clamp(1, 30);
            let points = if method == "gpq_hammersley" {
                hammersley_points(1, count)?
            } else {
                let opts = OptimizeOptions { jitter: 1e-8, ..Default::default() };
                optimize_points(&kernel, 1, count, seed, &opts)?
            };
            gpq_weights(&kernel, &points, 1e-8)?
        }
        other => return Err(gpq::Error::InvalidParameter(format!("unknown method {other:?}"))),
    };
    let traj = simulate(&model, steps.clamp(1, MAX_DEMO_STEPS), seed)?;
    let out = run_filter(&model, &rule, &traj.measurements)?;
    let sm = run_smoother(&model, &rule, &out)?;
    let truth = traj.measured_states();
    Ok(TrackRun {
        truth: truth.iter().map(|x| x[0]).collect(),
        measurements: traj.measurements.iter().map(|y| y[0]).collect(),
        filtered: out.filtered().map(|s| s.mean[0]).collect(),
        filtered_std: out.filtered().map(|s| s.cov[(0, 0)].max(0.0).sqrt()).collect(),
        smoothed: sm.iter().map(|s| s.mean[0]).collect(),
        filter_rmse: rmse(out.filtered(), truth, &[0]),
        smoother_rmse: rmse(&sm, truth, &[0]),
    })
}

fn to_json<T: Serialize>(r: gpq::Result<T>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| serde_json::json!({ "error": e.to_string() }).to_string()),
        Err(e) => serde_json::json!({ "error": e.to_string() }).to_string(),
    }
}

#[wasm_bindgen(js_name = seLimit)]
pub fn se_limit_js(kappa: f64, log_min: f64, log_max: f64, steps: usize) -> String {
    to_json(se_limit(kappa, log_min, log_max, steps))
}

#[wasm_bindgen(js_name = pointSet)]
pub fn point_set_js(kind: &str, count: usize, length: f64, jitter: f64, seed: u32) -> String {
    to_json(point_table(kind, count, length, jitter, seed.into()))
}

#[wasm_bindgen(js_name = ungmDemo)]
pub fn ungm_demo_js(method: &str, count: usize, length: f64, seed: u32, steps: usize) -> String {
    to_json(ungm_run(method, count, length, seed.into(), steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limit_table_converges() {
        let t = se_limit(2.0, 1.0, 4.0, 4).unwrap();
        assert_eq!(t.rows.len(), 4);
        assert!(t.rows.windows(2).all(|w| w[1].error < w[0].error));
        assert!(t.rows[3].error < 1e-3);
    }

    #[test]
    fn point_tables() {
        let t = point_table("ut", 0, 1000.0, 0.0, 0).unwrap();
        assert_eq!(t.points.len(), 5);
        let cw = t.classical_weights.unwrap();
        assert!(t.gpq_weights.iter().zip(&cw).all(|(a, b)| (a - b).abs() < 1e-4));
        for kind in ["cubature", "symmetric5", "gauss_hermite", "hammersley", "random", "optimized"] {
            let t = point_table(kind, 6, 1.0, 1e-10, 3).unwrap();
            assert_eq!(t.points.len(), t.gpq_weights.len(), "{kind}");
        }
        assert!(point_table("nope", 3, 1.0, 0.0, 0).is_err());
    }

    #[test]
    fn ungm_runs_and_errors_serialize() {
        let r = ungm_run("ukf", 0, 3.0, 1, 50).unwrap();
        let o = ungm_run("gpq_optimized", 10, 3.0, 1, 50).unwrap();
        assert!(o.smoother_rmse.is_finite());
        assert_eq!(r.filtered.len(), 50);
        assert!(r.filter_rmse.is_finite());
        let v: serde_json::Value = serde_json::from_str(&ungm_demo_js("bogus", 3, 3.0, 0, 10)).unwrap();
        assert!(v["error"].as_str().unwrap().contains("bogus"));
        let v: serde_json::Value = serde_json::from_str(&se_limit_js(1.0, 1.0, 3.0, 3)).unwrap();
        assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    }
}
