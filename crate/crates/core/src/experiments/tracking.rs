//! Monte Carlo filtering and smoothing studies on simulated trajectories.

use super::report::{Cell, Report};
use super::MethodSpec;
use crate::filtering::{rmse, run_filter, run_smoother, StateSpaceModel};
use crate::models::{bot_model, simulate, BotConfig, Ungm};
use crate::quadrature::QuadratureRule;
use crate::{Error, Result};

type Outcome = std::result::Result<f64, String>;

/// Per-seed RMSEs of one method, in seed order.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodRuns {
    pub label: String,
    pub filter: Vec<Outcome>,
    pub smoother: Vec<Outcome>,
}

fn summarize(runs: &[Outcome]) -> (Cell, Cell, usize, Option<String>) {
    let ok: Vec<f64> = runs.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    let first_err = runs.iter().find_map(|r| r.as_ref().err().cloned());
    let failures = runs.len() - ok.len();
    if ok.is_empty() {
        let e = first_err.clone().unwrap_or_else(|| "no runs".into());
        return (Cell::Error(e.clone()), Cell::Error(e), failures, first_err);
    }
    let mean = ok.iter().sum::<f64>() / ok.len() as f64;
    let std = if ok.len() > 1 {
        (ok.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (ok.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    (Cell::Num(mean), Cell::Num(std), failures, first_err)
}

impl MethodRuns {
    /// Mean over successful seeds, or `None` when every seed failed.
    pub fn filter_mean(&self) -> Option<f64> {
        summarize(&self.filter).0.as_f64()
    }

    pub fn smoother_mean(&self) -> Option<f64> {
        summarize(&self.smoother).0.as_f64()
    }

    /// True when every seed produced finite filter and smoother RMSEs.
    pub fn all_finite(&self) -> bool {
        self.filter.iter().chain(&self.smoother).all(|r| matches!(r, Ok(v) if v.is_finite()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackingResult {
    pub seeds: Vec<u64>,
    pub steps: usize,
    pub methods: Vec<MethodRuns>,
}

impl TrackingResult {
    pub fn method(&self, label: &str) -> Option<&MethodRuns> {
        self.methods.iter().find(|m| m.label == label)
    }

    /// `method, filter_rmse_mean, filter_rmse_std, smoother_rmse_mean, smoother_rmse_std,
    /// seeds, failures, first_error`; statistics over the seeds that succeeded.
    pub fn to_report(&self, experiment: &str, rmse_of: &str) -> Report {
        let mut r = Report::new(
            experiment,
            &[
                "method",
                "filter_rmse_mean",
                "filter_rmse_std",
                "smoother_rmse_mean",
                "smoother_rmse_std",
                "seeds",
                "failures",
                "first_error",
            ],
        );
        for m in &self.methods {
            let (fm, fs, ff, fe) = summarize(&m.filter);
            let (sm, ss, sf, se) = summarize(&m.smoother);
            r.push(vec![
                Cell::Text(m.label.clone()),
                fm,
                fs,
                sm,
                ss,
                Cell::Int(self.seeds.len() as i64),
                Cell::Int(ff.max(sf) as i64),
                Cell::Text(fe.or(se).unwrap_or_default()),
            ]);
        }
        r.all_methods_failed = self.methods.iter().all(|m| m.filter_mean().is_none() && m.smoother_mean().is_none());
        r.metadata.insert("rmse_of".into(), serde_json::json!(rmse_of));
        r.metadata.insert("steps".into(), serde_json::json!(self.steps));
        r.metadata.insert("seeds".into(), serde_json::json!(self.seeds));
        r
    }
}

fn run_seed<M: StateSpaceModel + ?Sized>(
    model: &M,
    rules: &[std::result::Result<QuadratureRule, String>],
    seed: u64,
    steps: usize,
    components: &[usize],
) -> Vec<(Outcome, Outcome)> {
    let traj = match simulate(model, steps, seed) {
        Ok(t) => t,
        Err(e) => {
            let msg = format!("simulation failed for seed {seed}: {e}");
            return rules.iter().map(|_| (Err(msg.clone()), Err(msg.clone()))).collect();
        }
    };
    let truth = traj.measured_states();
    rules
        .iter()
        .map(|rule| {
            let rule = match rule {
                Ok(r) => r,
                Err(e) => return (Err(e.clone()), Err(e.clone())),
            };
            match run_filter(model, rule, &traj.measurements) {
                Err(e) => {
                    let msg = format!("seed {seed}: {e}");
                    (Err(msg.clone()), Err(msg))
                }
                Ok(out) => {
                    let f = rmse(out.filtered(), truth, components);
                    let s = run_smoother(model, rule, &out)
                        .map(|sm| rmse(&sm, truth, components))
                        .map_err(|e| format!("seed {seed}: {e}"));
                    (Ok(f), s)
                }
            }
        })
        .collect()
}

/// Simulates one trajectory per seed and runs every method's filter and smoother on it.
///
/// Unit points and weights are built once per method. RMSE is taken over `components` of
/// `x_1..x_T`. Seeds run in parallel; results are collected in seed order.
pub fn run_tracking<M: StateSpaceModel + Sync + ?Sized>(
    model: &M,
    methods: &[MethodSpec],
    seeds: &[u64],
    steps: usize,
    components: &[usize],
) -> Result<TrackingResult> {
    if methods.is_empty() || seeds.is_empty() || steps == 0 {
        return Err(Error::Config("tracking needs methods, seeds and steps ≥ 1".into()));
    }
    for m in methods {
        m.validate()?;
    }
    let n = model.state_dim();
    let rules: Vec<std::result::Result<QuadratureRule, String>> =
        methods.iter().map(|m| m.build_rule(n).map_err(|e| e.to_string())).collect();
    let per_seed = |&seed: &u64| run_seed(model, &rules, seed, steps, components);

    #[cfg(feature = "parallel")]
    let by_seed: Vec<Vec<(Outcome, Outcome)>> = {
        use rayon::prelude::*;
        seeds.par_iter().map(per_seed).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let by_seed: Vec<Vec<(Outcome, Outcome)>> = seeds.iter().map(per_seed).collect();

    let methods = methods
        .iter()
        .enumerate()
        .map(|(j, m)| MethodRuns {
            label: m.label(),
            filter: by_seed.iter().map(|row| row[j].0.clone()).collect(),
            smoother: by_seed.iter().map(|row| row[j].1.clone()).collect(),
        })
        .collect();
    Ok(TrackingResult { seeds: seeds.to_vec(), steps, methods })
}

/// UNGM study; RMSE of the scalar state.
pub fn run_ungm(model: &Ungm, methods: &[MethodSpec], seeds: &[u64], steps: usize) -> Result<TrackingResult> {
    run_tracking(model, methods, seeds, steps, &[0])
}

/// Bearings-only coordinated-turn study; RMSE of the position `(x₁, x₂)`.
pub fn run_bot(cfg: &BotConfig, methods: &[MethodSpec], seeds: &[u64], steps: usize) -> Result<TrackingResult> {
    let model = bot_model(cfg.clone())?;
    run_tracking(&model, methods, seeds, steps, &[0, 2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{Count, KernelSpec, PointSpec};

    fn ungm_methods() -> Vec<MethodSpec> {
        vec![
            MethodSpec::new(PointSpec::Ut { kappa: 2.0 }, KernelSpec::Classical).named("UKF"),
            MethodSpec::new(PointSpec::GaussHermite { order: 10 }, KernelSpec::Classical).named("GHKF-10"),
            MethodSpec::new(
                PointSpec::Hammersley { count: Count::Fixed(3) },
                KernelSpec::Se { scale: 1.0, length: 3.0 },
            )
            .named("GPQ-H3"),
        ]
    }

    #[test]
    fn ungm_smoke() {
        let res = run_ungm(&Ungm::default(), &ungm_methods(), &[0, 1], 10).unwrap();
        assert_eq!(res.methods.len(), 3);
        for m in &res.methods {
            assert!(m.all_finite(), "{}: {:?}", m.label, m.filter);
            assert_eq!(m.filter.len(), 2);
        }
        let again = run_ungm(&Ungm::default(), &ungm_methods(), &[0, 1], 10).unwrap();
        assert_eq!(res, again);
    }

    #[test]
    fn report_is_byte_identical_across_runs() {
        let bytes = || {
            let res = run_ungm(&Ungm::default(), &ungm_methods(), &[4, 5, 6], 20).unwrap();
            let mut buf = vec![];
            res.to_report("ungm", "state").write_csv(&mut buf).unwrap();
            buf
        };
        assert_eq!(bytes(), bytes());
    }

    #[test]
    fn failed_methods_are_recorded() {
        let methods = vec![
            MethodSpec::new(PointSpec::Ut { kappa: 2.0 }, KernelSpec::Classical).named("UKF"),
            MethodSpec::new(PointSpec::Ut { kappa: 2.0 }, KernelSpec::GaussHermite { order: 1 }).named("singular"),
        ];
        let res = run_ungm(&Ungm::default(), &methods, &[0], 5).unwrap();
        let bad = res.method("singular").unwrap();
        assert!(bad.filter[0].is_err() && bad.filter_mean().is_none());
        let report = res.to_report("ungm", "state");
        assert!(report.rows[1][1].is_error());
        assert!(!report.all_methods_failed);
        assert_eq!(report.rows[1][6], Cell::Int(1));
    }

    #[test]
    fn bot_smoke() {
        let methods = vec![
            MethodSpec::new(PointSpec::Cubature, KernelSpec::Classical).named("CKF"),
            MethodSpec::new(PointSpec::Cubature, KernelSpec::Se { scale: 1.0, length: 10.0 }).named("GPQ-C"),
        ];
        let res = run_bot(&BotConfig::default(), &methods, &[0, 1], 50).unwrap();
        for m in &res.methods {
            assert!(m.all_finite(), "{}: {:?}", m.label, m.filter);
        }
    }

    #[test]
    fn near_noiseless_triangulation() {
        // Stationary target, tiny bearing noise: the filter locates it far below the prior spread.
        let cfg = BotConfig {
            sigma_theta: 1e-6,
            q1: 0.0,
            q2: 0.0,
            prior_mean: [0.0, 0.0, 0.0, 0.0, 0.0],
            prior_std: [100.0, 1e-3, 100.0, 1e-3, 1e-6],
            ..Default::default()
        };
        let methods = vec![MethodSpec::new(PointSpec::Cubature, KernelSpec::Classical)];
        let res = run_bot(&cfg, &methods, &[0, 1, 2], 20).unwrap();
        let m = &res.methods[0];
        assert!(m.filter_mean().unwrap() < 10.0, "{:?}", m.filter);
    }
}
