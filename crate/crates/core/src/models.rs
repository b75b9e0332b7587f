//! Benchmark models: the univariate non-linear growth model, coordinated-turn bearings-only
//! tracking, the moment-integral test functions, and trajectory simulation.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::filtering::{GaussianState, StateSpaceModel};
use crate::linalg::matrix_sqrt;
use crate::{Error, Result};

/// Univariate non-linear growth model.
///
/// `x_k = x_{k-1}/2 + 25 x_{k-1}/(1 + x_{k-1}²) + 8 cos(1.2 k) + q`, `y_k = x_k²/20 + r`,
/// with variances `Q`, `R` and prior `N(0, P₀)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Ungm {
    pub process_var: f64,
    pub measurement_var: f64,
    pub prior_var: f64,
}

impl Default for Ungm {
    fn default() -> Self {
        Ungm { process_var: 10.0, measurement_var: 1.0, prior_var: 5.0 }
    }
}

impl Ungm {
    pub fn f(x: f64, k: usize) -> f64 {
        x / 2.0 + 25.0 * x / (1.0 + x * x) + 8.0 * (1.2 * k as f64).cos()
    }

    pub fn h(x: f64) -> f64 {
        x * x / 20.0
    }
}

impl StateSpaceModel for Ungm {
    fn state_dim(&self) -> usize {
        1
    }
    fn measurement_dim(&self) -> usize {
        1
    }
    fn transition(&self, x: &DVector<f64>, k: usize) -> DVector<f64> {
        DVector::from_element(1, Ungm::f(x[0], k))
    }
    fn measurement(&self, x: &DVector<f64>, _k: usize) -> DVector<f64> {
        DVector::from_element(1, Ungm::h(x[0]))
    }
    fn process_noise(&self, _k: usize) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, self.process_var)
    }
    fn measurement_noise(&self, _k: usize) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, self.measurement_var)
    }
    fn prior(&self) -> GaussianState {
        GaussianState { mean: DVector::zeros(1), cov: DMatrix::from_element(1, 1, self.prior_var) }
    }
}

/// Coordinated-turn bearings-only tracking setup. State `(x₁, ẋ₁, x₂, ẋ₂, ω)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BotConfig {
    /// Sensor positions in meters.
    pub sensors: Vec<[f64; 2]>,
    /// Bearing noise standard deviation (rad).
    pub sigma_theta: f64,
    pub dt: f64,
    /// Position/velocity noise intensity (m² s⁻³).
    pub q1: f64,
    /// Turn-rate noise intensity (s⁻³).
    pub q2: f64,
    pub prior_mean: [f64; 5],
    /// Prior standard deviations, one per state component.
    pub prior_std: [f64; 5],
}

impl Default for BotConfig {
    fn default() -> Self {
        BotConfig {
            sensors: vec![[-1500.0, 500.0], [1000.0, 1000.0], [-300.0, -1500.0], [1200.0, -1100.0]],
            sigma_theta: 0.05,
            dt: 1.0,
            q1: 0.1,
            q2: 1.75e-4,
            prior_mean: [0.0, 10.0, 0.0, 0.0, 0.05],
            prior_std: [10.0, 2.0, 10.0, 2.0, 0.01],
        }
    }
}

impl BotConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sensors.len() != 4 {
            return Err(Error::Config(format!("bearings-only model needs exactly 4 sensors, got {}", self.sensors.len())));
        }
        if !(self.sigma_theta > 0.0 && self.dt > 0.0) {
            return Err(Error::Config("sigma_theta and dt must be positive".into()));
        }
        if !(self.q1 >= 0.0 && self.q2 >= 0.0) || self.prior_std.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::Config("noise intensities and prior std must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BotModel {
    cfg: BotConfig,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

/// Builds the 5-state coordinated-turn model with four bearing sensors.
pub fn bot_model(cfg: BotConfig) -> Result<BotModel> {
    cfg.validate()?;
    let dt = cfg.dt;
    let mut q = DMatrix::zeros(5, 5);
    for b in [0, 2] {
        q[(b, b)] = cfg.q1 * dt.powi(3) / 3.0;
        q[(b, b + 1)] = cfg.q1 * dt * dt / 2.0;
        q[(b + 1, b)] = cfg.q1 * dt * dt / 2.0;
        q[(b + 1, b + 1)] = cfg.q1 * dt;
    }
    q[(4, 4)] = cfg.q2 * dt;
    let r = DMatrix::identity(4, 4) * cfg.sigma_theta.powi(2);
    Ok(BotModel { cfg, q, r })
}

/// `(sin(ωΔt)/ω, (1 − cos(ωΔt))/ω)`, by series when `|ωΔt| < 1e-6`.
fn turn_terms(omega: f64, dt: f64) -> (f64, f64) {
    let a = omega * dt;
    if a.abs() < 1e-6 {
        let a2 = a * a;
        (dt * (1.0 - a2 / 6.0), dt * a / 2.0 * (1.0 - a2 / 12.0))
    } else {
        (a.sin() / omega, 2.0 * (a / 2.0).sin().powi(2) / omega)
    }
}

impl BotModel {
    pub fn config(&self) -> &BotConfig {
        &self.cfg
    }

    /// Deterministic coordinated-turn step.
    pub fn ct_step(&self, x: &DVector<f64>) -> DVector<f64> {
        let w = x[4];
        let (s, c1) = turn_terms(w, self.cfg.dt);
        let (sw, cw) = (w * self.cfg.dt).sin_cos();
        DVector::from_column_slice(&[
            x[0] + s * x[1] - c1 * x[3],
            cw * x[1] - sw * x[3],
            x[2] + c1 * x[1] + s * x[3],
            sw * x[1] + cw * x[3],
            w,
        ])
    }

    /// Bearings from each sensor, by the four-quadrant arctangent.
    pub fn bearings(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(4, self.cfg.sensors.iter().map(|s| (x[2] - s[1]).atan2(x[0] - s[0])))
    }
}

impl StateSpaceModel for BotModel {
    fn state_dim(&self) -> usize {
        5
    }
    fn measurement_dim(&self) -> usize {
        4
    }
    fn transition(&self, x: &DVector<f64>, _k: usize) -> DVector<f64> {
        self.ct_step(x)
    }
    fn measurement(&self, x: &DVector<f64>, _k: usize) -> DVector<f64> {
        self.bearings(x)
    }
    fn process_noise(&self, _k: usize) -> DMatrix<f64> {
        self.q.clone()
    }
    fn measurement_noise(&self, _k: usize) -> DMatrix<f64> {
        self.r.clone()
    }
    fn prior(&self) -> GaussianState {
        GaussianState {
            mean: DVector::from_column_slice(&self.cfg.prior_mean),
            cov: DMatrix::from_diagonal(&DVector::from_iterator(5, self.cfg.prior_std.iter().map(|s| s * s))),
        }
    }
}

/// `y(x) = (1 + xᵀx)^{p/2}` and its square.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentIntegrand {
    pub p: f64,
}

impl MomentIntegrand {
    /// Exponents used in the reference comparison.
    pub const STANDARD_EXPONENTS: [f64; 4] = [1.0, -2.0, -3.0, -5.0];

    pub fn new(p: f64) -> Self {
        MomentIntegrand { p }
    }

    pub fn is_standard(&self) -> bool {
        Self::STANDARD_EXPONENTS.contains(&self.p)
    }

    pub fn y(&self, x: &[f64]) -> f64 {
        self.of_norm2(x.iter().map(|v| v * v).sum())
    }

    pub fn y2(&self, x: &[f64]) -> f64 {
        self.y(x).powi(2)
    }

    /// `y` as a function of `‖x‖²`.
    pub fn of_norm2(&self, r2: f64) -> f64 {
        (1.0 + r2).powf(self.p / 2.0)
    }
}

/// Simulated states `x_0..x_T` and measurements `y_1..y_T`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub measurements: Vec<DVector<f64>>,
    pub seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    /// `x_1..x_T`, aligned with the measurements.
    pub fn measured_states(&self) -> &[DVector<f64>] {
        &self.states[1..]
    }

    /// CSV with columns `k, x1..xn, y1..yd`; the `k = 0` row has empty measurement cells.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.states.first().map_or(0, |x| x.len());
        let d = self.measurements.first().map_or(0, |y| y.len());
        let mut header = vec!["k".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=d).map(|i| format!("y{i}")));
        w.write_record(&header)?;
        for (k, x) in self.states.iter().enumerate() {
            let mut row = vec![k.to_string()];
            row.extend(x.iter().map(|v| format!("{v:.11e}")));
            match k.checked_sub(1).and_then(|i| self.measurements.get(i)) {
                Some(y) => row.extend(y.iter().map(|v| format!("{v:.11e}"))),
                None => row.extend(std::iter::repeat_n(String::new(), d)),
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn gaussian_draw(rng: &mut ChaCha8Rng, root: &DMatrix<f64>) -> DVector<f64> {
    let z = DVector::from_iterator(root.ncols(), (0..root.ncols()).map(|_| StandardNormal.sample(rng)));
    root * z
}

/// Samples `x_0` from the prior and iterates the model for `steps` steps (ChaCha8, seeded).
pub fn simulate<M: StateSpaceModel + ?Sized>(model: &M, steps: usize, seed: u64) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::InvalidParameter("simulation needs at least one step".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prior = model.prior();
    let mut x = &prior.mean + gaussian_draw(&mut rng, &matrix_sqrt(&prior.cov)?.factor);
    let mut states = vec![x.clone()];
    let mut measurements = Vec::with_capacity(steps);
    for k in 1..=steps {
        let q_root = matrix_sqrt(&model.process_noise(k))?.factor;
        let r_root = matrix_sqrt(&model.measurement_noise(k))?.factor;
        x = model.transition(&x, k) + gaussian_draw(&mut rng, &q_root);
        let y = model.measurement(&x, k) + gaussian_draw(&mut rng, &r_root);
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEvaluation { point: x.iter().copied().collect() }.at_step(k));
        }
        states.push(x.clone());
        measurements.push(y);
    }
    Ok(Trajectory { states, measurements, seed })
}
