//! Sigma-point Gaussian filter and RTS smoother for additive-noise state-space models.
//!
//! Any [`QuadratureRule`] drives them: classical rules give the UKF/CKF/GHKF family, GPQ
//! rules give the GPQ filter and smoother. Unit points and weights are fixed for the run;
//! sigma-points are regenerated from the current mean and covariance at every step.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{asymmetry, min_eigenvalue, solve_right_pd, symmetrize};
use crate::quadrature::QuadratureRule;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianState {
    /// Checks shapes and symmetry (within `1e-10` relative).
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::DimensionMismatch { expected: mean.len(), actual: cov.nrows() });
        }
        let asym = asymmetry(&cov);
        if asym > 1e-10 {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Ok(GaussianState { mean, cov: symmetrize(&cov) })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// `x_k = f(x_{k-1}, k) + q_{k-1}`, `y_k = h(x_k, k) + r_k`.
///
/// Time indices are those of the destination state: `transition(x, k)` maps `x_{k-1}` to
/// the mean of `x_k`, and `process_noise(k)` is the covariance of the noise added there.
pub trait StateSpaceModel {
    fn state_dim(&self) -> usize;
    fn measurement_dim(&self) -> usize;
    fn transition(&self, x: &DVector<f64>, k: usize) -> DVector<f64>;
    fn measurement(&self, x: &DVector<f64>, k: usize) -> DVector<f64>;
    fn process_noise(&self, k: usize) -> DMatrix<f64>;
    fn measurement_noise(&self, k: usize) -> DMatrix<f64>;
    fn prior(&self) -> GaussianState;
}

/// Time-invariant noise model built from closures.
pub struct AdditiveModel<F, H> {
    pub f: F,
    pub h: H,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub prior: GaussianState,
}

impl<F, H> StateSpaceModel for AdditiveModel<F, H>
where
    F: Fn(&DVector<f64>, usize) -> DVector<f64>,
    H: Fn(&DVector<f64>, usize) -> DVector<f64>,
{
    fn state_dim(&self) -> usize {
        self.prior.dim()
    }
    fn measurement_dim(&self) -> usize {
        self.r.nrows()
    }
    fn transition(&self, x: &DVector<f64>, k: usize) -> DVector<f64> {
        (self.f)(x, k)
    }
    fn measurement(&self, x: &DVector<f64>, k: usize) -> DVector<f64> {
        (self.h)(x, k)
    }
    fn process_noise(&self, _k: usize) -> DMatrix<f64> {
        self.q.clone()
    }
    fn measurement_noise(&self, _k: usize) -> DMatrix<f64> {
        self.r.clone()
    }
    fn prior(&self) -> GaussianState {
        self.prior.clone()
    }
}

/// One filter step `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterStep {
    pub predicted: GaussianState,
    pub filtered: GaussianState,
    /// Predicted measurement mean `μ_k`.
    pub innovation_mean: DVector<f64>,
    /// Innovation covariance `S_k`.
    pub innovation_cov: DMatrix<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FilterOutput {
    /// Entry `i` is time step `k = i + 1`.
    pub steps: Vec<FilterStep>,
}

impl FilterOutput {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn filtered(&self) -> impl Iterator<Item = &GaussianState> {
        self.steps.iter().map(|s| &s.filtered)
    }

    pub fn predicted(&self) -> impl Iterator<Item = &GaussianState> {
        self.steps.iter().map(|s| &s.predicted)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UpdateResult {
    pub state: GaussianState,
    pub innovation_mean: DVector<f64>,
    pub innovation_cov: DMatrix<f64>,
    pub cross_cov: DMatrix<f64>,
    pub gain: DMatrix<f64>,
}

/// Prediction: moment-match `f(x) + q` under the current state.
pub fn predict<F>(state: &GaussianState, rule: &QuadratureRule, f: F, q: &DMatrix<f64>) -> Result<GaussianState>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let t = rule.transform(f, &state.mean, &state.cov, q)?;
    Ok(GaussianState { mean: t.mean, cov: symmetrize(&t.cov) })
}

/// Update with measurement `y`. The gain solves `K S = C` by a positive-definite solve.
pub fn update<H>(
    pred: &GaussianState,
    rule: &QuadratureRule,
    h: H,
    r: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<UpdateResult>
where
    H: Fn(&DVector<f64>) -> DVector<f64>,
{
    let t = rule.transform(h, &pred.mean, &pred.cov, r)?;
    if y.len() != t.mean.len() {
        return Err(Error::DimensionMismatch { expected: t.mean.len(), actual: y.len() });
    }
    let gain = solve_right_pd(&t.cross_cov, &t.cov, "innovation covariance")?;
    let mean = &pred.mean + &gain * (y - &t.mean);
    let cov = symmetrize(&(&pred.cov - &gain * &t.cov * gain.transpose()));
    Ok(UpdateResult {
        state: GaussianState { mean, cov },
        innovation_mean: t.mean,
        innovation_cov: t.cov,
        cross_cov: t.cross_cov,
        gain,
    })
}

fn check_model<M: StateSpaceModel + ?Sized>(model: &M, rule: &QuadratureRule) -> Result<()> {
    if rule.dim() != model.state_dim() {
        return Err(Error::DimensionMismatch { expected: model.state_dim(), actual: rule.dim() });
    }
    Ok(())
}

/// Runs predict/update for `k = 1..=T` from the model prior; `ys[k-1]` is `y_k`.
pub fn run_filter<M: StateSpaceModel + ?Sized>(
    model: &M,
    rule: &QuadratureRule,
    ys: &[DVector<f64>],
) -> Result<FilterOutput> {
    check_model(model, rule)?;
    let mut state = model.prior();
    let mut steps = Vec::with_capacity(ys.len());
    for (i, y) in ys.iter().enumerate() {
        let k = i + 1;
        let step = (|| {
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite measurement".into()));
            }
            let pred = predict(&state, rule, |x| model.transition(x, k), &model.process_noise(k))?;
            let upd = update(&pred, rule, |x| model.measurement(x, k), &model.measurement_noise(k), y)?;
            Ok(FilterStep {
                predicted: pred,
                filtered: upd.state,
                innovation_mean: upd.innovation_mean,
                innovation_cov: upd.innovation_cov,
            })
        })()
        .map_err(|e| e.at_step(k))?;
        state = step.filtered.clone();
        steps.push(step);
    }
    Ok(FilterOutput { steps })
}

/// RTS smoother over a completed filter run; entry `i` is the smoothed state at `k = i + 1`.
///
/// Starts from `m^s_T = m_T` and recurses backwards. The smoother gain solves
/// `G P⁻_{k+1} = D_{k+1}`, where `P⁻_{k+1}` and `D_{k+1}` come from propagating
/// sigma-points of the filtered state through the dynamics.
pub fn run_smoother<M: StateSpaceModel + ?Sized>(
    model: &M,
    rule: &QuadratureRule,
    out: &FilterOutput,
) -> Result<Vec<GaussianState>> {
    check_model(model, rule)?;
    let t_len = out.len();
    let mut smoothed = vec![GaussianState { mean: DVector::zeros(0), cov: DMatrix::zeros(0, 0) }; t_len];
    let Some(last) = out.steps.last() else { return Ok(smoothed) };
    smoothed[t_len - 1] = last.filtered.clone();
    for i in (0..t_len - 1).rev() {
        let k = i + 1;
        let filt = &out.steps[i].filtered;
        let next = &smoothed[i + 1];
        let state = (|| {
            let t = rule.transform(|x| model.transition(x, k + 1), &filt.mean, &filt.cov, &model.process_noise(k + 1))?;
            let pred_cov = symmetrize(&t.cov);
            let gain = solve_right_pd(&t.cross_cov, &pred_cov, "predicted covariance")?;
            let mean = &filt.mean + &gain * (&next.mean - &t.mean);
            let cov = symmetrize(&(&filt.cov + &gain * (&next.cov - &pred_cov) * gain.transpose()));
            Ok(GaussianState { mean, cov })
        })()
        .map_err(|e: Error| e.at_step(k))?;
        smoothed[i] = state;
    }
    Ok(smoothed)
}

/// `√(mean_k Σ_{j∈components} (x̂_k[j] − x_k[j])²)`: root mean squared error over time of the
/// selected state components.
pub fn rmse<'a>(
    estimates: impl IntoIterator<Item = &'a GaussianState>,
    truth: &[DVector<f64>],
    components: &[usize],
) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for (est, x) in estimates.into_iter().zip(truth) {
        total += components.iter().map(|&j| (est.mean[j] - x[j]).powi(2)).sum::<f64>();
        count += 1;
    }
    (total / count.max(1) as f64).sqrt()
}

/// Smallest eigenvalue of a state covariance, exposed for diagnostics.
pub fn min_cov_eigenvalue(state: &GaussianState) -> f64 {
    min_eigenvalue(&state.cov)
}
