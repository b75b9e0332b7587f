//! Gaussian process quadrature: weights, posterior variance, and the GP transform.
//!
//! The GP models the decoupled integrand `ξ ↦ g(m + √P ξ)`, so weights depend only on the
//! kernel and the unit points and can be reused for every `(m, P)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::dd::{dot, Dd, DdCholesky};
use crate::kernels::Kernel;
use crate::linalg::{matrix_sqrt, min_eigenvalue, symmetrize};
use crate::points::{ClassicalRule, UnitPointSet};
use crate::{Error, Result};

/// Default Gram jitter for squared exponential rules inside filters.
pub const DEFAULT_SE_JITTER: f64 = 1e-8;

/// Weights below this are clamped to zero variance.
const VARIANCE_CLAMP: f64 = 1e-9;

/// Unit sigma-points with weights; applies to any `N(m, P)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub points: UnitPointSet,
    /// May be negative for GPQ rules.
    pub weights: DVector<f64>,
    pub jitter: f64,
    /// GP posterior variance of the integral estimate; `None` for classical rules.
    pub posterior_variance: Option<f64>,
}

impl From<ClassicalRule> for QuadratureRule {
    fn from(rule: ClassicalRule) -> Self {
        QuadratureRule {
            points: rule.points,
            weights: rule.weights,
            jitter: 0.0,
            posterior_variance: None,
        }
    }
}

/// Gaussian approximation of `(x, g(x) + q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformResult {
    pub mean: DVector<f64>,
    /// Output covariance, noise included.
    pub cov: DMatrix<f64>,
    /// Input–output cross-covariance.
    pub cross_cov: DMatrix<f64>,
}

fn check_points(kernel: &Kernel, points: &UnitPointSet) -> Result<()> {
    if let Some(d) = kernel.fixed_dim() {
        if d != points.dim() {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: points.dim(),
            });
        }
    }
    Ok(())
}

/// Pivots of the Hermite-kernel Gram below this fraction of its largest diagonal are singular.
const F64_PIVOT_TOL: f64 = 16.0 * f64::EPSILON;
/// Same for the double-double SE factorization.
const DD_PIVOT_TOL: f64 = 1e-26;

/// Factorization of `K + σ² I`.
///
/// Squared exponential Grams are stored as `s² (1 + expm1(-d²/2ℓ²))` and factored in
/// double-double, because for long length scales they differ from `s² 11ᵀ` only far below
/// `f64` resolution.
enum GramSolver {
    Plain(Cholesky<f64, Dyn>),
    Se {
        chol: DdCholesky,
        scale2: f64,
        length: f64,
    },
}

/// `1 + expm1(-d² / denom)` evaluated entirely in double-double.
fn se_unit(d2: Dd, denom: Dd) -> Dd {
    Dd::ONE + (-(d2 / denom)).exp_m1()
}

fn to_dd(v: &DVector<f64>) -> Vec<Dd> {
    v.iter().map(|&x| Dd::from(x)).collect()
}

fn singular(kernel: &Kernel, points: &UnitPointSet, jitter: f64) -> Error {
    let min_eigenvalue = kernel
        .gram(points.matrix())
        .map(|mut g| {
            for i in 0..g.nrows() {
                g[(i, i)] += jitter;
            }
            min_eigenvalue(&g)
        })
        .unwrap_or(f64::NAN);
    Error::SingularGram { jitter, min_eigenvalue }
}

impl GramSolver {
    fn new(kernel: &Kernel, points: &UnitPointSet, jitter: f64) -> Result<Self> {
        if !(jitter >= 0.0 && jitter.is_finite()) {
            return Err(Error::InvalidParameter(format!("jitter must be ≥ 0 (got {jitter})")));
        }
        check_points(kernel, points)?;
        match kernel {
            Kernel::SquaredExponential { scale, length } => {
                let scale2 = scale * scale;
                let n = points.len();
                let denom = Dd::from(2.0) * Dd::from(*length) * Dd::from(*length);
                let mut a = vec![Dd::ZERO; n * n];
                for i in 0..n {
                    a[i * n + i] = Dd::ONE + Dd::from(jitter / scale2);
                    for j in 0..i {
                        let v = se_unit(Dd::sq_dist(points.point(i), points.point(j)), denom);
                        a[i * n + j] = v;
                        a[j * n + i] = v;
                    }
                }
                let chol = DdCholesky::new(&a, n, DD_PIVOT_TOL).ok_or_else(|| singular(kernel, points, jitter))?;
                Ok(GramSolver::Se {
                    chol,
                    scale2,
                    length: *length,
                })
            }
            Kernel::HermitePolynomial(_) => {
                let mut gram = kernel.gram(points.matrix())?;
                for i in 0..gram.nrows() {
                    gram[(i, i)] += jitter;
                }
                let max_diag = gram.diagonal().amax();
                match Cholesky::new(gram) {
                    Some(chol) if chol.l_dirty().diagonal().iter().all(|d| d * d > F64_PIVOT_TOL * max_diag) => {
                        Ok(GramSolver::Plain(chol))
                    }
                    _ => Err(singular(kernel, points, jitter)),
                }
            }
        }
    }

    /// `k(x)ᵀ (K + σ² I)⁻¹ b`.
    fn predict(&self, kernel: &Kernel, points: &UnitPointSet, b: &DVector<f64>, x: &[f64]) -> Result<f64> {
        if x.len() != points.dim() {
            return Err(Error::DimensionMismatch { expected: points.dim(), actual: x.len() });
        }
        match self {
            GramSolver::Plain(chol) => Ok(kernel.cross(points.matrix(), x)?.dot(&chol.solve(b))),
            GramSolver::Se { chol, length, .. } => {
                let alpha = chol.solve(&to_dd(b));
                let denom = Dd::from(2.0) * Dd::from(*length) * Dd::from(*length);
                let k: Vec<Dd> = points.iter().map(|p| se_unit(Dd::sq_dist(p, x), denom)).collect();
                Ok(dot(&k, &alpha).to_f64())
            }
        }
    }

    /// Weights and posterior variance `∬K − qᵀ W`.
    fn weights(&self, kernel: &Kernel, points: &UnitPointSet) -> Result<(DVector<f64>, f64)> {
        let (weights, v) = match self {
            GramSolver::Plain(chol) => {
                let q = kernel.mean_embeddings(points.matrix())?;
                let w = chol.solve(&q);
                let v = kernel.double_integral(points.dim()) - q.dot(&w);
                (w, v)
            }
            GramSolver::Se { chol, scale2, length, .. } => {
                // Both K and q carry s², so W = (K̃ + σ²/s² I)⁻¹ q̃ with unit-scale K̃, q̃.
                let n = points.dim() as f64;
                let l2 = length * length;
                let c = (-0.5 * n * (1.0 / l2).ln_1p()).exp();
                let c2 = (-0.5 * n * (2.0 / l2).ln_1p()).exp();
                let denom = Dd::from(2.0) * (Dd::ONE + Dd::from(*length) * Dd::from(*length));
                let origin = vec![0.0; points.dim()];
                let q: Vec<Dd> = points
                    .iter()
                    .map(|p| Dd::from(c) * se_unit(Dd::sq_dist(p, &origin), denom))
                    .collect();
                let w = chol.solve(&q);
                let v = (Dd::from(c2) - dot(&q, &w)).to_f64() * scale2;
                (DVector::from_iterator(w.len(), w.iter().map(|x| x.to_f64())), v)
            }
        };
        Ok((weights, clamp_variance(v)))
    }
}

fn clamp_variance(v: f64) -> f64 {
    if v < 0.0 && v > -VARIANCE_CLAMP {
        0.0
    } else {
        v
    }
}

/// GPQ weights `W = (K + σ² I)⁻¹ q`, with the posterior variance cached on the rule.
pub fn gpq_weights(kernel: &Kernel, points: &UnitPointSet, jitter: f64) -> Result<QuadratureRule> {
    let (weights, variance) = GramSolver::new(kernel, points, jitter)?.weights(kernel, points)?;
    Ok(QuadratureRule {
        points: points.clone(),
        weights,
        jitter,
        posterior_variance: Some(variance),
    })
}

/// Posterior variance of the GPQ integral estimate:
/// `∬ K N N − qᵀ (K + σ² I)⁻¹ q`, clamped at zero within `-1e-9`.
pub fn gpq_variance(kernel: &Kernel, points: &UnitPointSet, jitter: f64) -> Result<f64> {
    Ok(GramSolver::new(kernel, points, jitter)?.weights(kernel, points)?.1)
}

/// `‖(K + σ² I) W − q‖∞` for a solved rule, as a diagnostic.
pub fn weight_residual(kernel: &Kernel, rule: &QuadratureRule) -> Result<f64> {
    let mut gram = kernel.gram(rule.points.matrix())?;
    for i in 0..gram.nrows() {
        gram[(i, i)] += rule.jitter;
    }
    let q = kernel.mean_embeddings(rule.points.matrix())?;
    Ok((gram * &rule.weights - q).amax())
}

/// GP posterior mean at `query` given observations `obs` at the unit points.
pub fn gp_regression_mean(
    kernel: &Kernel,
    points: &UnitPointSet,
    obs: &DVector<f64>,
    jitter: f64,
    query: &[f64],
) -> Result<f64> {
    if obs.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            actual: obs.len(),
        });
    }
    GramSolver::new(kernel, points, jitter)?.predict(kernel, points, obs, query)
}

impl QuadratureRule {
    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sigma-points `m + √P ξ_i` as columns.
    pub fn sigma_points(&self, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if mean.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: mean.len() });
        }
        if cov.nrows() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: cov.nrows() });
        }
        let root = matrix_sqrt(cov)?.factor;
        let mut x = root * self.points.matrix();
        for mut col in x.column_iter_mut() {
            col += mean;
        }
        Ok(x)
    }

    fn evaluate<G>(&self, sigma: &DMatrix<f64>, g: G) -> Result<DMatrix<f64>>
    where
        G: Fn(&DVector<f64>) -> DVector<f64>,
    {
        let mut out: Option<DMatrix<f64>> = None;
        for i in 0..sigma.ncols() {
            let x = sigma.column(i).into_owned();
            let y = g(&x);
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteEvaluation { point: x.iter().copied().collect() });
            }
            let m = out.get_or_insert_with(|| DMatrix::zeros(y.len(), sigma.ncols()));
            if y.len() != m.nrows() {
                return Err(Error::DimensionMismatch { expected: m.nrows(), actual: y.len() });
            }
            m.set_column(i, &y);
        }
        out.ok_or_else(|| Error::InvalidParameter("empty rule".into()))
    }

    /// `Σ W_i g(m + √P ξ_i)`.
    pub fn apply<G>(&self, g: G, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<DVector<f64>>
    where
        G: Fn(&DVector<f64>) -> DVector<f64>,
    {
        let sigma = self.sigma_points(mean, cov)?;
        let y = self.evaluate(&sigma, g)?;
        Ok(&y * &self.weights)
    }

    /// Moment matching of `y = g(x) + q`, `x ~ N(m, P)`, `q ~ N(0, Q)`.
    pub fn transform<G>(
        &self,
        g: G,
        mean: &DVector<f64>,
        cov: &DMatrix<f64>,
        noise: &DMatrix<f64>,
    ) -> Result<TransformResult>
    where
        G: Fn(&DVector<f64>) -> DVector<f64>,
    {
        let sigma = self.sigma_points(mean, cov)?;
        let y = self.evaluate(&sigma, g)?;
        if noise.nrows() != y.nrows() || noise.ncols() != y.nrows() {
            return Err(Error::DimensionMismatch { expected: y.nrows(), actual: noise.nrows() });
        }
        Ok(moments(&self.weights, &sigma, mean, &y, noise))
    }
}

/// Weighted moments of propagated sigma-points: `(μ, Σ W (Y−μ)(Y−μ)ᵀ + Q, Σ W (X−m)(Y−μ)ᵀ)`.
/// Sums run in point-index order.
pub(crate) fn moments(
    weights: &DVector<f64>,
    sigma: &DMatrix<f64>,
    mean: &DVector<f64>,
    y: &DMatrix<f64>,
    noise: &DMatrix<f64>,
) -> TransformResult {
    let mu = y * weights;
    let mut dy = y.clone();
    for mut c in dy.column_iter_mut() {
        c -= &mu;
    }
    let mut dx = sigma.clone();
    for mut c in dx.column_iter_mut() {
        c -= mean;
    }
    let mut wdy = dy.clone();
    for (i, mut c) in wdy.column_iter_mut().enumerate() {
        c *= weights[i];
    }
    let cov = symmetrize(&(&wdy * dy.transpose())) + noise;
    let cross_cov = &dx * wdy.transpose();
    TransformResult { mean: mu, cov, cross_cov }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::{enumerate_indices, DegreeBound};
    use crate::points::{cubature_points, gauss_hermite_points, hammersley_points, random_points, ut_points, PointSetKind};
    use approx::assert_abs_diff_eq;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn ut_weights_from_polynomial_kernel() {
        let pts = ut_points(2, 1.0).unwrap().points;
        let rule = gpq_weights(&Kernel::ut(2, 3).unwrap(), &pts, 0.0).unwrap();
        for (a, b) in rule.weights.iter().zip([1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
        }
        assert!(rule.posterior_variance.unwrap() <= 1e-8);
    }

    #[test]
    fn se_weights_approach_ut_for_long_length_scale() {
        let pts = ut_points(1, 2.0).unwrap().points;
        let rule = gpq_weights(&Kernel::squared_exponential(1.0, 1e4).unwrap(), &pts, 0.0).unwrap();
        // Limit is (κ/(κ+1), 1/(2(κ+1)), 1/(2(κ+1))) at κ = 2.
        for (a, b) in rule.weights.iter().zip([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-3);
        }
    }

    #[test]
    fn se_limit_converges_monotonically() {
        // Reference errors from a 50-digit evaluation of the same weight system.
        let reference = [2.43e-5, 2.50e-9, 2.50e-13];
        let limit = [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];
        let pts = ut_points(1, 2.0).unwrap().points;
        let mut prev = f64::INFINITY;
        for (i, length) in [10.0, 1e2, 1e3, 1e4].into_iter().enumerate() {
            let rule = gpq_weights(&Kernel::squared_exponential(1.0, length).unwrap(), &pts, 0.0).unwrap();
            let err = rule.weights.iter().zip(limit).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if let Some(r) = reference.get(i) {
                assert!((err / r - 1.0).abs() < 0.01, "ℓ = {length}: {err:e}");
            }
            assert!(err < prev);
            assert!(rule.posterior_variance.unwrap() >= 0.0);
            prev = err;
        }
        assert!(prev < 1e-15);
    }

    #[test]
    fn gh_weights_from_polynomial_kernel() {
        let classical = gauss_hermite_points(1, 3).unwrap();
        let rule = gpq_weights(&Kernel::gauss_hermite(1, 3).unwrap(), &classical.points, 0.0).unwrap();
        assert_abs_diff_eq!((&rule.weights - &classical.weights).amax(), 0.0, epsilon = 1e-10);
        assert!(rule.posterior_variance.unwrap() <= 1e-8);
    }

    #[test]
    fn single_point_variance() {
        let pts = UnitPointSet::new(DMatrix::zeros(1, 1), PointSetKind::Custom).unwrap();
        let v = gpq_variance(&Kernel::squared_exponential(1.0, 1.0).unwrap(), &pts, 0.0).unwrap();
        assert_abs_diff_eq!(v, (1.0f64 / 3.0).sqrt() - 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(v, 0.0773503, epsilon = 1e-7);
    }

    #[test]
    fn duplicate_points_need_jitter() {
        let pts = UnitPointSet::new(DMatrix::from_row_slice(1, 2, &[0.5, 0.5]), PointSetKind::Custom).unwrap();
        let k = Kernel::squared_exponential(1.0, 1.0).unwrap();
        let err = gpq_weights(&k, &pts, 0.0).unwrap_err();
        assert!(matches!(err, Error::SingularGram { .. }));
        assert!(err.to_string().contains("increase the jitter"));
        let rule = gpq_weights(&k, &pts, 1e-6).unwrap();
        assert_abs_diff_eq!(rule.weights[0], rule.weights[1], epsilon = 1e-12);
    }

    #[test]
    fn kernel_dimension_must_match_points() {
        let pts = ut_points(3, 1.0).unwrap().points;
        assert!(matches!(
            gpq_weights(&Kernel::ut(2, 3).unwrap(), &pts, 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn apply_examples() {
        let m = dv(&[0.4, -1.0]);
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let ut: QuadratureRule = ut_points(2, 1.0).unwrap().into();
        let got = ut.apply(|x| x.clone(), &m, &p).unwrap();
        assert_abs_diff_eq!((got - &m).amax(), 0.0, epsilon = 1e-14);

        let ut1: QuadratureRule = ut_points(1, 2.0).unwrap().into();
        let got = ut1.apply(|x| dv(&[x[0] * x[0]]), &dv(&[0.0]), &DMatrix::identity(1, 1)).unwrap();
        assert_abs_diff_eq!(got[0], 1.0, epsilon = 1e-14);

        let cub: QuadratureRule = cubature_points(2).unwrap().into();
        let got = cub.apply(|x| dv(&[x[0] * x[1]]), &dv(&[0.0, 0.0]), &DMatrix::identity(2, 2)).unwrap();
        assert_abs_diff_eq!(got[0], 0.0, epsilon = 1e-15);

        let err = cub.apply(|x| dv(&[1.0 / x[0]]), &dv(&[0.0, 0.0]), &DMatrix::identity(2, 2)).unwrap_err();
        assert!(matches!(err, Error::NonFiniteEvaluation { .. }));
    }

    #[test]
    fn transform_examples() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -0.5, 0.3, 0.0, 1.5]);
        let b = dv(&[0.1, 0.2, -0.3]);
        let m = dv(&[0.4, -1.0]);
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let ut: QuadratureRule = ut_points(2, 1.0).unwrap().into();
        let t = ut.transform(|x| &a * x + &b, &m, &p, &DMatrix::zeros(3, 3)).unwrap();
        assert_abs_diff_eq!((t.mean - (&a * &m + &b)).amax(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!((t.cov - &a * &p * a.transpose()).amax(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!((t.cross_cov - &p * a.transpose()).amax(), 0.0, epsilon = 1e-10);

        let cub: QuadratureRule = cubature_points(1).unwrap().into();
        let t = cub.transform(|x| dv(&[x[0] * x[0]]), &dv(&[0.0]), &DMatrix::identity(1, 1), &DMatrix::zeros(1, 1)).unwrap();
        assert_abs_diff_eq!(t.mean[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.cross_cov[(0, 0)], 0.0, epsilon = 1e-15);

        let q = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.2]);
        let t = ut.transform(|_| dv(&[3.0, -1.0]), &m, &p, &q).unwrap();
        assert_abs_diff_eq!((t.mean - dv(&[3.0, -1.0])).amax(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((t.cov - &q).amax(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(t.cross_cov.amax(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn regression_mean_examples() {
        let k = Kernel::squared_exponential(1.0, 0.8).unwrap();
        let pts = random_points(1, 3, 4).unwrap();
        let obs = dv(&[0.3, -1.2, 2.0]);
        for i in 0..3 {
            let v = gp_regression_mean(&k, &pts, &obs, 0.0, pts.point(i)).unwrap();
            assert_abs_diff_eq!(v, obs[i], epsilon = 1e-8);
        }
        assert_eq!(gp_regression_mean(&k, &pts, &DVector::zeros(3), 0.0, &[0.7]).unwrap(), 0.0);

        // ∫ posterior mean · N = Σ W_i o_i. Order 10 resolves the posterior mean once ℓ ≳ 2;
        // shorter length scales need more nodes.
        for (length, order) in [(2.0, 10), (0.8, 40)] {
            let k = Kernel::squared_exponential(1.0, length).unwrap();
            let rule = gpq_weights(&k, &pts, 0.0).unwrap();
            let gh = gauss_hermite_points(1, order).unwrap();
            let integral = gh.integrate(|x| gp_regression_mean(&k, &pts, &obs, 0.0, x).unwrap());
            assert_abs_diff_eq!(integral, rule.weights.dot(&obs), epsilon = 1e-6);
        }
    }

    #[test]
    fn weight_system_residual_is_small() {
        let kernels = [
            Kernel::squared_exponential(1.0, 1.0).unwrap(),
            Kernel::squared_exponential(2.0, 3.0).unwrap(),
        ];
        for k in &kernels {
            for pts in [hammersley_points(2, 7).unwrap(), random_points(2, 12, 1).unwrap(), cubature_points(2).unwrap().points] {
                for jitter in [0.0, 1e-8] {
                    let rule = gpq_weights(k, &pts, jitter).unwrap();
                    let q = k.mean_embeddings(pts.matrix()).unwrap();
                    assert!(weight_residual(k, &rule).unwrap() <= 1e-9 * q.amax());
                }
            }
        }
    }

    #[test]
    fn gh_gpq_exact_on_per_dim_monomials() {
        for n in 1..=2usize {
            for order in 1..=3usize {
                let pts = gauss_hermite_points(n, order).unwrap().points;
                let rule = gpq_weights(&Kernel::gauss_hermite(n, order).unwrap(), &pts, 0.0).unwrap();
                for alpha in enumerate_indices(n, DegreeBound::PerDim(2 * order as u32 - 1)) {
                    let e = alpha.exponents();
                    let got: f64 = pts
                        .iter()
                        .zip(rule.weights.iter())
                        .map(|(p, w)| w * p.iter().zip(e).map(|(v, &k)| v.powi(k as i32)).product::<f64>())
                        .sum();
                    let exact: f64 = e.iter().map(|&k| if k % 2 == 1 { 0.0 } else { (1..k).step_by(2).map(f64::from).product() }).product();
                    assert_abs_diff_eq!(got, exact, epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn adding_points_never_increases_variance() {
        let k = Kernel::squared_exponential(1.0, 1.0).unwrap();
        let extra = random_points(2, 6, 11).unwrap();
        let mut pts = hammersley_points(2, 4).unwrap();
        let mut prev = gpq_variance(&k, &pts, 0.0).unwrap();
        for p in extra.iter() {
            pts = pts.with_point(p).unwrap();
            let v = gpq_variance(&k, &pts, 0.0).unwrap();
            assert!(v <= prev + 1e-10, "{v} > {prev}");
            prev = v;
        }
    }

    #[test]
    fn transform_is_affine_invariant() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let g = |x: &DVector<f64>| dv(&[x[0].sin() * x[1], (0.3 * x[0] * x[0] + x[1]).exp()]);
        let rules: Vec<QuadratureRule> = vec![
            ut_points(2, 1.0).unwrap().into(),
            gpq_weights(&Kernel::squared_exponential(1.0, 2.0).unwrap(), &hammersley_points(2, 9).unwrap(), 1e-8).unwrap(),
        ];
        for _ in 0..5 {
            // Cholesky roots commute with the map only for lower-triangular A with positive diagonal.
            let a = DMatrix::from_fn(2, 2, |i, j| match i.cmp(&j) {
                std::cmp::Ordering::Equal => rng.random_range(0.5..2.0),
                std::cmp::Ordering::Greater => rng.random_range(-1.0..1.0),
                std::cmp::Ordering::Less => 0.0,
            });
            let b = dv(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
            let m = dv(&[0.2, -0.1]);
            let p = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3]);
            let ainv = a.clone().try_inverse().unwrap();
            let m2 = &ainv * (&m - &b);
            let p2 = &ainv * &p * ainv.transpose();
            for rule in &rules {
                let direct = rule.transform(g, &m, &p, &DMatrix::zeros(2, 2)).unwrap();
                let mapped = rule.transform(|z| g(&(&a * z + &b)), &m2, &p2, &DMatrix::zeros(2, 2)).unwrap();
                assert_abs_diff_eq!((&direct.mean - &mapped.mean).amax(), 0.0, epsilon = 1e-9);
                assert_abs_diff_eq!((&direct.cov - &mapped.cov).amax(), 0.0, epsilon = 1e-9);
            }
        }
    }
}
