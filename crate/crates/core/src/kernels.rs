//! Covariance functions on the unit-Gaussian domain.
//!
//! Each kernel provides the three quantities GPQ needs: pointwise evaluation `K(ξ, ξ')`,
//! the mean embedding `∫ K(ξ, ξ_i) N(ξ | 0, I) dξ`, and the double integral
//! `∬ K(ξ, ξ') N(ξ | 0, I) N(ξ' | 0, I) dξ dξ'`. All three are closed form.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::hermite::{enumerate_indices, hermite_table, index_count, DegreeBound, MultiIndex};
use crate::{Error, Result};

/// Largest Hermite index set a polynomial kernel may carry.
pub const MAX_HERMITE_FEATURES: usize = 20_000;

#[derive(Clone, Debug, PartialEq)]
pub enum Kernel {
    /// `s² exp(-‖ξ - ξ'‖² / (2ℓ²))`.
    SquaredExponential { scale: f64, length: f64 },
    HermitePolynomial(HermiteKernel),
}

/// `Λ = diag(|I|! / I!)`: each multi-index weighted by the number of ordered coordinate
/// tuples it stands for. Under this weighting the UT-3 Gram on UT points takes the
/// compact closed form.
pub fn multinomial_coefficients(indices: &[MultiIndex]) -> DMatrix<f64> {
    let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
    DMatrix::from_diagonal(&DVector::from_iterator(
        indices.len(),
        indices.iter().map(|i| fact(i.total_degree()) / i.factorial()),
    ))
}

/// `K(ξ, ξ') = Σ_I Σ_J λ_IJ H_I(ξ) H_J(ξ') / (I! J!)` over a fixed index set.
///
/// `coefficients == None` stands for `Λ = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteKernel {
    dim: usize,
    indices: Vec<MultiIndex>,
    max_degree: u32,
    coefficients: Option<DMatrix<f64>>,
}

impl HermiteKernel {
    /// Builds a kernel over `indices` (all of dimension `dim`). The zero index must be
    /// present; `coefficients`, when given, must be symmetric PSD and match the index set.
    pub fn new(
        dim: usize,
        indices: Vec<MultiIndex>,
        coefficients: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        if dim == 0 || indices.is_empty() {
            return Err(Error::InvalidParameter(
                "Hermite kernel needs dim ≥ 1 and a non-empty index set".into(),
            ));
        }
        if indices.len() > MAX_HERMITE_FEATURES {
            return Err(Error::SizeCap {
                what: "Hermite kernel index set",
                requested: indices.len(),
                cap: MAX_HERMITE_FEATURES,
            });
        }
        if let Some(bad) = indices.iter().find(|i| i.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.dim(),
            });
        }
        if !indices[0].is_zero() {
            return Err(Error::InvalidParameter(
                "Hermite kernel index set must start with the zero index".into(),
            ));
        }
        if let Some(lambda) = &coefficients {
            let m = indices.len();
            if lambda.nrows() != m || lambda.ncols() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    actual: lambda.nrows(),
                });
            }
            let scale = lambda.amax().max(1.0);
            let asym = (lambda - lambda.transpose()).amax() / scale;
            if asym > 1e-12 {
                return Err(Error::NotSymmetric { asymmetry: asym });
            }
            let min_eig = SymmetricEigen::new(lambda.clone()).eigenvalues.min();
            if min_eig < -1e-10 * scale {
                return Err(Error::NotPositiveDefinite {
                    what: "Hermite coefficient matrix",
                    min_eigenvalue: min_eig,
                });
            }
        }
        let max_degree = indices.iter().map(MultiIndex::max_degree).max().unwrap_or(0);
        Ok(HermiteKernel {
            dim,
            indices,
            max_degree,
            coefficients,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn coefficients(&self) -> Option<&DMatrix<f64>> {
        self.coefficients.as_ref()
    }

    /// `φ_I(ξ) = H_I(ξ) / I!` for every index, in index-set order.
    pub fn features(&self, x: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.dim, x.len())?;
        let tables: Vec<Vec<f64>> = x.iter().map(|&xi| hermite_table(self.max_degree, xi)).collect();
        Ok(DVector::from_iterator(
            self.indices.len(),
            self.indices.iter().map(|idx| {
                let h: f64 = idx
                    .exponents()
                    .iter()
                    .zip(&tables)
                    .map(|(&p, t)| t[p as usize])
                    .product();
                h / idx.factorial()
            }),
        ))
    }

    fn weighted(&self, phi: &DVector<f64>) -> DVector<f64> {
        match &self.coefficients {
            Some(lambda) => lambda * phi,
            None => phi.clone(),
        }
    }

    fn lambda(&self, i: usize, j: usize) -> f64 {
        match &self.coefficients {
            Some(lambda) => lambda[(i, j)],
            None => {
                if i == j {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

impl Kernel {
    pub fn squared_exponential(scale: f64, length: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "squared exponential needs finite s > 0 and ℓ > 0 (got s={scale}, ℓ={length})"
            )));
        }
        Ok(Kernel::SquaredExponential { scale, length })
    }

    /// Polynomial kernel whose GPQ rule on unscented points is the order-`order` UT:
    /// all multi-indices of total degree `≤ order`, `Λ = I`.
    pub fn ut(n: usize, order: usize) -> Result<Self> {
        if !matches!(order, 3 | 5 | 7 | 9) {
            return Err(Error::UnsupportedOrder {
                order,
                reason: "UT kernels exist for orders 3, 5, 7, 9".into(),
            });
        }
        Self::hermite_identity(n, DegreeBound::Total(order as u32))
    }

    /// Polynomial kernel matched to the order-`order` Gauss–Hermite product rule:
    /// per-dimension degree `≤ 2·order − 1`, `Λ = I`, `(2·order)^n` indices.
    pub fn gauss_hermite(n: usize, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::UnsupportedOrder {
                order,
                reason: "Gauss–Hermite order must be ≥ 1".into(),
            });
        }
        Self::hermite_identity(n, DegreeBound::PerDim(2 * order as u32 - 1))
    }

    fn hermite_identity(n: usize, bound: DegreeBound) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be ≥ 1".into()));
        }
        let count = index_count(n, bound);
        if count > MAX_HERMITE_FEATURES {
            return Err(Error::SizeCap {
                what: "Hermite kernel index set",
                requested: count,
                cap: MAX_HERMITE_FEATURES,
            });
        }
        let indices = enumerate_indices(n, bound);
        Ok(Kernel::HermitePolynomial(HermiteKernel::new(n, indices, None)?))
    }

    /// The dimension the kernel is tied to, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            Kernel::SquaredExponential { .. } => None,
            Kernel::HermitePolynomial(h) => Some(h.dim),
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        check_dim(a.len(), b.len())?;
        match self {
            Kernel::SquaredExponential { scale, length } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
                Ok(scale * scale * (-d2 / (2.0 * length * length)).exp())
            }
            Kernel::HermitePolynomial(h) => {
                let fa = h.features(a)?;
                let fb = h.features(b)?;
                Ok(fa.dot(&h.weighted(&fb)))
            }
        }
    }

    /// `∫ K(ξ, x) N(ξ | 0, I) dξ`.
    pub fn mean_embedding(&self, x: &[f64]) -> Result<f64> {
        match self {
            Kernel::SquaredExponential { scale, length } => {
                let n = x.len() as f64;
                let l2 = length * length;
                let r2: f64 = x.iter().map(|v| v * v).sum();
                Ok(scale * scale * (l2 / (1.0 + l2)).powf(0.5 * n) * (-r2 / (2.0 * (1.0 + l2))).exp())
            }
            Kernel::HermitePolynomial(h) => {
                // Only H_0 ≡ 1 survives integration, leaving row 0 of Λ.
                let phi = h.features(x)?;
                Ok((0..phi.len()).map(|j| h.lambda(0, j) * phi[j]).sum())
            }
        }
    }

    /// `∬ K(ξ, ξ') N(ξ | 0, I) N(ξ' | 0, I) dξ dξ'` in dimension `n`.
    pub fn double_integral(&self, n: usize) -> f64 {
        match self {
            Kernel::SquaredExponential { scale, length } => {
                let l2 = length * length;
                scale * scale * (l2 / (l2 + 2.0)).powf(0.5 * n as f64)
            }
            Kernel::HermitePolynomial(h) => h.lambda(0, 0),
        }
    }

    /// Gram matrix over the columns of `points` (one point per column).
    pub fn gram(&self, points: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n_pts = points.ncols();
        match self {
            Kernel::HermitePolynomial(h) => {
                check_dim(h.dim, points.nrows())?;
                let mut phi = DMatrix::zeros(h.indices.len(), n_pts);
                for i in 0..n_pts {
                    phi.set_column(i, &h.features(points.column(i).as_slice())?);
                }
                let weighted = match &h.coefficients {
                    Some(lambda) => lambda * &phi,
                    None => phi.clone(),
                };
                let mut k = phi.transpose() * weighted;
                symmetrize_in_place(&mut k);
                Ok(k)
            }
            Kernel::SquaredExponential { .. } => {
                let mut k = DMatrix::zeros(n_pts, n_pts);
                for i in 0..n_pts {
                    for j in 0..=i {
                        let v = self.eval(points.column(i).as_slice(), points.column(j).as_slice())?;
                        k[(i, j)] = v;
                        k[(j, i)] = v;
                    }
                }
                Ok(k)
            }
        }
    }

    /// Mean embeddings of every column of `points`.
    pub fn mean_embeddings(&self, points: &DMatrix<f64>) -> Result<DVector<f64>> {
        let mut q = DVector::zeros(points.ncols());
        for i in 0..points.ncols() {
            q[i] = self.mean_embedding(points.column(i).as_slice())?;
        }
        Ok(q)
    }

    /// `k(x) = [K(x, ξ_i)]_i` against every column of `points`.
    pub fn cross(&self, points: &DMatrix<f64>, x: &[f64]) -> Result<DVector<f64>> {
        let mut k = DVector::zeros(points.ncols());
        for i in 0..points.ncols() {
            k[i] = self.eval(points.column(i).as_slice(), x)?;
        }
        Ok(k)
    }
}

fn symmetrize_in_place(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::gauss_hermite;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// Tensor Gauss–Hermite quadrature of `f` against `N(0, I_n)`.
    fn tensor_quad(n: usize, order: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
        let (x, w) = gauss_hermite(order).unwrap();
        let grid = enumerate_indices(n, DegreeBound::PerDim(order as u32 - 1));
        grid.iter()
            .map(|g| {
                let pt: Vec<f64> = g.exponents().iter().map(|&j| x[j as usize]).collect();
                let wt: f64 = g.exponents().iter().map(|&j| w[j as usize]).product();
                wt * f(&pt)
            })
            .sum()
    }

    #[test]
    fn eval_examples() {
        let se = Kernel::squared_exponential(1.0, 2.0).unwrap();
        assert_eq!(se.eval(&[0.3, -1.0], &[0.3, -1.0]).unwrap(), 1.0);

        let ut = Kernel::ut(2, 3).unwrap();
        assert_abs_diff_eq!(ut.eval(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 1.5, epsilon = 1e-14);
        let s3 = 3f64.sqrt();
        assert_abs_diff_eq!(ut.eval(&[0.0, 0.0], &[s3, 0.0]).unwrap(), 0.75, epsilon = 1e-14);

        assert!(matches!(
            ut.eval(&[0.0], &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(se.eval(&[0.0, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn mean_embedding_examples() {
        let ut = Kernel::ut(2, 3).unwrap();
        let s3 = 3f64.sqrt();
        for p in [[0.0, 0.0], [s3, 0.0], [-s3, 0.0], [0.0, s3], [0.0, -s3]] {
            assert_abs_diff_eq!(ut.mean_embedding(&p).unwrap(), 1.0, epsilon = 1e-14);
        }

        let wide = Kernel::squared_exponential(1.0, 1e8).unwrap();
        assert_abs_diff_eq!(wide.mean_embedding(&[2.0, 2.0]).unwrap(), 1.0, epsilon = 1e-6);

        // Oracle: 1-D quadrature of exp(-ξ²/2) against N(0, 1).
        let se = Kernel::squared_exponential(1.0, 1.0).unwrap();
        let oracle = tensor_quad(1, 40, |x| (-x[0] * x[0] / 2.0).exp());
        assert_abs_diff_eq!(oracle, 0.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(se.mean_embedding(&[0.0]).unwrap(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn double_integral_examples() {
        assert_eq!(Kernel::ut(2, 3).unwrap().double_integral(2), 1.0);
        let se = Kernel::squared_exponential(1.0, 1.0).unwrap();
        let oracle = tensor_quad(2, 40, |x| (-(x[0] - x[1]).powi(2) / 2.0).exp());
        assert_abs_diff_eq!(oracle, (1.0f64 / 3.0).sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(se.double_integral(1), oracle, epsilon = 1e-10);

        let se2 = Kernel::squared_exponential(2.0, 1.0).unwrap();
        assert_abs_diff_eq!(se2.double_integral(2), 4.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn double_integral_monte_carlo_cross_check() {
        let se = Kernel::squared_exponential(2.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pairs = 10_000_000usize;
        let mut acc = 0.0;
        for _ in 0..pairs {
            let a: [f64; 2] = [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)];
            let b: [f64; 2] = [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)];
            acc += se.eval(&a, &b).unwrap();
        }
        assert_abs_diff_eq!(acc / pairs as f64, 4.0 / 3.0, epsilon = 1e-3);
    }

    #[test]
    fn kernel_builders() {
        let Kernel::HermitePolynomial(h) = Kernel::ut(2, 3).unwrap() else { panic!() };
        assert_eq!(h.indices().len(), 10);
        let Kernel::HermitePolynomial(h) = Kernel::ut(1, 3).unwrap() else { panic!() };
        let degs: Vec<u32> = h.indices().iter().map(|i| i.exponents()[0]).collect();
        assert_eq!(degs, vec![0, 1, 2, 3]);
        assert!(Kernel::ut(2, 4).is_err());

        let Kernel::HermitePolynomial(h) = Kernel::gauss_hermite(1, 2).unwrap() else { panic!() };
        assert_eq!(h.indices().len(), 4);
        let Kernel::HermitePolynomial(h) = Kernel::gauss_hermite(2, 2).unwrap() else { panic!() };
        assert_eq!(h.indices().len(), 16);
        let Kernel::HermitePolynomial(h) = Kernel::gauss_hermite(2, 3).unwrap() else { panic!() };
        assert_eq!(h.indices().len(), 36);
        assert!(matches!(Kernel::gauss_hermite(10, 10), Err(Error::SizeCap { .. })));

        assert!(Kernel::squared_exponential(0.0, 1.0).is_err());
        assert!(Kernel::squared_exponential(1.0, -1.0).is_err());
    }

    fn ut_points_2d(kappa: f64) -> DMatrix<f64> {
        let r = (2.0 + kappa).sqrt();
        let mut pts = DMatrix::zeros(2, 5);
        pts[(0, 1)] = r;
        pts[(1, 2)] = r;
        pts[(0, 3)] = -r;
        pts[(1, 4)] = -r;
        pts
    }

    /// Closed-form 5×5 UT-3 Gram on 2-D UT points under multinomial weighting.
    fn closed_form_gram(k: f64) -> DMatrix<f64> {
        let diag = k.powi(3) / 36.0 + k * k / 4.0 + 13.0 * k / 6.0 + 91.0 / 18.0;
        let opp = -k.powi(3) / 36.0 + k * k / 4.0 - 7.0 * k / 6.0 - 37.0 / 18.0;
        let perp = 0.5 - k / 2.0;
        let center = 1.0 - k / 4.0;
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(5, 5, &[
            1.5,    center, center, center, center,
            center, diag,   perp,   opp,    perp,
            center, perp,   diag,   perp,   opp,
            center, opp,    perp,   diag,   perp,
            center, perp,   opp,    perp,   diag,
        ]);
        m
    }

    #[test]
    fn ut_kernel_gram_closed_forms() {
        for kappa in [0.5, 1.0, 2.0] {
            let pts = ut_points_2d(kappa);
            let closed = closed_form_gram(kappa);

            let Kernel::HermitePolynomial(h) = Kernel::ut(2, 3).unwrap() else { panic!() };
            let lambda = multinomial_coefficients(h.indices());
            let weighted = HermiteKernel::new(2, h.indices().to_vec(), Some(lambda)).unwrap();
            let k = Kernel::HermitePolynomial(weighted).gram(&pts).unwrap();
            assert!((k - &closed).amax() < 1e-10, "multinomial Λ, κ = {kappa}");

            // With Λ = I only the (1,2) and (2,1) terms change weight (3 → 1), which moves
            // the self and opposite-point entries by ∓ r²/2 = ∓ (1 + κ/2).
            let shift = 1.0 + kappa / 2.0;
            let mut expected = closed.clone();
            for i in 1..5 {
                expected[(i, i)] -= shift;
                let opp = if i <= 2 { i + 2 } else { i - 2 };
                expected[(i, opp)] += shift;
            }
            let k = Kernel::ut(2, 3).unwrap().gram(&pts).unwrap();
            assert!((&k - expected).amax() < 1e-10, "Λ = I, κ = {kappa}");
            assert_abs_diff_eq!(k[(0, 0)], 1.5, epsilon = 1e-12);
            assert_abs_diff_eq!(k[(0, 1)], 1.0 - kappa / 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn general_coefficient_matrix() {
        let indices = enumerate_indices(1, DegreeBound::Total(2));
        let lambda = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let k = Kernel::HermitePolynomial(HermiteKernel::new(1, indices.clone(), Some(lambda)).unwrap());
        assert_eq!(k.double_integral(1), 2.0);
        // Row 0 of Λ against φ(x) = (1, x, (x² - 1)/2).
        assert_abs_diff_eq!(k.mean_embedding(&[3.0]).unwrap(), 2.0 + 0.5 * 3.0, epsilon = 1e-14);

        let bad = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(HermiteKernel::new(1, indices.clone(), Some(bad)).is_err());
        let asym = DMatrix::from_row_slice(3, 3, &[1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            HermiteKernel::new(1, indices, Some(asym)),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn mean_embedding_matches_quadrature() {
        let kernels = |n: usize| {
            vec![
                Kernel::squared_exponential(1.3, 0.9).unwrap(),
                Kernel::squared_exponential(1.0, 3.0).unwrap(),
                Kernel::ut(n, 3).unwrap(),
                Kernel::ut(n, 5).unwrap(),
                Kernel::gauss_hermite(n, 2).unwrap(),
            ]
        };
        for n in 1..=2usize {
            for k in kernels(n) {
                for x in [[0.0, 0.0], [0.7, -1.2], [1.9, 0.4]] {
                    let x = &x[..n];
                    let oracle = tensor_quad(n, 40, |xi| k.eval(xi, x).unwrap());
                    assert_abs_diff_eq!(k.mean_embedding(x).unwrap(), oracle, epsilon = 1e-8);
                }
                let oracle = tensor_quad(n, 40, |xi| k.mean_embedding(xi).unwrap());
                assert_abs_diff_eq!(k.double_integral(n), oracle, epsilon = 1e-8);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn any_kernel() -> impl Strategy<Value = Kernel> {
            prop_oneof![
                (0.2f64..3.0, 0.1f64..5.0).prop_map(|(s, l)| Kernel::squared_exponential(s, l).unwrap()),
                Just(Kernel::ut(2, 3).unwrap()),
                Just(Kernel::ut(2, 5).unwrap()),
                Just(Kernel::gauss_hermite(2, 2).unwrap()),
            ]
        }

        proptest! {
            #[test]
            fn symmetric(k in any_kernel(), a in prop::array::uniform2(-4.0f64..4.0), b in prop::array::uniform2(-4.0f64..4.0)) {
                prop_assert_eq!(k.eval(&a, &b).unwrap(), k.eval(&b, &a).unwrap());
            }

            #[test]
            fn gram_is_psd(k in any_kernel(), pts in prop::collection::vec(-3.0f64..3.0, 2..=16)) {
                let m = pts.len() / 2;
                let pts = DMatrix::from_column_slice(2, m, &pts[..2 * m]);
                let gram = k.gram(&pts).unwrap();
                let scale = gram.amax().max(1.0);
                let min_eig = SymmetricEigen::new(gram).eigenvalues.min();
                prop_assert!(min_eig >= -1e-9 * scale, "min eig {}", min_eig);
            }

            #[test]
            fn se_bounded_by_scale(s in 0.2f64..3.0, l in 0.1f64..5.0, a in prop::array::uniform3(-4.0f64..4.0), b in prop::array::uniform3(-4.0f64..4.0)) {
                let k = Kernel::squared_exponential(s, l).unwrap();
                let v = k.eval(&a, &b).unwrap();
                prop_assert!(v >= 0.0 && v <= s * s);
                prop_assert_eq!(k.eval(&a, &a).unwrap(), s * s);
            }
        }
    }
}
