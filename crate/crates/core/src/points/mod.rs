//! Unit sigma-point sets `ξ_1..ξ_N ∈ ℝⁿ` and the classical rules that come with them.
//!
//! Point sets live in the standardized `N(0, I)` coordinates; a rule is applied to
//! `N(m, P)` through `x_i = m + √P ξ_i`.

mod hammersley;
mod optimize;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::hermite::{enumerate_indices, gauss_hermite, DegreeBound};
use crate::{Error, Result};

pub use hammersley::{
    hammersley_centered, hammersley_unit, inverse_normal_cdf, radical_inverse, MAX_HAMMERSLEY_DIM,
};
pub use optimize::{optimize_points, OptimizeOptions, MAX_OPTIMIZE_COORDS};

/// Largest tensor grid [`gauss_hermite_points`] will build.
pub const MAX_TENSOR_POINTS: usize = 1_000_000;

/// How a point set was constructed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PointSetKind {
    Ut { kappa: f64 },
    Cubature,
    Symmetric5,
    GaussHermite { order: usize },
    Random { seed: u64 },
    Hammersley,
    Optimized,
    /// Supplied by the caller (e.g. read from CSV).
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnitPointSet {
    points: DMatrix<f64>,
    kind: PointSetKind,
}

impl UnitPointSet {
    /// Wraps an `n × N` matrix with one point per column. Rejects empty or non-finite sets.
    pub fn new(points: DMatrix<f64>, kind: PointSetKind) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(Error::InvalidParameter("point set must be non-empty".into()));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("point set contains non-finite coordinates".into()));
        }
        Ok(UnitPointSet { points, kind })
    }

    pub fn dim(&self) -> usize {
        self.points.nrows()
    }

    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.points.ncols() == 0
    }

    pub fn kind(&self) -> &PointSetKind {
        &self.kind
    }

    /// The points as an `n × N` matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let n = self.dim();
        &self.points.as_slice()[i * n..(i + 1) * n]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.as_slice().chunks_exact(self.dim())
    }

    /// The same set with one extra point appended.
    pub fn with_point(&self, p: &[f64]) -> Result<Self> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: p.len(),
            });
        }
        let mut m = self.points.clone().insert_column(self.len(), 0.0);
        m.column_mut(self.len()).copy_from_slice(p);
        UnitPointSet::new(m, PointSetKind::Custom)
    }
}

/// A point set with its classical (non-GP) weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalRule {
    pub points: UnitPointSet,
    pub weights: DVector<f64>,
}

impl ClassicalRule {
    /// `Σ W_i f(ξ_i)` in unit coordinates.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(self.weights.iter())
            .map(|(p, w)| w * f(p))
            .sum()
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be ≥ 1".into()));
    }
    Ok(())
}

/// Unscented transform: origin plus `±√(n+κ) e_i`, weights `κ/(n+κ)` and `1/(2(n+κ))`.
///
/// Point order is origin, `+e_1..+e_n`, `-e_1..-e_n`.
pub fn ut_points(n: usize, kappa: f64) -> Result<ClassicalRule> {
    check_dim(n)?;
    let nk = n as f64 + kappa;
    if !(nk > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidParameter(format!("UT needs n + κ > 0 (n={n}, κ={kappa})")));
    }
    let r = nk.sqrt();
    let mut pts = DMatrix::zeros(n, 2 * n + 1);
    for i in 0..n {
        pts[(i, 1 + i)] = r;
        pts[(i, 1 + n + i)] = -r;
    }
    let mut w = DVector::from_element(2 * n + 1, 1.0 / (2.0 * nk));
    w[0] = kappa / nk;
    Ok(ClassicalRule {
        points: UnitPointSet::new(pts, PointSetKind::Ut { kappa })?,
        weights: w,
    })
}

/// Third-order spherical cubature: `±√n e_i`, equal weights `1/(2n)`.
pub fn cubature_points(n: usize) -> Result<ClassicalRule> {
    check_dim(n)?;
    let r = (n as f64).sqrt();
    let mut pts = DMatrix::zeros(n, 2 * n);
    for i in 0..n {
        pts[(i, i)] = r;
        pts[(i, n + i)] = -r;
    }
    Ok(ClassicalRule {
        points: UnitPointSet::new(pts, PointSetKind::Cubature)?,
        weights: DVector::from_element(2 * n, 1.0 / (2.0 * n as f64)),
    })
}

/// Fully symmetric fifth-order rule with `2n² + 1` points: the origin, `±λ e_i`, and
/// `(±λ, ±λ)` in every coordinate plane, `λ = √3`.
///
/// The three generator weights are the solution of the exactness conditions for `1`,
/// `ξ_1²` and `ξ_1² ξ_2²`; with `λ² = 3` the `ξ_1⁴` condition then holds as well, and
/// symmetry takes care of every odd monomial.
pub fn symmetric5_points(n: usize) -> Result<ClassicalRule> {
    if n < 2 {
        return Err(Error::InvalidParameter("symmetric fifth-order rule needs n ≥ 2".into()));
    }
    let lambda = 3f64.sqrt();
    let l2 = lambda * lambda;
    let nf = n as f64;

    // Unknowns (w_origin, w_axis, w_pair).
    let a = Matrix3::new(
        1.0, 2.0 * nf, 2.0 * nf * (nf - 1.0),
        0.0, 2.0 * l2, 4.0 * (nf - 1.0) * l2,
        0.0, 0.0, 4.0 * l2 * l2,
    );
    let b = Vector3::new(1.0, 1.0, 1.0);
    let sol = a
        .lu()
        .solve(&b)
        .expect("fifth-order exactness system is nonsingular for n ≥ 2");
    debug_assert!((2.0 * l2 * l2 * sol[1] + 4.0 * (nf - 1.0) * l2 * l2 * sol[2] - 3.0).abs() < 1e-12);

    let count = 2 * n * n + 1;
    let mut pts = DMatrix::zeros(n, count);
    let mut w = DVector::zeros(count);
    w[0] = sol[0];
    let mut col = 1;
    for i in 0..n {
        for s in [1.0, -1.0] {
            pts[(i, col)] = s * lambda;
            w[col] = sol[1];
            col += 1;
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                pts[(i, col)] = si * lambda;
                pts[(j, col)] = sj * lambda;
                w[col] = sol[2];
                col += 1;
            }
        }
    }
    debug_assert_eq!(col, count);
    Ok(ClassicalRule {
        points: UnitPointSet::new(pts, PointSetKind::Symmetric5)?,
        weights: w,
    })
}

/// Tensor-product Gauss–Hermite rule with `order^n` points.
///
/// Points are ordered with the first coordinate varying fastest.
pub fn gauss_hermite_points(n: usize, order: usize) -> Result<ClassicalRule> {
    check_dim(n)?;
    let count = order.checked_pow(n as u32).unwrap_or(usize::MAX);
    if count > MAX_TENSOR_POINTS {
        return Err(Error::SizeCap {
            what: "Gauss–Hermite tensor grid",
            requested: count,
            cap: MAX_TENSOR_POINTS,
        });
    }
    let (x, w1) = gauss_hermite(order)?;
    let mut pts = DMatrix::zeros(n, count);
    let mut w = DVector::zeros(count);
    let mut digits = vec![0usize; n];
    for col in 0..count {
        let mut wt = 1.0;
        for d in 0..n {
            pts[(d, col)] = x[digits[d]];
            wt *= w1[digits[d]];
        }
        w[col] = wt;
        for digit in digits.iter_mut() {
            *digit += 1;
            if *digit < order {
                break;
            }
            *digit = 0;
        }
    }
    Ok(ClassicalRule {
        points: UnitPointSet::new(pts, PointSetKind::GaussHermite { order })?,
        weights: w,
    })
}

/// `count` Hammersley points mapped to `N(0, I)` through the normal quantile.
///
/// The first coordinate is `(i + 0.5) / count`; the remaining coordinates are radical
/// inverses in successive prime bases, shifted to the centers of their finest cells so that
/// no coordinate sits at 0 before the quantile map.
pub fn hammersley_points(n: usize, count: usize) -> Result<UnitPointSet> {
    check_dim(n)?;
    if count == 0 {
        return Err(Error::InvalidParameter("point count must be ≥ 1".into()));
    }
    if n > MAX_HAMMERSLEY_DIM {
        return Err(Error::InvalidParameter(format!(
            "Hammersley sets are supported up to dimension {MAX_HAMMERSLEY_DIM}"
        )));
    }
    let u = hammersley_centered(n, count);
    UnitPointSet::new(u.map(inverse_normal_cdf), PointSetKind::Hammersley)
}

/// `count` i.i.d. `N(0, I)` draws from ChaCha8 seeded with `seed`, filled point by point.
pub fn random_points(n: usize, count: usize, seed: u64) -> Result<UnitPointSet> {
    check_dim(n)?;
    if count == 0 {
        return Err(Error::InvalidParameter("point count must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..n * count).map(|_| StandardNormal.sample(&mut rng)).collect();
    UnitPointSet::new(DMatrix::from_column_slice(n, count, &data), PointSetKind::Random { seed })
}

/// Exponent vectors for all monomials with total degree `≤ degree` (test helper and docs).
pub fn monomials_total(n: usize, degree: u32) -> Vec<Vec<u32>> {
    enumerate_indices(n, DegreeBound::Total(degree))
        .into_iter()
        .map(|i| i.exponents().to_vec())
        .collect()
}
