//! Small dense linear-algebra helpers shared by the quadrature and filtering code.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

use crate::{Error, Result};

/// How a [`MatrixSqrt`] was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SqrtMethod {
    /// Lower-triangular Cholesky factor.
    Cholesky,
    /// Symmetric square root from an eigendecomposition with negative eigenvalues clipped.
    ClippedEigen,
}

#[derive(Clone, Debug)]
pub struct MatrixSqrt {
    pub factor: DMatrix<f64>,
    pub method: SqrtMethod,
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(symmetrize(m)).eigenvalues.min()
}

/// Relative asymmetry `max|A - Aᵀ| / max(1, max|A|)`.
pub(crate) fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax() / m.amax().max(1.0)
}

/// `L` with `L Lᵀ = P`.
///
/// Tries Cholesky first. If that fails and `P` is PSD up to `-1e-10·‖P‖`, falls back to the
/// symmetric square root with negative eigenvalues clipped to zero (reported through
/// [`SqrtMethod::ClippedEigen`]).
pub fn matrix_sqrt(p: &DMatrix<f64>) -> Result<MatrixSqrt> {
    if !p.is_square() {
        return Err(Error::DimensionMismatch {
            expected: p.nrows(),
            actual: p.ncols(),
        });
    }
    let asym = asymmetry(p);
    if asym > 1e-9 {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let sym = symmetrize(p);
    if let Some(chol) = Cholesky::new(sym.clone()) {
        return Ok(MatrixSqrt {
            factor: chol.l(),
            method: SqrtMethod::Cholesky,
        });
    }
    let eig = SymmetricEigen::new(sym);
    let norm = eig.eigenvalues.amax();
    let min = eig.eigenvalues.min();
    if min < -1e-10 * norm || !min.is_finite() {
        return Err(Error::NotPositiveDefinite {
            what: "covariance",
            min_eigenvalue: min,
        });
    }
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let factor = &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose();
    Ok(MatrixSqrt {
        factor,
        method: SqrtMethod::ClippedEigen,
    })
}

/// Cholesky of a matrix that must be positive definite; the error names `what`.
pub(crate) fn cholesky(m: &DMatrix<f64>, what: &'static str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(symmetrize(m)).ok_or_else(|| Error::NotPositiveDefinite {
        what,
        min_eigenvalue: min_eigenvalue(m),
    })
}

/// `X` with `X A = B` for symmetric PD `A`, computed as `(A⁻¹ Bᵀ)ᵀ` by Cholesky solves.
pub(crate) fn solve_right_pd(
    b: &DMatrix<f64>,
    a: &DMatrix<f64>,
    what: &'static str,
) -> Result<DMatrix<f64>> {
    let chol = cholesky(a, what)?;
    Ok(chol.solve(&b.transpose()).transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_and_diagonal() {
        let l = matrix_sqrt(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(l.method, SqrtMethod::Cholesky);
        assert_abs_diff_eq!((l.factor - DMatrix::identity(3, 3)).amax(), 0.0);

        let p = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let l = matrix_sqrt(&p).unwrap().factor;
        assert_abs_diff_eq!(l[(0, 0)], 2.0);
        assert_abs_diff_eq!(l[(1, 1)], 3.0);
        assert_abs_diff_eq!(l[(1, 0)], 0.0);
    }

    #[test]
    fn hand_cholesky() {
        let p = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let l = matrix_sqrt(&p).unwrap().factor;
        assert_abs_diff_eq!(l[(0, 0)], 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(l[(1, 0)], 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(l[(1, 1)], 1.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(l[(0, 1)], 0.0);
    }

    #[test]
    fn singular_psd_falls_back_to_eigen() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let s = matrix_sqrt(&p).unwrap();
        assert_eq!(s.method, SqrtMethod::ClippedEigen);
        let back = &s.factor * s.factor.transpose();
        assert_abs_diff_eq!((back - p).amax(), 0.0, epsilon = 1e-12);

        let zero = DMatrix::<f64>::zeros(2, 2);
        assert_eq!(matrix_sqrt(&zero).unwrap().factor, zero);
    }

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(matrix_sqrt(&p), Err(Error::NotSymmetric { .. })));
        let p = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(matrix_sqrt(&p), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn right_solve() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let x = solve_right_pd(&b, &a, "test").unwrap();
        assert_abs_diff_eq!((x * a - b).amax(), 0.0, epsilon = 1e-12);
    }
}
