use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;

/// The first few primes, one radical-inverse base per extra dimension.
const PRIMES: [u32; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

pub const MAX_HAMMERSLEY_DIM: usize = PRIMES.len() + 1;

/// Van der Corput radical inverse of `i` in `base`.
pub fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = f64::from(base);
    let inv = 1.0 / b;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % u64::from(base)) as f64 * f;
        i /= u64::from(base);
        f *= inv;
    }
    out
}

/// Smallest `b^m ≥ count`.
fn resolution(base: u32, count: usize) -> f64 {
    let mut r: u64 = 1;
    while (r as usize) < count {
        r *= u64::from(base);
    }
    r as f64
}

/// The `count`-point Hammersley set in `[0, 1)^dim`, one point per column: first coordinate
/// `(i + 0.5) / count`, coordinate `d ≥ 1` the radical inverse of `i` in the `d`-th prime.
pub fn hammersley_unit(dim: usize, count: usize) -> DMatrix<f64> {
    assert!(dim <= MAX_HAMMERSLEY_DIM, "Hammersley dimension above {MAX_HAMMERSLEY_DIM}");
    DMatrix::from_fn(dim, count, |d, i| {
        if d == 0 {
            (i as f64 + 0.5) / count as f64
        } else {
            radical_inverse(i as u64, PRIMES[d - 1])
        }
    })
}

/// Hammersley set shifted to cell centers so no coordinate is 0: the radical-inverse
/// coordinates gain `1 / (2 b^m)` with `b^m` the smallest power of the base `≥ count`.
pub fn hammersley_centered(dim: usize, count: usize) -> DMatrix<f64> {
    let mut u = hammersley_unit(dim, count);
    for d in 1..dim {
        let shift = 0.5 / resolution(PRIMES[d - 1], count);
        u.row_mut(d).add_scalar_mut(shift);
    }
    u
}

/// Standard normal quantile `Φ⁻¹(u)` for `u ∈ (0, 1)`.
///
/// Acklam's rational approximation (relative error below 1.2e-9) followed by one Halley
/// step against `erfc`, which brings the result to near machine precision.
pub fn inverse_normal_cdf(u: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const LOW: f64 = 0.02425;

    if u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    let x = if u < LOW {
        let q = (-2.0 * u.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if u <= 1.0 - LOW {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - u).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // Halley refinement.
    let e = 0.5 * libm::erfc(-x / SQRT_2) - u;
    let step = e * (2.0 * PI).sqrt() * (x * x / 2.0).exp();
    x - step / (1.0 + x * step / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn normal_cdf(x: f64) -> f64 {
        0.5 * libm::erfc(-x / SQRT_2)
    }

    /// Bisection on the erfc-based CDF; independent of the rational approximation.
    fn bisect_quantile(u: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if normal_cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn quantile_matches_bisection() {
        let mut u = 1e-6;
        while u < 1.0 - 1e-6 {
            assert_abs_diff_eq!(inverse_normal_cdf(u), bisect_quantile(u), epsilon = 1e-9);
            u += 0.00731;
        }
        for u in [1e-12, 1e-8, 0.02, 0.02425, 0.5, 0.97575, 0.999] {
            assert_abs_diff_eq!(inverse_normal_cdf(u), bisect_quantile(u), epsilon = 1e-9);
        }
        assert_eq!(inverse_normal_cdf(0.5), 0.0);
        assert_abs_diff_eq!(inverse_normal_cdf(0.25), -0.6744897501960817, epsilon = 1e-12);
    }

    #[test]
    fn radical_inverse_base_two() {
        let got: Vec<f64> = (0..4).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(got, vec![0.0, 0.5, 0.25, 0.75]);
        assert_abs_diff_eq!(radical_inverse(5, 3), 2.0 / 3.0 + 1.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn unit_set_layout() {
        let u = hammersley_unit(2, 4);
        assert_eq!(u.row(0).iter().copied().collect::<Vec<_>>(), vec![0.125, 0.375, 0.625, 0.875]);
        assert_eq!(u.row(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.5, 0.25, 0.75]);

        let c = hammersley_centered(2, 4);
        assert_eq!(c.row(1).iter().copied().collect::<Vec<_>>(), vec![0.125, 0.625, 0.375, 0.875]);
        assert!(c.iter().all(|&v| v > 0.0 && v < 1.0));
    }
}
