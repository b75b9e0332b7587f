//! Minimum posterior-variance point sets by quasi-Newton search over the stacked coordinates.

use nalgebra::{DMatrix, DVector};

use super::{random_points, PointSetKind, UnitPointSet};
use crate::kernels::Kernel;
use crate::quadrature::gpq_variance;
use crate::{Error, Result};

/// Largest `N·n` the optimizer accepts.
pub const MAX_OPTIMIZE_COORDS: usize = 2_000;

/// Fresh initializations tried per restart before it is declared failed.
const INIT_ATTEMPTS: u64 = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeOptions {
    /// Independent starts; restart 0 starts from `random_points(n, N, seed)`.
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once `‖∇f‖∞` falls below this.
    pub grad_tol: f64,
    /// Stop once an iteration improves the objective by less than this fraction.
    pub rel_tol: f64,
    /// Gram jitter used inside the objective.
    pub jitter: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            restarts: 5,
            max_iter: 200,
            grad_tol: 1e-10,
            rel_tol: 1e-10,
            jitter: 0.0,
        }
    }
}

struct Objective<'a> {
    kernel: &'a Kernel,
    dim: usize,
    jitter: f64,
}

impl Objective<'_> {
    /// Posterior variance; singular or failed systems count as `+∞`.
    fn value(&self, z: &DVector<f64>) -> f64 {
        let m = DMatrix::from_column_slice(self.dim, z.len() / self.dim, z.as_slice());
        match UnitPointSet::new(m, PointSetKind::Optimized) {
            Ok(pts) => match gpq_variance(self.kernel, &pts, self.jitter) {
                Ok(v) if v.is_finite() => v,
                _ => f64::INFINITY,
            },
            Err(_) => f64::INFINITY,
        }
    }

    /// Central differences with step `1e-6·max(1, |z_i|)`.
    fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(z.len());
        let mut zp = z.clone();
        for i in 0..z.len() {
            let h = 1e-6 * z[i].abs().max(1.0);
            zp[i] = z[i] + h;
            let fp = self.value(&zp);
            zp[i] = z[i] - h;
            let fm = self.value(&zp);
            zp[i] = z[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        g
    }
}

/// BFGS with Armijo backtracking. Never returns a point worse than `z0`.
fn bfgs(obj: &Objective, mut z: DVector<f64>, mut f: f64, opts: &OptimizeOptions) -> (DVector<f64>, f64) {
    let m = z.len();
    let mut h = DMatrix::<f64>::identity(m, m);
    let mut g = obj.gradient(&z);
    for iter in 0..opts.max_iter {
        if !g.iter().all(|v| v.is_finite()) || g.amax() < opts.grad_tol {
            break;
        }
        let mut d = -(&h * &g);
        if g.dot(&d) >= 0.0 {
            h.fill_with_identity();
            d = -g.clone();
        }
        // Keep trial steps within one unit per coordinate.
        let dmax = d.amax();
        if dmax > 1.0 {
            d /= dmax;
        }
        let slope = g.dot(&d);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let trial = &z + alpha * &d;
            let ft = obj.value(&trial);
            if ft <= f + 1e-4 * alpha * slope {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((z_new, f_new)) = accepted else { break };
        let g_new = obj.gradient(&z_new);
        let s = &z_new - &z;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if iter == 0 {
                h *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ, expanded.
            h += (rho * rho * yhy + rho) * (&s * s.transpose()) - rho * (&hy * s.transpose() + &s * hy.transpose());
        }
        let improvement = f - f_new;
        z = z_new;
        g = g_new;
        f = f_new;
        if improvement <= opts.rel_tol * f.abs() {
            break;
        }
    }
    (z, f)
}

fn run_restart(obj: &Objective, n: usize, count: usize, seed: u64, r: usize, opts: &OptimizeOptions) -> Option<(DVector<f64>, f64)> {
    for attempt in 0..INIT_ATTEMPTS {
        let s = seed
            .wrapping_add(r as u64)
            .wrapping_add(attempt.wrapping_mul(opts.restarts as u64));
        let init = random_points(n, count, s).ok()?;
        let z0 = DVector::from_column_slice(init.matrix().as_slice());
        let f0 = obj.value(&z0);
        if f0.is_finite() {
            return Some(bfgs(obj, z0, f0, opts));
        }
    }
    None
}

/// Minimizes the GPQ posterior variance over `count` points in `n` dimensions.
///
/// Each restart starts from `random_points(n, count, seed + r)` and runs BFGS on the
/// `count·n` coordinates with finite-difference gradients. The lowest-variance result
/// wins, ties going to the earliest restart.
pub fn optimize_points(
    kernel: &Kernel,
    n: usize,
    count: usize,
    seed: u64,
    opts: &OptimizeOptions,
) -> Result<UnitPointSet> {
    if n == 0 || count == 0 || opts.restarts == 0 {
        return Err(Error::InvalidParameter("optimize_points needs n, N and restarts ≥ 1".into()));
    }
    if n * count > MAX_OPTIMIZE_COORDS {
        return Err(Error::SizeCap {
            what: "optimized point coordinates",
            requested: n * count,
            cap: MAX_OPTIMIZE_COORDS,
        });
    }
    if let Some(d) = kernel.fixed_dim() {
        if d != n {
            return Err(Error::DimensionMismatch { expected: d, actual: n });
        }
    }
    let obj = Objective { kernel, dim: n, jitter: opts.jitter };
    let run = |r: usize| run_restart(&obj, n, count, seed, r, opts);

    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        (0..opts.restarts).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = (0..opts.restarts).map(run).collect();

    let best = results
        .into_iter()
        .flatten()
        .fold(None::<(DVector<f64>, f64)>, |best, cand| match best {
            Some(b) if b.1 <= cand.1 => Some(b),
            _ => Some(cand),
        })
        .ok_or_else(|| Error::Optimization("every restart hit a non-finite objective".into()))?;
    UnitPointSet::new(
        DMatrix::from_column_slice(n, count, best.0.as_slice()),
        PointSetKind::Optimized,
    )
}
