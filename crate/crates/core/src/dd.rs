//! Double-double arithmetic (≈ 32 significant digits) for the squared exponential Gram solve.
//!
//! For long length scales the SE Gram matrix is `11ᵀ` plus structure far below `f64`
//! resolution; storing entries as `1 + expm1(·)` in double-double keeps that structure.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    fn renorm(hi: f64, lo: f64) -> Dd {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// `e^x − 1` to double-double accuracy; Taylor series on `|x| ≤ 1/2`, halving and
    /// squaring outside it.
    pub fn exp_m1(self) -> Dd {
        if self.hi < -745.0 {
            return -Dd::ONE;
        }
        let mut halvings = 0;
        let mut x = self;
        while x.hi.abs() > 0.5 {
            x = x * Dd::from(0.5);
            halvings += 1;
        }
        let mut term = x;
        let mut sum = x;
        for k in 2..40 {
            term = term * x / Dd::from(f64::from(k));
            sum = sum + term;
            if term.hi.abs() < 1e-34 * sum.hi.abs() {
                break;
            }
        }
        // e^{2y} − 1 = (e^y − 1)(e^y + 1).
        for _ in 0..halvings {
            sum = sum * (sum + Dd::from(2.0));
        }
        sum
    }

    /// `Σ (a_i − b_i)²` with exact differences.
    pub fn sq_dist(a: &[f64], b: &[f64]) -> Dd {
        a.iter().zip(b).fold(Dd::ZERO, |acc, (&x, &y)| {
            let (hi, lo) = two_sum(x, -y);
            let d = Dd { hi, lo };
            acc + d * d
        })
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let a = self.hi.sqrt();
        let (p, e) = two_prod(a, a);
        let corr = ((self.hi - p) - e + self.lo) / (2.0 * a);
        Dd::renorm(a, corr)
    }
}

impl From<f64> for Dd {
    fn from(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::renorm(s, e + f)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        Dd::renorm(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from(q3)
    }
}

/// Lower Cholesky factor of a dense symmetric matrix stored row-major.
pub(crate) struct DdCholesky {
    n: usize,
    l: Vec<Dd>,
}

impl DdCholesky {
    /// `None` when a pivot falls below `rel_tol` times the largest diagonal entry.
    pub fn new(a: &[Dd], n: usize, rel_tol: f64) -> Option<DdCholesky> {
        let max_diag = (0..n).map(|i| a[i * n + i].hi).fold(0.0, f64::max);
        let mut l = vec![Dd::ZERO; n * n];
        for j in 0..n {
            let mut s = a[j * n + j];
            for k in 0..j {
                s = s - l[j * n + k] * l[j * n + k];
            }
            if !(s.hi > rel_tol * max_diag) {
                return None;
            }
            let d = s.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Some(DdCholesky { n, l })
    }

    pub fn solve(&self, b: &[Dd]) -> Vec<Dd> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s = s - self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}

pub(crate) fn dot(a: &[Dd], b: &[Dd]) -> Dd {
    a.iter().zip(b).fold(Dd::ZERO, |acc, (x, y)| acc + *x * *y)
}
