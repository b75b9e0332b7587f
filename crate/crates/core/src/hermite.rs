//! Probabilists' Hermite polynomials and Gauss–Hermite nodes.
//!
//! Everything here uses the probabilists' convention
//! `H_p(x) = (-1)^p exp(x²/2) dᵖ/dxᵖ exp(-x²/2)`, orthogonal under the standard normal
//! density: `E[H_p(ξ) H_q(ξ)] = p! δ_pq` for `ξ ~ N(0, 1)`.
//!
//! **Not** the physicists' convention (`exp(-x²)` weight, `H_2(x) = 4x² - 2`) used by many
//! quadrature libraries. The two are related by `He_p(x) = 2^{-p/2} H_p(x / √2)`.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// Highest Gauss–Hermite order supported by [`gauss_hermite`].
pub const MAX_GH_ORDER: usize = 50;

/// Per-dimension polynomial degrees of a multivariate Hermite polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zeros(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// `|I|`, the sum of the exponents.
    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn max_degree(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// `I! = i_1! ⋯ i_n!`, as a float since it overflows integers quickly.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&i| factorial(i)).product()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&i| i == 0)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

fn factorial(p: u32) -> f64 {
    (1..=p).map(f64::from).product()
}

/// `H_p(x)` via the three-term recurrence `H_{p+1} = x H_p - p H_{p-1}`.
pub fn hermite(p: u32, x: f64) -> f64 {
    match p {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for k in 1..p {
                let next = x * cur - f64::from(k) * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// All of `H_0(x) ..= H_max(x)` in one pass.
pub fn hermite_table(max: u32, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(max as usize + 1);
    out.push(1.0);
    if max >= 1 {
        out.push(x);
    }
    for k in 1..max as usize {
        let next = x * out[k] - k as f64 * out[k - 1];
        out.push(next);
    }
    out
}

/// `H_I(x) = H_{i_1}(x_1) ⋯ H_{i_n}(x_n)`.
pub fn hermite_multi(index: &MultiIndex, x: &[f64]) -> Result<f64> {
    if index.dim() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: index.dim(),
            actual: x.len(),
        });
    }
    Ok(index
        .exponents()
        .iter()
        .zip(x)
        .map(|(&p, &xi)| hermite(p, xi))
        .product())
}

/// Which multi-indices to enumerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegreeBound {
    /// `|I| ≤ P`; `C(n + P, n)` indices.
    Total(u32),
    /// `max I ≤ D`; `(D + 1)^n` indices.
    PerDim(u32),
}

/// Number of indices [`enumerate_indices`] would produce, saturating on overflow.
pub fn index_count(n: usize, bound: DegreeBound) -> usize {
    match bound {
        DegreeBound::Total(p) => {
            // C(n + p, n) computed incrementally; each partial product is itself a binomial.
            let mut c: u128 = 1;
            for i in 1..=n as u128 {
                c = c * (u128::from(p) + i) / i;
                if c > usize::MAX as u128 {
                    return usize::MAX;
                }
            }
            c as usize
        }
        DegreeBound::PerDim(d) => (d as usize + 1)
            .checked_pow(n as u32)
            .unwrap_or(usize::MAX),
    }
}

/// Multi-indices in graded lexicographic order: by total degree, then with higher
/// exponents in earlier coordinates first, so `(1,0)` precedes `(0,1)`.
pub fn enumerate_indices(n: usize, bound: DegreeBound) -> Vec<MultiIndex> {
    let per_dim_max = match bound {
        DegreeBound::Total(p) | DegreeBound::PerDim(p) => p,
    };
    let mut out = Vec::with_capacity(index_count(n, bound).min(1 << 20));
    let mut current = vec![0u32; n];
    fill(&mut out, &mut current, 0, per_dim_max, bound);
    out.sort_by(|a, b| {
        a.total_degree()
            .cmp(&b.total_degree())
            .then_with(|| b.0.cmp(&a.0))
    });
    out
}

fn fill(
    out: &mut Vec<MultiIndex>,
    current: &mut Vec<u32>,
    pos: usize,
    per_dim_max: u32,
    bound: DegreeBound,
) {
    if pos == current.len() {
        out.push(MultiIndex(current.clone()));
        return;
    }
    let used: u32 = current[..pos].iter().sum();
    let limit = match bound {
        DegreeBound::Total(p) => p - used,
        DegreeBound::PerDim(d) => d,
    }
    .min(per_dim_max);
    for e in 0..=limit {
        current[pos] = e;
        fill(out, current, pos + 1, per_dim_max, bound);
    }
    current[pos] = 0;
}

/// Nodes and weights of the `order`-point Gauss–Hermite rule for `N(0, 1)`.
///
/// Nodes are the zeros of `H_order`, found as eigenvalues of the symmetric tridiagonal
/// Jacobi matrix with zero diagonal and off-diagonal `√k`; the weight of each node is the
/// squared first component of its normalized eigenvector. Nodes are returned ascending and
/// exactly antisymmetric; weights sum to one.
pub fn gauss_hermite(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if order == 0 || order > MAX_GH_ORDER {
        return Err(Error::UnsupportedOrder {
            order,
            reason: format!("Gauss–Hermite order must be in 1..={MAX_GH_ORDER}"),
        });
    }
    let mut jacobi = DMatrix::<f64>::zeros(order, order);
    for k in 1..order {
        let off = (k as f64).sqrt();
        jacobi[(k - 1, k)] = off;
        jacobi[(k, k - 1)] = off;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|j| (eig.eigenvalues[j], eig.eigenvectors[(0, j)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Enforce the exact symmetry of the rule about zero.
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order {
        let j = order - 1 - i;
        nodes[i] = 0.5 * (pairs[i].0 - pairs[j].0);
        weights[i] = 0.5 * (pairs[i].1 + pairs[j].1);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok((nodes, weights))
}
