use serde::{Deserialize, Serialize};

use super::norms::{all_partition_norms, AmOptions};
use super::{enumerate_partitions, IndexedTensor};
use crate::error::{Error, Result};

/// Inputs of the higher-order tail bound: the moment growth M r^γ of the
/// first-order inequality, sup_x ‖𝐃^d f(x)‖_𝓙 for every 𝓙 ∈ P_d, and the
/// norms ‖E 𝐃^k f‖_𝓙 for k < d.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailParameters {
    pub m: f64,
    pub gamma: f64,
    pub d: usize,
    /// Indexed like `enumerate_partitions(d)`.
    pub top_sup_norms: Vec<f64>,
    /// expected_norms[k − 1] is indexed like `enumerate_partitions(k)`.
    pub expected_norms: Vec<Vec<f64>>,
}

impl TailParameters {
    pub fn new(m: f64, gamma: f64, d: usize, top_sup_norms: Vec<f64>, expected_norms: Vec<Vec<f64>>) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Domain(format!("M must be positive, got {m}")));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!("gamma must be nonnegative, got {gamma}")));
        }
        let parts = enumerate_partitions(d)?;
        if top_sup_norms.len() != parts.len() {
            return Err(Error::DimensionMismatch { expected: parts.len(), got: top_sup_norms.len() });
        }
        if expected_norms.len() != d - 1 {
            return Err(Error::DimensionMismatch { expected: d - 1, got: expected_norms.len() });
        }
        for (k, norms) in expected_norms.iter().enumerate() {
            let count = enumerate_partitions(k + 1)?.len();
            if norms.len() != count {
                return Err(Error::DimensionMismatch { expected: count, got: norms.len() });
            }
        }
        for p in &parts {
            if (2.0 * gamma - 1.0) * d as f64 + p.len() as f64 <= 0.0 {
                return Err(Error::Domain(format!("exponent (2 gamma - 1) d + |J| must be positive for J = {p}")));
            }
        }
        if top_sup_norms.iter().chain(expected_norms.iter().flatten()).any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Numerical("tensor norms must be finite and nonnegative".into()));
        }
        Ok(TailParameters { m, gamma, d, top_sup_norms, expected_norms })
    }

    /// From the values of 𝐃^d f over the space and the tensors E 𝐃^k f,
    /// k = 1, …, d − 1.
    pub fn from_tensors(
        m: f64,
        gamma: f64,
        top: &[IndexedTensor],
        expected: &[IndexedTensor],
        opts: &AmOptions,
    ) -> Result<Self> {
        let first = top.first().ok_or_else(|| Error::InvalidArgument("no top-order derivative tensors".into()))?;
        let d = first.order();
        let mut sup = vec![0.0f64; enumerate_partitions(d)?.len()];
        for t in top {
            if t.order() != d {
                return Err(Error::DimensionMismatch { expected: d, got: t.order() });
            }
            for (s, n) in sup.iter_mut().zip(all_partition_norms(t, opts)?) {
                *s = s.max(n.value);
            }
        }
        let mut exp = Vec::new();
        for (k, t) in expected.iter().enumerate() {
            if t.order() != k + 1 {
                return Err(Error::DimensionMismatch { expected: k + 1, got: t.order() });
            }
            exp.push(all_partition_norms(t, opts)?.iter().map(|n| n.value).collect());
        }
        Self::new(m, gamma, d, sup, exp)
    }

    fn term(&self, t: f64, k: usize, blocks: usize, norm: f64) -> f64 {
        if norm == 0.0 {
            return f64::INFINITY;
        }
        let e = 2.0 / ((2.0 * self.gamma - 1.0) * k as f64 + blocks as f64);
        (t / (self.m.powi(k as i32) * norm)).powf(e)
    }

    /// η_f(t) = min(A, B).
    pub fn eta(&self, t: f64) -> f64 {
        let mut eta = f64::INFINITY;
        let top = enumerate_partitions(self.d).expect("validated");
        for (p, &n) in top.iter().zip(&self.top_sup_norms) {
            eta = eta.min(self.term(t, self.d, p.len(), n));
        }
        for (k, norms) in self.expected_norms.iter().enumerate() {
            let parts = enumerate_partitions(k + 1).expect("validated");
            for (p, &n) in parts.iter().zip(norms) {
                let e = 2.0 / ((2.0 * self.gamma - 1.0) * (k + 1) as f64 + p.len() as f64);
                if e <= 0.0 {
                    continue;
                }
                eta = eta.min(self.term(t, k + 1, p.len(), n));
            }
        }
        eta
    }
}

/// 2 exp(−η_f(t)/C'_d). C'_d is supplied by the caller.
pub fn higher_order_tail(params: &TailParameters, t: f64, c_d_prime: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    if !(c_d_prime > 0.0) {
        return Err(Error::Domain(format!("constant must be positive, got {c_d_prime}")));
    }
    Ok(2.0 * (-params.eta(t) / c_d_prime).exp())
}

/// min_{k ≤ d} min_{𝓙 ∈ P_k} (ρ₀^{k/2} t / ‖E∇^k f‖_𝓙)^{2/|𝓙|}.
pub fn polynomial_eta(rho0: f64, expected_gradients: &[IndexedTensor], t: f64, opts: &AmOptions) -> Result<f64> {
    if !(rho0 > 0.0) {
        return Err(Error::Domain(format!("rho0 must be positive, got {rho0}")));
    }
    let mut eta = f64::INFINITY;
    for (k, g) in expected_gradients.iter().enumerate() {
        if g.order() != k + 1 {
            return Err(Error::DimensionMismatch { expected: k + 1, got: g.order() });
        }
        for n in all_partition_norms(g, opts)? {
            if n.value > 0.0 {
                let base = rho0.powf((k + 1) as f64 / 2.0) * t / n.value;
                eta = eta.min(base.powf(2.0 / n.blocks as f64));
            }
        }
    }
    Ok(eta)
}

/// 2 exp(−η/C_d) for a tetrahedral polynomial of degree d under a modified
/// log-Sobolev inequality with constant ρ₀; C_d is supplied by the caller.
pub fn polynomial_tail_bound(
    rho0: f64,
    expected_gradients: &[IndexedTensor],
    t: f64,
    c_d: f64,
    opts: &AmOptions,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    if !(c_d > 0.0) {
        return Err(Error::Domain(format!("constant must be positive, got {c_d}")));
    }
    Ok(2.0 * (-polynomial_eta(rho0, expected_gradients, t, opts)? / c_d).exp())
}

fn edge_index(n: usize) -> (Vec<(usize, usize)>, Vec<Vec<usize>>) {
    let mut edges = Vec::new();
    let mut id = vec![vec![usize::MAX; n]; n];
    for u in 0..n {
        for v in u + 1..n {
            id[u][v] = edges.len();
            id[v][u] = edges.len();
            edges.push((u, v));
        }
    }
    (edges, id)
}

/// E∇T, E∇²T and ∇³T for the triangle count T of an exchangeable random
/// graph on n vertices, in edge coordinates, with a = E X_{12} and
/// b = E X_{12} X_{23}.
pub fn triangle_expected_gradients(n: usize, a: f64, b: f64) -> Result<Vec<IndexedTensor>> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("triangle counts need n >= 3, got {n}")));
    }
    let (edges, id) = edge_index(n);
    let m = edges.len();
    let third = |e: usize, f: usize| -> Option<usize> {
        let (a1, a2) = edges[e];
        let (b1, b2) = edges[f];
        if e == f {
            return None;
        }
        let shared = [a1, a2].into_iter().find(|v| *v == b1 || *v == b2)?;
        let x = if a1 == shared { a2 } else { a1 };
        let y = if b1 == shared { b2 } else { b1 };
        Some(id[x][y])
    };
    let g1 = IndexedTensor::vector(vec![(n - 2) as f64 * b; m])?;
    let g2 = IndexedTensor::from_fn(2, m, |i| if third(i[0], i[1]).is_some() { a } else { 0.0 })?;
    let g3 = IndexedTensor::from_fn(3, m, |i| if third(i[0], i[1]) == Some(i[2]) { 1.0 } else { 0.0 })?;
    Ok(vec![g1, g2, g3])
}

/// Closed-form three-term exponent for the triangle count:
/// min(t²/(n³(ρ₀⁻³ + ρ₀⁻²a²) + n⁴ρ₀⁻¹b²), t/(√n ρ₀^{−3/2} + n ρ₀⁻¹ a), ρ₀ t^{2/3}).
pub fn triangle_eta(n: usize, rho0: f64, a: f64, b: f64, t: f64) -> f64 {
    let n = n as f64;
    let v = n.powi(3) * (rho0.powi(-3) + rho0.powi(-2) * a * a) + n.powi(4) * b * b / rho0;
    let l = n.sqrt() * rho0.powf(-1.5) + n * a / rho0;
    (t * t / v).min(t / l).min(rho0 * t.powf(2.0 / 3.0))
}

/// 2 exp(−triangle_eta/C) with the universal constant C supplied.
pub fn triangle_count_tail_bound(n: usize, rho0: f64, a: f64, b: f64, t: f64, c: f64) -> Result<f64> {
    if !(t > 0.0) || !(rho0 > 0.0) || !(c > 0.0) {
        return Err(Error::Domain("t, rho0 and the constant must be positive".into()));
    }
    if n < 3 {
        return Err(Error::InvalidArgument(format!("triangle counts need n >= 3, got {n}")));
    }
    Ok(2.0 * (-triangle_eta(n, rho0, a, b, t) / c).exp())
}
