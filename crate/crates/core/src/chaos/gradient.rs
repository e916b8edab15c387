//! Oriented-edge gradients on binary product spaces and the moment
//! decomposition of a function into Gaussian chaoses of its derivatives.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::norms::{all_partition_norms, AmOptions};
use super::{enumerate_partitions, IndexedTensor};
use crate::error::{Error, Result};
use crate::moments::{kappa, BecknerRegime};
use crate::numeric::ksum;
use crate::zoo::ModelBundle;

/// State-count cap for gradient enumeration.
pub const GRADIENT_STATE_LIMIT: usize = 1 << 16;

/// A state space of words whose coordinates each take two values, closed
/// under changing one coordinate. Orientation is lexicographic: the larger
/// coordinate value is the head of every edge.
#[derive(Debug, Clone)]
pub struct BinaryCube {
    sites: usize,
    mu: Vec<f64>,
    /// to_hi[x][i], to_lo[x][i]: state with coordinate i set high / low.
    to_hi: Vec<Vec<usize>>,
    to_lo: Vec<Vec<usize>>,
    lambda_star: f64,
}

impl BinaryCube {
    pub fn from_bundle(bundle: &ModelBundle) -> Result<Self> {
        let states = bundle.coordinates.len();
        if states > GRADIENT_STATE_LIMIT {
            return Err(Error::TooLarge { states, limit: GRADIENT_STATE_LIMIT });
        }
        let sites = bundle.coordinates.first().map_or(0, |c| c.len());
        if sites == 0 || bundle.coordinates.iter().any(|c| c.len() != sites) {
            return Err(Error::InvalidArgument("states need a common positive number of coordinates".into()));
        }
        let mut values: Vec<(i64, i64)> = Vec::with_capacity(sites);
        for i in 0..sites {
            let mut v: Vec<i64> = bundle.coordinates.iter().map(|c| c[i]).collect();
            v.sort_unstable();
            v.dedup();
            if v.len() != 2 {
                return Err(Error::InvalidArgument(format!("coordinate {i} takes {} values, expected 2", v.len())));
            }
            values.push((v[0], v[1]));
        }
        let index: HashMap<&[i64], usize> =
            bundle.coordinates.iter().enumerate().map(|(k, c)| (c.as_slice(), k)).collect();
        let mut to_hi = vec![vec![0; sites]; states];
        let mut to_lo = vec![vec![0; sites]; states];
        let mut buf = vec![0i64; sites];
        for (x, c) in bundle.coordinates.iter().enumerate() {
            for i in 0..sites {
                buf.copy_from_slice(c);
                buf[i] = values[i].1;
                to_hi[x][i] = *index.get(buf.as_slice()).ok_or_else(|| {
                    Error::InvalidArgument("state space is not closed under single-coordinate changes".into())
                })?;
                buf[i] = values[i].0;
                to_lo[x][i] = *index.get(buf.as_slice()).ok_or_else(|| {
                    Error::InvalidArgument("state space is not closed under single-coordinate changes".into())
                })?;
            }
        }
        let kernel = &bundle.kernel;
        let mut lambda_star = 0.0f64;
        for x in 0..states {
            for (y, q) in kernel.row(x) {
                let diff = (0..sites).filter(|&i| bundle.coordinates[x][i] != bundle.coordinates[y][i]).count();
                if diff != 1 {
                    return Err(Error::InvalidArgument(
                        "dynamics moves more than one coordinate; oriented gradients do not apply".into(),
                    ));
                }
                lambda_star = lambda_star.max(q);
            }
        }
        Ok(BinaryCube { sites, mu: bundle.kernel.mu().to_vec(), to_hi, to_lo, lambda_star })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Largest single-coordinate jump rate.
    pub fn lambda_star(&self) -> f64 {
        self.lambda_star
    }
}

/// D_i g(x) = g(x with coordinate i high) − g(x with coordinate i low).
pub fn oriented_gradient(cube: &BinaryCube, g: &[f64], i: usize) -> Result<Vec<f64>> {
    if g.len() != cube.len() {
        return Err(Error::DimensionMismatch { expected: cube.len(), got: g.len() });
    }
    if i >= cube.sites {
        return Err(Error::InvalidArgument(format!("coordinate {i} out of range")));
    }
    Ok((0..cube.len()).map(|x| g[cube.to_hi[x][i]] - g[cube.to_lo[x][i]]).collect())
}

/// All D_{i_1} ⋯ D_{i_k} f as functions, multi-index flattened row-major.
fn derivative_functions(cube: &BinaryCube, f: &[f64], k: usize) -> Result<Vec<Vec<f64>>> {
    if f.len() != cube.len() {
        return Err(Error::DimensionMismatch { expected: cube.len(), got: f.len() });
    }
    if !(1..=super::MAX_ORDER).contains(&k) {
        return Err(Error::InvalidArgument(format!("derivative order must be in 1..={}", super::MAX_ORDER)));
    }
    let n = cube.sites;
    let count = n.checked_pow(k as u32).unwrap_or(usize::MAX);
    if count.saturating_mul(cube.len()) > super::MAX_ENTRIES * 4 {
        return Err(Error::TooLarge { states: count.saturating_mul(cube.len()), limit: super::MAX_ENTRIES * 4 });
    }
    let mut level = vec![f.to_vec()];
    for _ in 0..k {
        let mut next = Vec::with_capacity(level.len() * n);
        for i in 0..n {
            for g in &level {
                next.push(oriented_gradient(cube, g, i)?);
            }
        }
        level = next;
    }
    Ok(level)
}

/// 𝐃^k f(x) for every state x.
pub fn gradient_tensor(cube: &BinaryCube, f: &[f64], k: usize) -> Result<Vec<IndexedTensor>> {
    let funcs = derivative_functions(cube, f, k)?;
    (0..cube.len()).map(|x| IndexedTensor::new(k, cube.sites, funcs.iter().map(|g| g[x]).collect())).collect()
}

/// E_μ 𝐃^k f.
pub fn expected_gradient(cube: &BinaryCube, f: &[f64], k: usize) -> Result<IndexedTensor> {
    let funcs = derivative_functions(cube, f, k)?;
    IndexedTensor::new(k, cube.sites, funcs.iter().map(|g| ksum(g.iter().zip(&cube.mu).map(|(v, w)| v * w))).collect())
}

/// (M, γ) with ‖f − Ef‖_r ≤ M r^γ ‖|𝐃f|‖_r, where M = sqrt(κ(s) λ*/(2a)) and
/// γ = (1 + s)/2, for a regime α_p ≥ a(p − 1)^s and maximal jump rate λ*.
pub fn moment_constant(regime: &BecknerRegime, lambda_star: f64) -> Result<(f64, f64)> {
    regime.validate()?;
    if !(lambda_star > 0.0) {
        return Err(Error::Domain(format!("lambda* must be positive, got {lambda_star}")));
    }
    Ok(((kappa(regime.s)? * lambda_star / (2.0 * regime.a)).sqrt(), (1.0 + regime.s) / 2.0))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub r: f64,
    pub d: usize,
    pub m: f64,
    pub gamma: f64,
    /// Exact ‖f − Ef‖_r.
    pub exact: f64,
    /// M^d Σ_𝓙 r^{(γ−½)d+|𝓙|/2} ‖ ‖𝐃^d f(X)‖_𝓙 ‖_r.
    pub top_term: f64,
    /// Σ_{k<d} M^k Σ_𝓙 r^{(γ−½)k+|𝓙|/2} ‖E𝐃^k f‖_𝓙.
    pub lower_terms: f64,
    /// top_term + lower_terms; the bound is C_d times this.
    pub shape: f64,
    /// exact / shape, the smallest C_d for which the bound holds here.
    pub required_constant: f64,
}

impl DecompositionReport {
    pub fn bound(&self, c_d: f64) -> f64 {
        c_d * self.shape
    }
}

/// Moment form of the higher-order bound for f on a binary product model,
/// compared with the exact moment. The universal constant is left out: the
/// report gives the shape and the constant it would need.
pub fn moment_decomposition_bound(
    bundle: &ModelBundle,
    f: &[f64],
    regime: &BecknerRegime,
    r: f64,
    d: usize,
    opts: &AmOptions,
) -> Result<DecompositionReport> {
    if !(r >= 2.0) || !r.is_finite() {
        return Err(Error::Domain(format!("moment order must satisfy r >= 2, got {r}")));
    }
    let cube = BinaryCube::from_bundle(bundle)?;
    let (m, gamma) = moment_constant(regime, cube.lambda_star())?;
    let space = bundle.space();
    let mean = space.expectation(f)?;
    let centered: Vec<f64> = f.iter().map(|v| v - mean).collect();
    let exact = space.lr_norm(&centered, r)?;

    let parts = enumerate_partitions(d)?;
    let tops = gradient_tensor(&cube, f, d)?;
    let per_state: Vec<Vec<f64>> = tops
        .iter()
        .map(|t| all_partition_norms(t, opts).map(|v| v.iter().map(|n| n.value).collect()))
        .collect::<Result<_>>()?;
    let mut top_term = 0.0;
    for (j, p) in parts.iter().enumerate() {
        let col: Vec<f64> = per_state.iter().map(|row| row[j]).collect();
        let w = r.powf((gamma - 0.5) * d as f64 + p.len() as f64 / 2.0);
        top_term += w * space.lr_norm(&col, r)?;
    }
    top_term *= m.powi(d as i32);

    let mut lower_terms = 0.0;
    for k in 1..d {
        let e = expected_gradient(&cube, f, k)?;
        let norms = all_partition_norms(&e, opts)?;
        let s: f64 = norms.iter().map(|n| r.powf((gamma - 0.5) * k as f64 + n.blocks as f64 / 2.0) * n.value).sum();
        lower_terms += m.powi(k as i32) * s;
    }
    let shape = top_term + lower_terms;
    let required_constant = if shape > 0.0 {
        exact / shape
    } else if exact > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(DecompositionReport { r, d, m, gamma, exact, top_term, lower_terms, shape, required_constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::check_twosided_moments;
    use crate::zoo::{build_glauber, ProductSpec};

    fn cube(n: usize) -> ModelBundle {
        build_glauber(&ProductSpec::factorized(vec![vec![0.5, 0.5]; n])).unwrap()
    }

    #[test]
    fn involutions_kill_second_derivative() {
        let b = cube(4);
        let c = BinaryCube::from_bundle(&b).unwrap();
        let f: Vec<f64> = (0..b.len()).map(|x| ((x * 37 % 11) as f64).sin()).collect();
        for i in 0..4 {
            let d = oriented_gradient(&c, &f, i).unwrap();
            let dd = oriented_gradient(&c, &d, i).unwrap();
            assert!(dd.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn gradient_of_quadratic() {
        let b = cube(3);
        let c = BinaryCube::from_bundle(&b).unwrap();
        // f = x0 x1 + 2 x2 on {0,1}^3
        let f: Vec<f64> = b.coordinates.iter().map(|x| (x[0] * x[1] + 2 * x[2]) as f64).collect();
        let e1 = expected_gradient(&c, &f, 1).unwrap();
        assert_eq!(e1.entries(), &[0.5, 0.5, 2.0]);
        let e2 = expected_gradient(&c, &f, 2).unwrap();
        assert_eq!(e2.get(&[0, 1]), 1.0);
        assert_eq!(e2.get(&[0, 2]), 0.0);
    }

    #[test]
    fn linear_case_matches_moment_engine() {
        let b = cube(6);
        let f = b.coordinate_sum();
        let reg = BecknerRegime::from_mlsi(1.0).unwrap();
        for r in [2.0, 4.0, 8.0] {
            let rep = moment_decomposition_bound(&b, &f, &reg, r, 1, &AmOptions::default()).unwrap();
            let two = check_twosided_moments(&b.kernel, &f, &reg, &[r]).unwrap();
            assert!((rep.shape - two.report.rhs[0].sqrt()).abs() < 1e-10 * rep.shape);
            assert!(rep.required_constant <= 1.0);
        }
    }

    #[test]
    fn quadratic_on_cube() {
        let b = cube(8);
        let f: Vec<f64> = b
            .coordinates
            .iter()
            .map(|x| {
                let s: i64 = (0..8)
                    .flat_map(|i| (i + 1..8).map(move |j| (i, j)))
                    .map(|(i, j)| x[i] * x[j] * ((i + j) as i64 % 3 - 1))
                    .sum();
                s as f64
            })
            .collect();
        let reg = BecknerRegime::from_mlsi(1.0).unwrap();
        let reps: Vec<_> = [2.0, 4.0, 8.0]
            .iter()
            .map(|&r| moment_decomposition_bound(&b, &f, &reg, r, 2, &AmOptions::default()).unwrap())
            .collect();
        let c = reps.iter().map(|r| r.required_constant).fold(0.0, f64::max);
        assert!(c > 0.0 && c < 1.0, "calibrated constant {c}");
        for rep in &reps {
            assert!(rep.bound(c) >= rep.exact * (1.0 - 1e-12));
        }
    }
}
