//! Hardcore model: independent sets of a graph weighted by η^{#occupied},
//! under heat-bath Glauber dynamics.

use std::collections::HashMap;

use serde::Serialize;

use super::{beckner_predictions, check_states, ModelBundle, Prediction};
use crate::constants::{ConstantEstimator, OptimizerOptions};
use crate::dirichlet::Kernel;
use crate::error::{Error, Result};
use crate::space::FiniteSpace;

/// Lower bound (1 − η(Δ−1) + 2 min(η, 1 − ηΔ)) / (1 + η) on ρ₀, valid when
/// ηΔ < 1 for maximal degree Δ.
pub fn conforti_bound(max_degree: usize, eta: f64) -> Option<f64> {
    let d = max_degree as f64;
    if !(eta > 0.0) || eta * d >= 1.0 {
        return None;
    }
    Some((1.0 - eta * (d - 1.0) + 2.0 * eta.min(1.0 - eta * d)) / (1.0 + eta))
}

fn independent_sets(n: usize, adj: &[u64]) -> Vec<u64> {
    // Depth-first over vertices 0..n with "absent" before "present", which
    // lists sets in lexicographic order of their indicator tuples.
    let mut out = Vec::new();
    fn rec(v: usize, n: usize, cur: u64, adj: &[u64], out: &mut Vec<u64>) {
        if v == n {
            out.push(cur);
            return;
        }
        rec(v + 1, n, cur, adj, out);
        if cur & adj[v] == 0 {
            rec(v + 1, n, cur | (1 << v), adj, out);
        }
    }
    rec(0, n, 0, adj, &mut out);
    out
}

pub fn build_hardcore(vertices: usize, edges: &[(usize, usize)], eta: f64) -> Result<ModelBundle> {
    if vertices == 0 || vertices > 63 {
        return Err(Error::InvalidArgument(format!("hardcore needs 1..=63 vertices, got {vertices}")));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!("fugacity must be positive, got {eta}")));
    }
    let mut adj = vec![0u64; vertices];
    for &(a, b) in edges {
        if a >= vertices || b >= vertices || a == b {
            return Err(Error::InvalidArgument(format!("bad edge ({a}, {b})")));
        }
        adj[a] |= 1 << b;
        adj[b] |= 1 << a;
    }
    let max_degree = adj.iter().map(|a| a.count_ones() as usize).max().unwrap_or(0);
    let sets = independent_sets(vertices, &adj);
    check_states(sets.len())?;
    let index: HashMap<u64, usize> = sets.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let occ = |s: u64| s.count_ones() as i32;
    let weights: Vec<f64> = sets.iter().map(|&s| eta.powi(occ(s))).collect();
    let coords: Vec<Vec<i64>> = sets.iter().map(|&s| (0..vertices).map(|v| (s >> v & 1) as i64).collect()).collect();
    let labels = coords.iter().map(|c| c.iter().map(|v| v.to_string()).collect::<String>()).collect();
    let space = FiniteSpace::from_weights(labels, &weights)?;
    let up = eta / (1.0 + eta);
    let down = 1.0 / (1.0 + eta);
    let mut rates = Vec::new();
    for (k, &s) in sets.iter().enumerate() {
        for v in 0..vertices {
            if s >> v & 1 == 1 {
                rates.push((k, index[&(s & !(1 << v))], down));
            } else if s & adj[v] == 0 {
                rates.push((k, index[&(s | (1 << v))], up));
            }
        }
    }
    let kernel = Kernel::new(space, rates)?;
    let mut predicted = Vec::new();
    if let Some(c) = conforti_bound(max_degree, eta) {
        let cite = "hardcore model with eta * Delta < 1: Conforti's modified log-Sobolev bound";
        predicted.push(Prediction::lower("rho0", c, cite));
        predicted.extend(beckner_predictions(c, "Beckner from modified log-Sobolev: alpha_p >= K_p rho0", None));
    }
    Ok(ModelBundle {
        name: "hardcore".into(),
        kernel,
        coordinates: coords,
        predicted,
        metadata: serde_json::json!({"vertices": vertices, "edges": edges, "eta": eta, "max_degree": max_degree}),
    })
}

/// Star with center vertex 0 and leaves 1..=n.
pub fn build_hardcore_star(leaves: usize, eta: f64) -> Result<ModelBundle> {
    if leaves == 0 {
        return Err(Error::InvalidArgument("star needs at least one leaf".into()));
    }
    let edges: Vec<(usize, usize)> = (1..=leaves).map(|l| (0, l)).collect();
    let mut b = build_hardcore(leaves + 1, &edges, eta)?;
    b.name = "hardcore_star".into();
    if leaves as f64 * eta < 1.0 && eta < 1.0 {
        b.predicted.push(Prediction::upper(
            "rho1",
            1.0 / ((1.0 + eta) * (1.0 / eta).ln()),
            "hardcore star: the all-leaves indicator bounds the log-Sobolev constant",
        ));
    }
    Ok(b)
}

#[derive(Debug, Clone, Serialize)]
pub struct StarGapReport {
    pub leaves: usize,
    pub eta: f64,
    /// μ of the all-leaves configuration.
    pub p: f64,
    pub entropy_closed: f64,
    pub energy_closed: f64,
    /// Module computations for the indicator, when the chain was built.
    pub entropy_module: Option<f64>,
    pub energy_module: Option<f64>,
    pub closed_forms_match: Option<bool>,
    /// Ɛ(f,f)/Ent(f) for the indicator, an upper bound on ρ₁.
    pub indicator_ratio: f64,
    pub rho1_upper: f64,
    pub rho0_lower: f64,
    pub rho0_estimate: Option<f64>,
    pub rho1_estimate: Option<f64>,
}

/// Closed-form quantities behind the separation of ρ₀ and ρ₁ on the star,
/// cross-checked against the library and optionally against the optimizer.
pub fn hardcore_star_gap(leaves: usize, eta: f64, opts: Option<&OptimizerOptions>) -> Result<StarGapReport> {
    if !(eta > 0.0) || leaves as f64 * eta >= 1.0 {
        return Err(Error::Domain(format!("need eta * n < 1, got eta = {eta}, n = {leaves}")));
    }
    let n = leaves as f64;
    let z = eta + (1.0 + eta).powi(leaves as i32);
    let p = eta.powi(leaves as i32) / z;
    let entropy_closed = p * (1.0 / p).ln();
    let energy_closed = p * n / (1.0 + eta);
    let rho1_upper = 1.0 / ((1.0 + eta) * (1.0 / eta).ln());
    let rho0_lower = conforti_bound(leaves, eta).expect("eta * n < 1");
    let mut report = StarGapReport {
        leaves,
        eta,
        p,
        entropy_closed,
        energy_closed,
        entropy_module: None,
        energy_module: None,
        closed_forms_match: None,
        indicator_ratio: energy_closed / entropy_closed,
        rho1_upper,
        rho0_lower,
        rho0_estimate: None,
        rho1_estimate: None,
    };
    let Ok(bundle) = build_hardcore_star(leaves, eta) else {
        return Ok(report);
    };
    let target = bundle
        .coordinates
        .iter()
        .position(|c| c[0] == 0 && c[1..].iter().all(|&v| v == 1))
        .expect("all-leaves configuration present");
    let mut f = vec![0.0; bundle.len()];
    f[target] = 1.0;
    let ent = bundle.space().entropy(&f)?;
    let energy = bundle.kernel.dirichlet_form(&f, &f)?;
    report.entropy_module = Some(ent);
    report.energy_module = Some(energy);
    report.closed_forms_match = Some(
        (ent - entropy_closed).abs() <= 1e-10 * entropy_closed
            && (energy - energy_closed).abs() <= 1e-10 * energy_closed,
    );
    if let Some(o) = opts {
        let est = ConstantEstimator::new(&bundle.kernel, o.clone())?;
        report.rho0_estimate = Some(est.mlsi()?.value);
        report.rho1_estimate = Some(est.lsi()?.value);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_weights() {
        let (n, eta) = (4, 0.1);
        let b = build_hardcore_star(n, eta).unwrap();
        assert_eq!(b.len(), 1 + (1 << n));
        let z = eta + (1.0f64 + eta).powi(n as i32);
        let star = b.coordinates.iter().position(|c| c[0] == 1).unwrap();
        assert!((b.space().mu()[star] - eta / z).abs() < 1e-15);
    }

    #[test]
    fn star_bound_reference_value() {
        let eta: f64 = 1.0 / 20.0;
        let v = 1.0 / ((1.0 + eta) * (1.0 / eta).ln());
        assert!((v - 0.3179).abs() < 1e-4);
    }

    #[test]
    fn conforti_needs_small_fugacity() {
        assert!(conforti_bound(3, 0.5).is_none());
        assert!((conforti_bound(1, 0.25).unwrap() - (1.0 + 0.5) / 1.25).abs() < 1e-15);
    }
}
