//! Zero-range process with m particles on n sites.

use serde::{Deserialize, Serialize};

use super::{beckner_predictions, check_states, ModelBundle, Prediction};
use crate::dirichlet::Kernel;
use crate::error::{Error, Result};
use crate::numeric::ksum;
use crate::space::FiniteSpace;

/// Per-site escape rates λ_i(l) for l = 0..=m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateTable {
    /// `table[i][l]` = λ_i(l).
    Table(Vec<Vec<f64>>),
    /// λ_i(l) = slope_i · l (independent walkers when all slopes are 1).
    Linear { slopes: Vec<f64> },
}

impl RateTable {
    pub fn independent_walkers(sites: usize) -> Self {
        RateTable::Linear { slopes: vec![1.0; sites] }
    }

    fn resolve(&self, sites: usize, particles: usize) -> Result<Vec<Vec<f64>>> {
        let t: Vec<Vec<f64>> = match self {
            RateTable::Table(t) => t.clone(),
            RateTable::Linear { slopes } => {
                slopes.iter().map(|s| (0..=particles).map(|l| s * l as f64).collect()).collect()
            }
        };
        if t.len() != sites {
            return Err(Error::DimensionMismatch { expected: sites, got: t.len() });
        }
        for row in &t {
            if row.len() < particles + 1 {
                return Err(Error::DimensionMismatch { expected: particles + 1, got: row.len() });
            }
            if row[0] != 0.0 || row[1..=particles].iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidArgument("rates need lambda(0) = 0 and lambda(l) > 0 for l >= 1".into()));
            }
        }
        Ok(t)
    }
}

fn compositions(m: usize, n: usize) -> Vec<Vec<usize>> {
    // Lexicographic order of occupation tuples.
    let mut out = Vec::new();
    fn rec(site: usize, left: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if site == n - 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(site + 1, left - k, n, cur, out);
            cur.pop();
        }
    }
    rec(0, m, n, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Zero-range dynamics x → x + e_j − e_i at rate λ_i(x_i)·p_j, with the
/// product-form stationary law μ(x) ∝ Π_i p_i^{x_i} / (λ_i(1)⋯λ_i(x_i)).
pub fn build_zero_range(particles: usize, sites: usize, rates: &RateTable, destination: &[f64]) -> Result<ModelBundle> {
    if sites < 2 {
        return Err(Error::InvalidArgument("zero-range needs at least two sites".into()));
    }
    if particles == 0 {
        return Err(Error::InvalidArgument("zero-range needs at least one particle".into()));
    }
    if destination.len() != sites {
        return Err(Error::DimensionMismatch { expected: sites, got: destination.len() });
    }
    if destination.iter().any(|p| !(*p > 0.0)) || (ksum(destination.iter().copied()) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument("destination law must be a positive probability vector".into()));
    }
    let lam = rates.resolve(sites, particles)?;
    let states = compositions(particles, sites);
    check_states(states.len())?;
    let index: std::collections::HashMap<Vec<usize>, usize> =
        states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    let logw: Vec<f64> = states
        .iter()
        .map(|x| ksum((0..sites).map(|i| x[i] as f64 * destination[i].ln() - ksum((1..=x[i]).map(|l| lam[i][l].ln())))))
        .collect();
    let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
    let labels = states.iter().map(|s| s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")).collect();
    let space = FiniteSpace::from_weights(labels, &w)?;
    let mut t = Vec::new();
    let mut y = vec![0usize; sites];
    for (k, x) in states.iter().enumerate() {
        for i in 0..sites {
            if x[i] == 0 {
                continue;
            }
            for j in 0..sites {
                if j == i {
                    continue;
                }
                y.copy_from_slice(x);
                y[i] -= 1;
                y[j] += 1;
                t.push((k, index[&y], lam[i][x[i]] * destination[j]));
            }
        }
    }
    let kernel = Kernel::new(space, t)?;
    let mut predicted = Vec::new();
    let incs: Vec<f64> = lam.iter().flat_map(|r| (0..particles).map(move |l| r[l + 1] - r[l])).collect();
    let delta = incs.iter().cloned().fold(f64::INFINITY, f64::min);
    let big_delta = incs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if delta > 0.0 {
        let rho0 = delta * delta / (2.0 * big_delta);
        let a = delta * delta / (12.0 * big_delta);
        let explicit = move |_p: f64| a;
        predicted.push(Prediction::lower(
            "rho0",
            rho0,
            "zero-range with increments in [delta, Delta]: rho0 >= delta^2/(2 Delta) (Hermon-Salez)",
        ));
        predicted.extend(beckner_predictions(
            rho0,
            "Beckner from modified log-Sobolev: alpha_p >= K_p rho0",
            Some((&explicit, "zero-range: alpha_p >= delta^2/(12 Delta)")),
        ));
    }
    Ok(ModelBundle {
        name: "zero_range".into(),
        kernel,
        coordinates: states.iter().map(|s| s.iter().map(|&v| v as i64).collect()).collect(),
        predicted,
        metadata: serde_json::json!({"particles": particles, "sites": sites, "delta": delta, "Delta": big_delta}),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_count() {
        assert_eq!(compositions(4, 3).len(), 15);
    }

    #[test]
    fn one_site_rejected() {
        assert!(build_zero_range(3, 1, &RateTable::independent_walkers(1), &[1.0]).is_err());
    }

    #[test]
    fn stationary() {
        let b = build_zero_range(4, 3, &RateTable::independent_walkers(3), &[0.2, 0.3, 0.5]).unwrap();
        assert!(b.kernel.stationarity_residual() < 1e-12);
    }
}
