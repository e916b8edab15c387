//! Exponential random graph models on a few vertices.

use serde::Serialize;

use super::glauber::{build_glauber, ProductSpec};
use super::{ModelBundle, Prediction};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ErgParams {
    pub delta: f64,
    pub predicted: Vec<Prediction>,
}

/// δ = ½ Σ_{i≥2} |γ_i| |E_i| (|E_i| − 1); the first entry is the edge term.
pub fn erg_graph_delta(gammas: &[f64], edge_counts: &[usize]) -> Result<ErgParams> {
    if gammas.len() != edge_counts.len() || gammas.is_empty() {
        return Err(Error::DimensionMismatch { expected: gammas.len(), got: edge_counts.len() });
    }
    let delta = 0.5
        * gammas[1..].iter().zip(&edge_counts[1..]).map(|(g, &e)| g.abs() * e as f64 * (e as f64 - 1.0)).sum::<f64>();
    let mut predicted = Vec::new();
    if delta < 1.0 {
        predicted.push(Prediction::lower(
            "dobrushin_alpha",
            1.0 - delta,
            "exponential random graph with delta < 1: Dobrushin alpha >= 1 - delta",
        ));
        predicted.push(
            Prediction::lower(
                "dobrushin_beta",
                (-2.0 * gammas[0].abs()).exp(),
                "exponential random graph: beta >= c exp(-2|gamma_1|)",
            )
            .unspecified(),
        );
    }
    Ok(ErgParams { delta, predicted })
}

fn vertex_count(g: &[(usize, usize)]) -> usize {
    g.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0)
}

/// Number of injective, edge-preserving maps from `h` into the graph `adj`.
fn injective_homs(h: &[(usize, usize)], k: usize, adj: &[Vec<bool>]) -> usize {
    let n = adj.len();
    let mut map = vec![usize::MAX; k];
    let mut used = vec![false; n];
    fn rec(v: usize, k: usize, h: &[(usize, usize)], adj: &[Vec<bool>], map: &mut [usize], used: &mut [bool]) -> usize {
        if v == k {
            return h.iter().all(|&(a, b)| adj[map[a]][map[b]]) as usize;
        }
        let mut total = 0;
        for t in 0..adj.len() {
            if !used[t] {
                used[t] = true;
                map[v] = t;
                total += rec(v + 1, k, h, adj, map, used);
                used[t] = false;
            }
        }
        total
    }
    rec(0, k, h, adj, &mut map, &mut used)
}

/// ERGM on `vertices ≤ 5` vertices with weight exp(−H_γ(x)),
/// H_γ(x) = n² Σ γ_i N_{G_i}(x) / n^{|V_i|}, under edge Glauber dynamics.
pub fn build_erg(vertices: usize, gammas: &[f64], graphs: &[Vec<(usize, usize)>]) -> Result<ModelBundle> {
    if !(2..=5).contains(&vertices) {
        return Err(Error::InvalidArgument(format!("erg supports 2..=5 vertices, got {vertices}")));
    }
    if gammas.len() != graphs.len() || gammas.is_empty() {
        return Err(Error::DimensionMismatch { expected: gammas.len(), got: graphs.len() });
    }
    let pairs: Vec<(usize, usize)> = (0..vertices).flat_map(|i| (i + 1..vertices).map(move |j| (i, j))).collect();
    let m = pairs.len();
    let n = vertices as f64;
    let weights: Vec<f64> = (0..1usize << m)
        .map(|idx| {
            let mut adj = vec![vec![false; vertices]; vertices];
            for (e, &(a, b)) in pairs.iter().enumerate() {
                if idx >> (m - 1 - e) & 1 == 1 {
                    adj[a][b] = true;
                    adj[b][a] = true;
                }
            }
            let h: f64 = graphs
                .iter()
                .zip(gammas)
                .map(|(g, gamma)| {
                    let k = vertex_count(g);
                    gamma * injective_homs(g, k, &adj) as f64 * n * n / n.powi(k as i32)
                })
                .sum();
            (-h).exp()
        })
        .collect();
    let mut bundle = build_glauber(&ProductSpec::joint(vec![2; m], weights))?;
    bundle.name = "erg".into();
    let edge_counts: Vec<usize> = graphs.iter().map(|g| g.len()).collect();
    let params = erg_graph_delta(gammas, &edge_counts)?;
    bundle.predicted.extend(params.predicted);
    bundle.metadata = serde_json::json!({"vertices": vertices, "gammas": gammas, "delta": params.delta});
    Ok(bundle)
}
