use rand::Rng as _;
use rand_distr::StandardNormal;

use super::ModelBundle;
use crate::dirichlet::Kernel;
use crate::error::{Error, Result};
use crate::exec::{stream_id, stream_rng};
use crate::space::FiniteSpace;

/// Two states, rate 1 in both directions, uniform measure.
pub fn flip_chain() -> ModelBundle {
    let space = FiniteSpace::new(vec!["0".into(), "1".into()], vec![0.5, 0.5]).expect("valid space");
    let kernel = Kernel::new(space, vec![(0, 1, 1.0), (1, 0, 1.0)]).expect("reversible");
    ModelBundle {
        name: "flip".into(),
        kernel,
        coordinates: vec![vec![0], vec![1]],
        predicted: vec![
            super::Prediction::lower("lambda", 2.0, "two-point chain: exact gap 2"),
            super::Prediction::lower("rho1", 1.0, "two-point chain: exact log-Sobolev constant 1"),
            super::Prediction::lower(
                "rho0",
                4.0,
                "two-point chain: modified log-Sobolev constant 4, attained at constants",
            ),
        ],
        metadata: serde_json::json!({}),
    }
}

/// Seeded random reversible chain on `n` states: log-normal stationary
/// weights and symmetric conductances on the complete graph, with rates
/// `q_xy = c_xy / μ_x` normalized so the largest exit rate is 1.
pub fn random_reversible_chain(n: usize, seed: u64) -> Result<ModelBundle> {
    if n < 2 {
        return Err(Error::InvalidArgument("a random chain needs at least two states".into()));
    }
    super::check_states(n * n)?;
    let mut rng = stream_rng(seed, stream_id(0x7a, n as u64));
    let w: Vec<f64> = (0..n).map(|_| (0.75 * rng.sample::<f64, _>(StandardNormal)).exp()).collect();
    let labels = (0..n).map(|i| i.to_string()).collect();
    let space = FiniteSpace::from_weights(labels, &w)?;
    let mu = space.mu().to_vec();
    let mut cond = vec![vec![0.0; n]; n];
    for x in 0..n {
        for y in x + 1..n {
            let c = 0.05 + rng.random::<f64>();
            cond[x][y] = c;
            cond[y][x] = c;
        }
    }
    let exit: Vec<f64> = (0..n).map(|x| cond[x].iter().sum::<f64>() / mu[x]).collect();
    let scale = exit.iter().cloned().fold(0.0, f64::max);
    let mut t = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x != y {
                t.push((x, y, cond[x][y] / (mu[x] * scale)));
            }
        }
    }
    let kernel = Kernel::new(space, t)?;
    Ok(ModelBundle {
        name: format!("random_reversible_{n}_{seed}"),
        kernel,
        coordinates: (0..n as i64).map(|i| vec![i]).collect(),
        predicted: vec![],
        metadata: serde_json::json!({"states": n, "seed": seed}),
    })
}
