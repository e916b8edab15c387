//! Constructors for the standard reversible chains used as test beds, each
//! bundled with the constants the literature predicts for it.

mod erg;
mod glauber;
mod hardcore;
mod metropolis;
mod random;
mod symmetric;
mod zero_range;

use serde::{Deserialize, Serialize};

pub use erg::{build_erg, erg_graph_delta, ErgParams};
pub use glauber::build_ising;
pub use glauber::{build_glauber, dobrushin_parameters, DobrushinParams, ProductMeasure, ProductSpec};
pub use hardcore::{build_hardcore, build_hardcore_star, conforti_bound, hardcore_star_gap, StarGapReport};
pub use metropolis::{metropolis_kernel, single_change_or_transposition};
pub use random::{flip_chain, random_reversible_chain};
pub use symmetric::{build_interchange, build_multislice, multislice_lift, permutations};
pub use zero_range::{build_zero_range, RateTable};

use crate::constants::big_k;
use crate::dirichlet::Kernel;
use crate::error::{Error, Result};

/// Exponents at which Beckner predictions are tabulated.
pub const PREDICTION_P_GRID: [f64; 4] = [1.05, 1.2, 1.5, 2.0];
/// Largest state space the constructors will enumerate.
pub const MAX_STATES: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundSide {
    Lower,
    Upper,
}

/// A predicted bound on an optimal constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// `lambda`, `rho0`, `rho1`, `alpha_p`, `dobrushin_alpha`, `dobrushin_beta`.
    pub constant: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub side: BoundSide,
    pub value: f64,
    /// The bound holds only up to an unspecified universal constant; it is
    /// reported but never checked.
    pub constant_unspecified: bool,
    pub citation: String,
}

impl Prediction {
    pub fn lower(constant: &str, value: f64, citation: &str) -> Self {
        Self {
            constant: constant.into(),
            p: None,
            side: BoundSide::Lower,
            value,
            constant_unspecified: false,
            citation: citation.into(),
        }
    }

    pub fn upper(constant: &str, value: f64, citation: &str) -> Self {
        Self { side: BoundSide::Upper, ..Self::lower(constant, value, citation) }
    }

    pub fn at_p(mut self, p: f64) -> Self {
        self.p = Some(p);
        self
    }

    pub fn unspecified(mut self) -> Self {
        self.constant_unspecified = true;
        self
    }

    /// Whether an estimate (an upper bound on the optimum) is consistent with
    /// this prediction up to `slack`.
    pub fn admits(&self, estimate: f64, slack: f64) -> bool {
        match self.side {
            BoundSide::Lower => estimate >= self.value - slack,
            BoundSide::Upper => estimate <= self.value + slack,
        }
    }
}

/// Beckner predictions implied by a lower bound on ρ₀, plus an optional
/// explicit family `p ↦ explicit(p)`.
pub(crate) fn beckner_predictions(
    rho0_lower: f64,
    citation: &str,
    explicit: Option<(&dyn Fn(f64) -> f64, &str)>,
) -> Vec<Prediction> {
    PREDICTION_P_GRID
        .iter()
        .map(|&p| {
            let from_rho0 = big_k(p).map(|k| k * rho0_lower).unwrap_or(rho0_lower / 6.0);
            match explicit {
                Some((f, cite)) if f(p) > from_rho0 => Prediction::lower("alpha_p", f(p), cite).at_p(p),
                _ => Prediction::lower("alpha_p", from_rho0, citation).at_p(p),
            }
        })
        .collect()
}

/// A chain together with state coordinates and predicted constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelBundle {
    pub name: String,
    pub kernel: Kernel,
    /// Integer coordinates of each state (site values, one-line notation,
    /// occupation numbers, ...).
    pub coordinates: Vec<Vec<i64>>,
    pub predicted: Vec<Prediction>,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl ModelBundle {
    pub fn space(&self) -> &crate::space::FiniteSpace {
        self.kernel.space()
    }

    pub fn len(&self) -> usize {
        self.kernel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.is_empty()
    }

    /// Predictions that can be checked numerically.
    pub fn checkable(&self) -> impl Iterator<Item = &Prediction> {
        self.predicted.iter().filter(|p| !p.constant_unspecified)
    }

    /// Best predicted lower bound for `constant` (at `p` for `alpha_p`).
    pub fn lower_bound(&self, constant: &str, p: Option<f64>) -> Option<f64> {
        self.checkable()
            .filter(|q| q.side == BoundSide::Lower && q.constant == constant && q.p == p)
            .map(|q| q.value)
            .fold(None, |a: Option<f64>, v| Some(a.map_or(v, |a| a.max(v))))
    }

    /// Coordinate sum of each state.
    pub fn coordinate_sum(&self) -> Vec<f64> {
        self.coordinates.iter().map(|c| c.iter().sum::<i64>() as f64).collect()
    }
}

/// JSON model description: `{"model": "...", "params": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "snake_case")]
pub enum ModelSpec {
    Flip,
    RandomReversible { states: usize, seed: u64 },
    Glauber(ProductSpec),
    Ising { coupling: Vec<Vec<f64>>, field: Vec<f64> },
    Hardcore { vertices: usize, edges: Vec<(usize, usize)>, eta: f64 },
    HardcoreStar { leaves: usize, eta: f64 },
    Interchange { n: usize },
    Multislice { kappa: Vec<usize> },
    ZeroRange { particles: usize, sites: usize, rates: RateTable, destination: Vec<f64> },
    Erg { vertices: usize, gammas: Vec<f64>, graphs: Vec<Vec<(usize, usize)>> },
    ErgParams { gammas: Vec<f64>, edge_counts: Vec<usize> },
}

/// Result of building a [`ModelSpec`]: most models give a chain, the ERGM
/// parameter calculator gives only parameters.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Built {
    Bundle(Box<ModelBundle>),
    ErgParams(ErgParams),
}

impl ModelSpec {
    pub fn build(&self) -> Result<Built> {
        Ok(Built::Bundle(Box::new(match self {
            ModelSpec::Flip => flip_chain(),
            ModelSpec::RandomReversible { states, seed } => random_reversible_chain(*states, *seed)?,
            ModelSpec::Glauber(spec) => build_glauber(spec)?,
            ModelSpec::Ising { coupling, field } => build_ising(coupling, field)?,
            ModelSpec::Hardcore { vertices, edges, eta } => build_hardcore(*vertices, edges, *eta)?,
            ModelSpec::HardcoreStar { leaves, eta } => build_hardcore_star(*leaves, *eta)?,
            ModelSpec::Interchange { n } => build_interchange(*n)?,
            ModelSpec::Multislice { kappa } => build_multislice(kappa)?,
            ModelSpec::ZeroRange { particles, sites, rates, destination } => {
                build_zero_range(*particles, *sites, rates, destination)?
            }
            ModelSpec::Erg { vertices, gammas, graphs } => build_erg(*vertices, gammas, graphs)?,
            ModelSpec::ErgParams { gammas, edge_counts } => {
                return Ok(Built::ErgParams(erg_graph_delta(gammas, edge_counts)?));
            }
        })))
    }

    pub fn build_bundle(&self) -> Result<ModelBundle> {
        match self.build()? {
            Built::Bundle(b) => Ok(*b),
            Built::ErgParams(_) => Err(Error::InvalidArgument("erg_params describes parameters, not a chain".into())),
        }
    }
}

pub(crate) fn check_states(n: usize) -> Result<()> {
    if n > MAX_STATES {
        return Err(Error::TooLarge { states: n, limit: MAX_STATES });
    }
    Ok(())
}
