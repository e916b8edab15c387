//! Checks of the relations between estimated constants.
//!
//! Estimates are upper bounds on the optimal constants, so a relation
//! `lhs ≥ rhs` is only tested up to a slack of max(1e-6, rel · |rhs|).

use serde::Serialize;

use super::{big_k_detail, ConstantEstimator, ConstantReport, OptimizerOptions};
use crate::dirichlet::Kernel;
use crate::error::{Error, Result};
use crate::numeric::slack;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "relation", rename_all = "snake_case")]
pub enum Relation {
    /// lhs ≥ rhs − slack
    AtLeast,
    /// lhs ≤ rhs + slack
    AtMost,
    /// |lhs − rhs| ≤ rel_tol · |rhs|
    Approx { rel_tol: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
    pub slack: f64,
    /// Positive when the check passes with room to spare.
    pub margin: f64,
    pub passed: bool,
    pub reference: String,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        lhs: f64,
        rhs: f64,
        relation: Relation,
        rel_slack: f64,
        reference: &str,
    ) -> Self {
        let (s, margin) = match relation {
            Relation::AtLeast => {
                let s = slack(rhs, rel_slack);
                (s, lhs - rhs + s)
            }
            Relation::AtMost => {
                let s = slack(rhs, rel_slack);
                (s, rhs - lhs + s)
            }
            Relation::Approx { rel_tol } => {
                let s = rel_tol * rhs.abs();
                (s, s - (lhs - rhs).abs())
            }
        };
        Self {
            name: name.into(),
            lhs,
            rhs,
            relation,
            slack: s,
            margin,
            passed: margin >= 0.0 && lhs.is_finite() && rhs.is_finite(),
            reference: reference.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub constants: Vec<ConstantReport>,
    pub passed: bool,
}

impl VerificationReport {
    fn from_parts(checks: Vec<Check>, constants: Vec<ConstantReport>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self { checks, constants, passed }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Linear extrapolation to the endpoint from values at distances `d1 > d2`.
fn extrapolate(v1: f64, d1: f64, v2: f64, d2: f64) -> f64 {
    v2 + (v2 - v1) * d2 / (d1 - d2)
}

/// Exponents close to p = 1 (resp. q = 2) used for the limiting relations.
pub const P_NEAR_ONE: [f64; 2] = [1.01, 1.001];
pub const Q_NEAR_TWO: [f64; 2] = [1.99, 1.999];

/// α_p ≥ K_p ρ₀ and α_p ≥ ρ₀/6 on `p_grid`, plus 2·lim_{p→1} α_p ≈ ρ₀ (5%).
pub fn verify_main_theorem(
    kernel: &Kernel,
    p_grid: &[f64],
    opts: &OptimizerOptions,
    rel_slack: f64,
) -> Result<VerificationReport> {
    let est = ConstantEstimator::new(kernel, opts.clone())?;
    let rho0 = est.mlsi()?;
    let mut checks = Vec::new();
    let mut constants = vec![rho0.clone()];
    for &p in p_grid {
        let alpha = est.beckner_p(p)?;
        let k = big_k_detail(p)?;
        checks.push(Check::new(
            format!("alpha_{p} >= K_p * rho0"),
            alpha.value,
            k.value * rho0.value,
            Relation::AtLeast,
            rel_slack,
            "Beckner constants from the modified log-Sobolev constant: alpha_p >= K_p rho0",
        ));
        checks.push(Check::new(
            format!("alpha_{p} >= rho0 / 6"),
            alpha.value,
            rho0.value / 6.0,
            Relation::AtLeast,
            rel_slack,
            "uniform lower bound inf_p K_p >= 1/6",
        ));
        constants.push(alpha);
    }
    let a1 = est.beckner_p(P_NEAR_ONE[0])?;
    let a2 = est.beckner_p(P_NEAR_ONE[1])?;
    let lim = extrapolate(a1.value, P_NEAR_ONE[0] - 1.0, a2.value, P_NEAR_ONE[1] - 1.0);
    checks.push(Check::new(
        "2 * lim_{p->1} alpha_p = rho0",
        2.0 * lim,
        rho0.value,
        Relation::Approx { rel_tol: 0.05 },
        rel_slack,
        "Beckner constants converge to half the modified log-Sobolev constant as p -> 1",
    ));
    constants.push(a1);
    constants.push(a2);
    Ok(VerificationReport::from_parts(checks, constants))
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagramOptions {
    pub p_grid: Vec<f64>,
    pub q_grid: Vec<f64>,
    pub rel_slack: f64,
}

impl Default for DiagramOptions {
    fn default() -> Self {
        Self { p_grid: vec![1.05, 1.2, 1.5, 2.0], q_grid: vec![1.0, 1.25, 1.5, 1.75], rel_slack: 0.01 }
    }
}

/// The quantitative arrows between the Poincaré, log-Sobolev, modified
/// log-Sobolev and Beckner constants, plus monotonicity of (p/(p−1))α_p.
pub fn verify_implication_diagram(
    kernel: &Kernel,
    diagram: &DiagramOptions,
    opts: &OptimizerOptions,
) -> Result<VerificationReport> {
    if diagram.p_grid.is_empty() || diagram.q_grid.is_empty() {
        return Err(Error::InvalidArgument("p and q grids must be nonempty".into()));
    }
    let s = diagram.rel_slack;
    let est = ConstantEstimator::new(kernel, opts.clone())?;
    let lambda = est.poincare();
    let rho0 = est.mlsi()?;
    let rho1 = est.lsi()?;
    let mut checks = Vec::new();
    let mut constants = vec![lambda.clone(), rho0.clone(), rho1.clone()];

    checks.push(Check::new(
        "rho0 >= 4 rho1",
        rho0.value,
        4.0 * rho1.value,
        Relation::AtLeast,
        s,
        "log-Sobolev implies modified log-Sobolev with rho0 >= 4 rho1",
    ));
    checks.push(Check::new(
        "lambda >= rho0 / 2",
        lambda.value,
        rho0.value / 2.0,
        Relation::AtLeast,
        s,
        "modified log-Sobolev implies Poincare with lambda >= rho0/2",
    ));

    let mut p_sorted = diagram.p_grid.clone();
    p_sorted.sort_by(f64::total_cmp);
    p_sorted.dedup();
    let mut alphas = Vec::new();
    for &p in &p_sorted {
        let a = est.beckner_p(p)?;
        checks.push(Check::new(
            format!("lambda >= alpha_{p}"),
            lambda.value,
            a.value,
            Relation::AtLeast,
            s,
            "Beckner implies Poincare with lambda >= alpha_p",
        ));
        alphas.push((p, a.value));
        constants.push(a);
    }
    for w in alphas.windows(2) {
        let (p1, a1) = w[0];
        let (p2, a2) = w[1];
        checks.push(Check::new(
            format!("(p/(p-1)) alpha_p nonincreasing on [{p1}, {p2}]"),
            p2 / (p2 - 1.0) * a2,
            p1 / (p1 - 1.0) * a1,
            Relation::AtMost,
            s,
            "p -> (p/(p-1)) alpha_p is nonincreasing on (1, 2]",
        ));
    }

    for &q in &diagram.q_grid {
        let b = est.beckner_q(q)?;
        checks.push(Check::new(
            format!("beta_{q} >= q rho1"),
            b.value,
            q * rho1.value,
            Relation::AtLeast,
            s,
            "log-Sobolev implies q-Beckner with beta_q >= q rho1",
        ));
        let a = est.beckner_p(2.0 / q)?;
        checks.push(Check::new(
            format!("alpha_{} >= beta_{q}", 2.0 / q),
            a.value,
            b.value,
            Relation::AtLeast,
            s,
            "q-Beckner implies p-Beckner at p = 2/q",
        ));
        constants.push(b);
        constants.push(a);
    }

    let a1 = est.beckner_p(P_NEAR_ONE[0])?;
    let a2 = est.beckner_p(P_NEAR_ONE[1])?;
    let alpha_lim = extrapolate(a1.value, P_NEAR_ONE[0] - 1.0, a2.value, P_NEAR_ONE[1] - 1.0);
    checks.push(Check::new(
        "rho0 >= 2 lim_{p->1} alpha_p",
        rho0.value,
        2.0 * alpha_lim,
        Relation::AtLeast,
        s,
        "Beckner near p = 1 implies modified log-Sobolev",
    ));
    let b1 = est.beckner_q(Q_NEAR_TWO[0])?;
    let b2 = est.beckner_q(Q_NEAR_TWO[1])?;
    let beta_lim = extrapolate(b1.value, 2.0 - Q_NEAR_TWO[0], b2.value, 2.0 - Q_NEAR_TWO[1]);
    checks.push(Check::new(
        "rho1 >= lim_{q->2} beta_q / 2",
        rho1.value,
        beta_lim / 2.0,
        Relation::AtLeast,
        s,
        "q-Beckner near q = 2 implies log-Sobolev",
    ));
    constants.extend([a1, a2, b1, b2]);
    Ok(VerificationReport::from_parts(checks, constants))
}
