//! Multi-start projected gradient descent for the ratio objectives.
//!
//! Each start runs a μ-preconditioned descent with Barzilai–Borwein steps and
//! an Armijo backtracking guard. Start `i` is a fixed function of
//! `(seed, i)`, so the start set for N starts is a prefix of the set for
//! M > N starts and adding starts can only lower the reported value.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::objective::{ConstantKind, Objective};
use crate::dirichlet::Kernel;
use crate::exec::{map_indexed, stream_id, stream_rng, ExecMode};

const ARMIJO_C: f64 = 1e-4;
const STALL_SWEEPS: usize = 3;
const LOCALIZED_STARTS: usize = 4;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub starts: usize,
    pub max_iters: usize,
    /// Relative improvement below which an iteration counts as stalled.
    pub tol: f64,
    pub seed: u64,
    pub exec: ExecMode,
    /// Box bound on the centered log-variable.
    pub u_bound: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self { starts: 32, max_iters: 2000, tol: 1e-10, seed: 0, exec: ExecMode::Parallel, u_bound: 60.0 }
    }
}

/// Where a start came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    Eigenfunction,
    Localized { state: usize },
    Gaussian { sigma: f64 },
}

#[derive(Debug, Clone)]
pub(crate) struct StartResult {
    pub index: usize,
    pub kind: StartKind,
    pub value: f64,
    pub u: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub last_improvement: f64,
}

pub(crate) fn start_plan(
    kernel: &Kernel,
    eigenfunction: &[f64],
    opts: &OptimizerOptions,
) -> Vec<(StartKind, Vec<f64>)> {
    let n = kernel.len();
    let mu = kernel.mu();
    let mut plan = Vec::with_capacity(opts.starts);
    let amax = eigenfunction.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-300);
    plan.push((StartKind::Eigenfunction, eigenfunction.iter().map(|v| v / amax).collect()));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| mu[a].total_cmp(&mu[b]).then(a.cmp(&b)));
    for &x in order.iter().take(LOCALIZED_STARTS.min(n)) {
        let mut u = vec![0.0; n];
        u[x] = (1.0 / mu[x]).ln().min(opts.u_bound);
        plan.push((StartKind::Localized { state: x }, u));
    }
    let sigmas = [0.5, 1.0, 2.0, 4.0];
    let mut k = 0usize;
    while plan.len() < opts.starts {
        let sigma = sigmas[k % sigmas.len()];
        let mut rng = stream_rng(opts.seed, stream_id(0x0b7, k as u64));
        let u: Vec<f64> = (0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect();
        plan.push((StartKind::Gaussian { sigma }, u));
        k += 1;
    }
    plan.truncate(opts.starts);
    plan
}

fn project(u: &mut [f64], mu: &[f64], bound: f64) {
    let mean = crate::numeric::kdot(mu, u);
    for v in u.iter_mut() {
        *v = (*v - mean).clamp(-bound, bound);
    }
}

fn mu_dot(a: &[f64], b: &[f64], mu: &[f64]) -> f64 {
    crate::numeric::ksum(a.iter().zip(b).zip(mu).map(|((x, y), m)| x * y * m))
}

pub(crate) fn descend(
    kernel: &Kernel,
    kind: ConstantKind,
    index: usize,
    start_kind: StartKind,
    start: Vec<f64>,
    opts: &OptimizerOptions,
) -> Option<StartResult> {
    let n = kernel.len();
    let mu = kernel.mu();
    let mut obj = Objective::new(kernel, kind);
    let mut u = start;
    project(&mut u, mu, opts.u_bound);
    let mut grad = vec![0.0; n];
    let mut value = obj.value_grad(&u, &mut grad)?;
    let mut trial = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let dmax = |d: &[f64]| d.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    for x in 0..n {
        dir[x] = -grad[x] / mu[x];
    }
    let mut step = 1.0 / dmax(&dir).max(1e-300);
    let mut stalled = 0usize;
    let mut last_improvement = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        iterations += 1;
        for x in 0..n {
            dir[x] = -grad[x] / mu[x];
        }
        if dmax(&dir) == 0.0 {
            converged = true;
            last_improvement = 0.0;
            break;
        }
        let mut accepted = None;
        let mut t = step;
        for _ in 0..60 {
            for x in 0..n {
                trial[x] = u[x] + t * dir[x];
            }
            project(&mut trial, mu, opts.u_bound);
            let decrease: f64 =
                crate::numeric::ksum(grad.iter().zip(trial.iter().zip(&u)).map(|(g, (a, b))| g * (a - b)));
            if let Some(v) = obj.value_grad(&trial, &mut trial_grad) {
                if v <= value + ARMIJO_C * decrease && v.is_finite() {
                    accepted = Some(v);
                    break;
                }
            }
            t *= 0.5;
        }
        let Some(new_value) = accepted else {
            converged = true;
            last_improvement = 0.0;
            break;
        };
        // Barzilai–Borwein step in the μ metric.
        let s: Vec<f64> = trial.iter().zip(&u).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let ss = mu_dot(&s, &s, mu);
        let sy = crate::numeric::kdot(&s, &y);
        step = if sy > 0.0 && ss > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { (2.0 * t).min(1e12) };
        let improvement = (value - new_value) / value.abs().max(1e-300);
        std::mem::swap(&mut u, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        value = new_value;
        last_improvement = improvement;
        if improvement < opts.tol {
            stalled += 1;
            if stalled >= STALL_SWEEPS {
                converged = true;
                break;
            }
        } else {
            stalled = 0;
        }
    }
    Some(StartResult { index, kind: start_kind, value, u, iterations, converged, last_improvement })
}

/// Runs every start and returns all finished results in start order.
pub(crate) fn run_starts(
    kernel: &Kernel,
    kind: ConstantKind,
    eigenfunction: &[f64],
    opts: &OptimizerOptions,
) -> Vec<StartResult> {
    let plan = start_plan(kernel, eigenfunction, opts);
    let results = map_indexed(opts.exec, plan.len(), |i| {
        let (k, u) = plan[i].clone();
        descend(kernel, kind, i, k, u, opts)
    });
    results.into_iter().flatten().collect()
}

/// Deterministic argmin: smallest value, ties to the smallest start index.
pub(crate) fn best(results: &[StartResult]) -> Option<&StartResult> {
    results.iter().min_by(|a, b| a.value.total_cmp(&b.value).then(a.index.cmp(&b.index)))
}
