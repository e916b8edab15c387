//! Estimators for the optimal constants of functional inequalities on a
//! finite reversible chain.
//!
//! The spectral gap is solved exactly. The entropy-type constants are
//! infima of nonconvex ratios and are estimated by multi-start descent, so the
//! reported values are upper bounds on the true optima: every value comes
//! with a witness function attaining it (or a near-constant family whose
//! ratio converges to it).

mod objective;
mod optimizer;
mod spectral;
pub mod theorem;
pub mod verify;

use serde::Serialize;

pub use objective::{ratio_of, ConstantKind, DEGENERATE_DENOMINATOR};
pub use optimizer::{OptimizerOptions, StartKind};
pub use spectral::{spectral_gap, Spectral, DENSE_LIMIT};
pub use theorem::{big_k, big_k_detail, k_theta, BigK};
pub use verify::{
    verify_implication_diagram, verify_main_theorem, Check, DiagramOptions, Relation, VerificationReport,
};

use crate::dirichlet::Kernel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ConstantReport {
    pub kind: ConstantKind,
    pub symbol: String,
    pub value: f64,
    /// Function attaining `value` (f for mLSI/Beckner-p, g for LSI/Beckner-q,
    /// the eigenfunction for the gap). Normalized to mean or second moment 1.
    pub witness: Vec<f64>,
    /// Convergence certificate: relative improvement of the last descent
    /// step, or the eigen-residual for the gap.
    pub gap: f64,
    pub converged: bool,
    pub starts: usize,
    pub iterations: usize,
    /// Which candidate won: a start description or `near_constant`.
    pub source: String,
    /// Limit of the ratio along near-constant perturbations of the gap
    /// eigenfunction; the estimate never exceeds it.
    pub near_constant_limit: f64,
    pub method: String,
}

/// Estimates several constants of one kernel, sharing the spectral solve.
pub struct ConstantEstimator<'a> {
    kernel: &'a Kernel,
    opts: OptimizerOptions,
    spectral: Spectral,
}

impl<'a> ConstantEstimator<'a> {
    pub fn new(kernel: &'a Kernel, opts: OptimizerOptions) -> Result<Self> {
        if opts.starts == 0 {
            return Err(Error::InvalidArgument("at least one start is required".into()));
        }
        let spectral = spectral_gap(kernel, opts.seed)?;
        if !(spectral.gap > 0.0) {
            return Err(Error::Numerical(format!("nonpositive spectral gap {}", spectral.gap)));
        }
        Ok(Self { kernel, opts, spectral })
    }

    pub fn kernel(&self) -> &Kernel {
        self.kernel
    }

    pub fn options(&self) -> &OptimizerOptions {
        &self.opts
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn estimate(&self, kind: ConstantKind) -> Result<ConstantReport> {
        match kind {
            ConstantKind::Poincare => return Ok(self.poincare()),
            ConstantKind::BecknerP { p } if !(p > 1.0 && p <= 2.0) => {
                return Err(Error::Domain(format!("Beckner-p needs p in (1, 2], got {p}")));
            }
            ConstantKind::BecknerQ { q } if !(1.0..2.0).contains(&q) => {
                return Err(Error::Domain(format!("Beckner-q needs q in [1, 2), got {q}")));
            }
            _ => {}
        }
        let phi = &self.spectral.eigenfunction;
        let limit = kind.near_constant_limit(self.spectral.gap);
        let results = optimizer::run_starts(self.kernel, kind, phi, &self.opts);
        let best = optimizer::best(&results);
        let method = "multi-start preconditioned descent (Barzilai-Borwein, Armijo)".to_string();
        match best {
            Some(b) if b.value.is_finite() && b.value <= limit => {
                let mu = self.kernel.mu();
                let umax = b.u.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
                let mut w: Vec<f64> = b.u.iter().map(|v| (v - umax).exp()).collect();
                let norm = if kind.uses_square_root() {
                    crate::numeric::ksum(w.iter().zip(mu).map(|(x, m)| m * x * x)).sqrt()
                } else {
                    crate::numeric::kdot(&w, mu)
                };
                w.iter_mut().for_each(|x| *x /= norm);
                Ok(ConstantReport {
                    kind,
                    symbol: kind.symbol(),
                    value: b.value,
                    witness: w,
                    gap: b.last_improvement,
                    converged: b.converged,
                    starts: self.opts.starts,
                    iterations: b.iterations,
                    source: format!("start {} ({:?})", b.index, b.kind),
                    near_constant_limit: limit,
                    method,
                })
            }
            _ => {
                let amax = phi.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                let eps = 0.5 / amax.max(1e-300);
                let w: Vec<f64> = phi.iter().map(|v| 1.0 + eps * v).collect();
                Ok(ConstantReport {
                    kind,
                    symbol: kind.symbol(),
                    value: limit,
                    witness: w,
                    gap: 0.0,
                    converged: true,
                    starts: self.opts.starts,
                    iterations: results.iter().map(|r| r.iterations).max().unwrap_or(0),
                    source: "near_constant".into(),
                    near_constant_limit: limit,
                    method,
                })
            }
        }
    }

    pub fn poincare(&self) -> ConstantReport {
        let s = &self.spectral;
        ConstantReport {
            kind: ConstantKind::Poincare,
            symbol: ConstantKind::Poincare.symbol(),
            value: s.gap,
            witness: s.eigenfunction.clone(),
            gap: s.residual,
            converged: true,
            starts: 0,
            iterations: 0,
            source: "eigenfunction".into(),
            near_constant_limit: s.gap,
            method: s.method.into(),
        }
    }

    pub fn mlsi(&self) -> Result<ConstantReport> {
        self.estimate(ConstantKind::ModifiedLogSobolev)
    }

    pub fn lsi(&self) -> Result<ConstantReport> {
        self.estimate(ConstantKind::LogSobolev)
    }

    pub fn beckner_p(&self, p: f64) -> Result<ConstantReport> {
        self.estimate(ConstantKind::BecknerP { p })
    }

    pub fn beckner_q(&self, q: f64) -> Result<ConstantReport> {
        self.estimate(ConstantKind::BecknerQ { q })
    }
}

pub fn optimal_poincare(kernel: &Kernel) -> Result<ConstantReport> {
    let s = spectral_gap(kernel, 0)?;
    Ok(ConstantEstimator { kernel, opts: OptimizerOptions::default(), spectral: s }.poincare())
}

pub fn optimal_mlsi(kernel: &Kernel, opts: &OptimizerOptions) -> Result<ConstantReport> {
    ConstantEstimator::new(kernel, opts.clone())?.mlsi()
}

pub fn optimal_lsi(kernel: &Kernel, opts: &OptimizerOptions) -> Result<ConstantReport> {
    ConstantEstimator::new(kernel, opts.clone())?.lsi()
}

pub fn optimal_beckner_p(kernel: &Kernel, p: f64, opts: &OptimizerOptions) -> Result<ConstantReport> {
    ConstantEstimator::new(kernel, opts.clone())?.beckner_p(p)
}

pub fn optimal_beckner_q(kernel: &Kernel, q: f64, opts: &OptimizerOptions) -> Result<ConstantReport> {
    ConstantEstimator::new(kernel, opts.clone())?.beckner_q(q)
}
