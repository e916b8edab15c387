//! Moment inequalities driven by Beckner-type inequalities.
//!
//! If α_p ≥ a(p−1)^s for all p ∈ (1, 2], then for r ≥ 2
//!
//! ‖(f − μf)₊‖_r² ≤ (1 − 2^{−(s+1)}) (r^{s+1}/a) κ(s) ‖Γ₊(f)‖_{r/2}
//!
//! ‖f − μf‖_r²   ≤ (r^{s+1}/a) κ(s) ‖Γ(f)‖_{r/2}
//!
//! with κ(s) = 1/(1 − e^{−(s+1)/2}). The checks here evaluate both sides
//! exactly on an enumerated space.

mod symmetric;
mod tail;

pub use symmetric::{
    hoeffding_excess_moment, hoeffding_supremum_bound, hoeffding_z, sampling_without_replacement_matrices,
    symmetric_group_constant, symmetric_group_moment_check, HoeffdingBound, SymmetricGroupReport,
};
pub(crate) use tail::replica_ranges;
pub use tail::{moment_tail_bound, monte_carlo_tail_compare, tail_compare_on_space, McOptions, TailReport};

use serde::{Deserialize, Serialize};

use crate::dirichlet::Kernel;
use crate::error::{Error, Result};
use crate::numeric::{ksum, pos};

/// Margins above −MARGIN_TOLERANCE · max(1, |rhs|) count as nonnegative.
pub const MARGIN_TOLERANCE: f64 = 1e-10;

/// κ(s) = (1 − e^{−(s+1)/2})^{−1}.
pub fn kappa(s: f64) -> Result<f64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("kappa needs s >= 0, got {s}")));
    }
    Ok(1.0 / -(-(s + 1.0) / 2.0).exp_m1())
}

/// Lower envelope α_p ≥ a (p − 1)^s, optionally only for p ∈ [p0, 2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BecknerRegime {
    pub a: f64,
    pub s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
}

impl BecknerRegime {
    pub fn new(a: f64, s: f64) -> Result<Self> {
        let r = BecknerRegime { a, s, p0: None };
        r.validate()?;
        Ok(r)
    }

    /// Regime known only for p ∈ [p0, 2]; moments are then limited to
    /// r ≤ p0/(p0 − 1).
    pub fn with_floor(mut self, p0: f64) -> Result<Self> {
        if !(p0 > 1.0 && p0 <= 2.0) {
            return Err(Error::Domain(format!("p0 must lie in (1, 2], got {p0}")));
        }
        self.p0 = Some(p0);
        Ok(self)
    }

    /// Regime implied by a modified log-Sobolev constant: α_p ≥ ρ₀/6.
    pub fn from_mlsi(rho0: f64) -> Result<Self> {
        Self::new(rho0 / 6.0, 0.0)
    }

    /// Regime implied by a spectral gap: α_p ≥ λ(p − 1).
    pub fn from_gap(lambda: f64) -> Result<Self> {
        Self::new(lambda, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::Domain(format!("regime needs a > 0, got {}", self.a)));
        }
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(Error::Domain(format!("regime needs s >= 0, got {}", self.s)));
        }
        Ok(())
    }

    /// Non-fatal remarks (s outside the informative range [0, 1]).
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.s > 1.0 {
            w.push(format!("s = {} > 1: a Poincare inequality already gives s = 1", self.s));
        }
        w
    }

    /// Largest admissible moment order.
    pub fn max_r(&self) -> f64 {
        match self.p0 {
            Some(p0) if p0 < 2.0 => p0 / (p0 - 1.0),
            Some(_) => 2.0,
            None => f64::INFINITY,
        }
    }

    /// (r^{s+1}/a) κ(s).
    pub fn two_sided_factor(&self, r: f64) -> f64 {
        r.powf(self.s + 1.0) / self.a * kappa(self.s).expect("validated regime")
    }

    /// (1 − 2^{−(s+1)}) (r^{s+1}/a) κ(s).
    pub fn one_sided_factor(&self, r: f64) -> f64 {
        (1.0 - (-(self.s + 1.0)).exp2()) * self.two_sided_factor(r)
    }

    fn check_r(&self, r_values: &[f64]) -> Result<()> {
        if r_values.is_empty() {
            return Err(Error::InvalidArgument("no moment orders given".into()));
        }
        let max = self.max_r();
        for &r in r_values {
            if !(r >= 2.0) || !r.is_finite() {
                return Err(Error::Domain(format!("moment order must satisfy r >= 2, got {r}")));
            }
            if r > max * (1.0 + 1e-12) {
                return Err(Error::Domain(format!(
                    "r = {r} exceeds p0/(p0-1) = {max}: a Beckner inequality on [p0, 2] only controls moments up to that order"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

/// Per-r comparison lhs ≤ rhs with margin = rhs − lhs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentCheckReport {
    pub label: String,
    pub r_values: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub margin: Vec<f64>,
    pub method: Method,
    pub sample_count: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lhs_stderr: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs_stderr: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<BecknerRegime>,
    pub passed: bool,
}

impl MomentCheckReport {
    pub(crate) fn exact(label: &str, r_values: &[f64], lhs: Vec<f64>, rhs: Vec<f64>, sample_count: usize) -> Self {
        let margin: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| r - l).collect();
        let passed = margin.iter().zip(&rhs).all(|(m, r)| *m >= -MARGIN_TOLERANCE * r.abs().max(1.0));
        MomentCheckReport {
            label: label.into(),
            r_values: r_values.to_vec(),
            lhs,
            rhs,
            margin,
            method: Method::Exact,
            sample_count,
            seed: 0,
            lhs_stderr: None,
            rhs_stderr: None,
            regime: None,
            passed,
        }
    }

    pub fn min_margin(&self) -> f64 {
        self.margin.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// CSV with one row per r.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,r,lhs,rhs,margin\n");
        for i in 0..self.r_values.len() {
            out.push_str(&format!(
                "{},{},{:e},{:e},{:e}\n",
                self.label, self.r_values[i], self.lhs[i], self.rhs[i], self.margin[i]
            ));
        }
        out
    }
}

/// Upper-tail (f) and lower-tail (−f) one-sided checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OneSidedMoments {
    pub upper: MomentCheckReport,
    pub lower: MomentCheckReport,
}

impl OneSidedMoments {
    pub fn passed(&self) -> bool {
        self.upper.passed && self.lower.passed
    }

    pub fn min_margin(&self) -> f64 {
        self.upper.min_margin().min(self.lower.min_margin())
    }
}

/// Two-sided check plus the Poincaré inequality Var f ≤ Ɛ(f, f)/a implied by
/// α_2 ≥ a, which is sharper than the r = 2 moment bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoSidedMoments {
    pub report: MomentCheckReport,
    pub variance: f64,
    pub poincare_rhs: f64,
    pub poincare_passed: bool,
}

impl TwoSidedMoments {
    pub fn passed(&self) -> bool {
        self.report.passed && self.poincare_passed
    }
}

fn centered(kernel: &Kernel, f: &[f64]) -> Result<Vec<f64>> {
    if f.len() != kernel.len() {
        return Err(Error::DimensionMismatch { expected: kernel.len(), got: f.len() });
    }
    let m = kernel.space().expectation(f)?;
    Ok(f.iter().map(|v| v - m).collect())
}

fn one_sided(
    kernel: &Kernel,
    f: &[f64],
    regime: &BecknerRegime,
    r_values: &[f64],
    label: &str,
) -> Result<MomentCheckReport> {
    let space = kernel.space();
    let c = centered(kernel, f)?;
    let plus: Vec<f64> = c.iter().map(|v| pos(*v)).collect();
    let gp = kernel.gamma_plus(f)?;
    let lhs: Vec<f64> = r_values.iter().map(|&r| space.lr_norm_unchecked(&plus, r).powi(2)).collect();
    let rhs: Vec<f64> =
        r_values.iter().map(|&r| regime.one_sided_factor(r) * space.lr_norm_unchecked(&gp, r / 2.0)).collect();
    let mut rep = MomentCheckReport::exact(label, r_values, lhs, rhs, space.len());
    rep.regime = Some(*regime);
    Ok(rep)
}

/// Exact check of the one-sided bounds for f (upper tail) and −f (lower
/// tail) on the kernel's state space.
pub fn check_onesided_moments(
    kernel: &Kernel,
    f: &[f64],
    regime: &BecknerRegime,
    r_values: &[f64],
) -> Result<OneSidedMoments> {
    regime.validate()?;
    regime.check_r(r_values)?;
    let neg: Vec<f64> = f.iter().map(|v| -v).collect();
    Ok(OneSidedMoments {
        upper: one_sided(kernel, f, regime, r_values, "upper")?,
        lower: one_sided(kernel, &neg, regime, r_values, "lower")?,
    })
}

/// Exact check of ‖f − μf‖_r² ≤ (r^{s+1}/a) κ(s) ‖Γ(f)‖_{r/2}.
pub fn check_twosided_moments(
    kernel: &Kernel,
    f: &[f64],
    regime: &BecknerRegime,
    r_values: &[f64],
) -> Result<TwoSidedMoments> {
    regime.validate()?;
    regime.check_r(r_values)?;
    let space = kernel.space();
    let c = centered(kernel, f)?;
    let gamma = kernel.carre_du_champ(f, f)?;
    let lhs: Vec<f64> = r_values.iter().map(|&r| space.lr_norm_unchecked(&c, r).powi(2)).collect();
    let rhs: Vec<f64> =
        r_values.iter().map(|&r| regime.two_sided_factor(r) * space.lr_norm_unchecked(&gamma, r / 2.0)).collect();
    let mut report = MomentCheckReport::exact("two_sided", r_values, lhs, rhs, space.len());
    report.regime = Some(*regime);
    let variance = ksum(space.mu().iter().zip(&c).map(|(w, v)| w * v * v));
    let poincare_rhs = kernel.dirichlet_form(f, f)? / regime.a;
    let poincare_passed = variance <= poincare_rhs + MARGIN_TOLERANCE * poincare_rhs.max(1.0);
    Ok(TwoSidedMoments { report, variance, poincare_rhs, poincare_passed })
}

/// Comparison curve ρ₁^{−1}(r − 3/2)‖Γ(f)‖_{r/2} for the squared two-sided
/// moment under a log-Sobolev inequality. Reported, not verified.
pub fn aida_stroock_curve(kernel: &Kernel, f: &[f64], rho1: f64, r_values: &[f64]) -> Result<Vec<f64>> {
    if !(rho1 > 0.0) {
        return Err(Error::Domain(format!("rho1 must be positive, got {rho1}")));
    }
    let gamma = kernel.carre_du_champ(f, f)?;
    Ok(r_values.iter().map(|&r| (r - 1.5) / rho1 * kernel.space().lr_norm_unchecked(&gamma, r / 2.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{build_glauber, flip_chain, ProductSpec};

    #[test]
    fn kappa_values() {
        assert!((kappa(0.0).unwrap() - 2.541494082536798).abs() < 1e-12);
        assert!((kappa(1.0).unwrap() - 1.5819767068693265).abs() < 1e-12);
        let mut last = f64::INFINITY;
        for i in 0..=40 {
            let k = kappa(i as f64 * 0.05).unwrap();
            assert!(k < last);
            last = k;
        }
        assert!(kappa(-0.1).is_err());
    }

    #[test]
    fn constant_function() {
        let k = flip_chain().kernel;
        let reg = BecknerRegime::new(1.0, 0.0).unwrap();
        let r = check_onesided_moments(&k, &[3.0, 3.0], &reg, &[2.0, 4.0]).unwrap();
        assert!(r.passed());
        assert!(r.upper.lhs.iter().chain(&r.upper.rhs).all(|v| *v == 0.0));
        let t = check_twosided_moments(&k, &[3.0, 3.0], &reg, &[2.0]).unwrap();
        assert_eq!(t.report.margin, vec![0.0]);
    }

    #[test]
    fn bernoulli_cube_sum() {
        let b = build_glauber(&ProductSpec::factorized(vec![vec![0.5, 0.5]; 8])).unwrap();
        let f = b.coordinate_sum();
        let reg = BecknerRegime::from_mlsi(1.0).unwrap();
        let rs: Vec<f64> = (2..=10).map(|r| r as f64).collect();
        let one = check_onesided_moments(&b.kernel, &f, &reg, &rs).unwrap();
        assert!(one.passed(), "{one:?}");
        let two = check_twosided_moments(&b.kernel, &f, &reg, &rs).unwrap();
        assert!(two.passed());
        for w in two.report.lhs.windows(2).chain(two.report.rhs.windows(2)) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn poincare_regime_on_flip() {
        let k = flip_chain().kernel;
        let reg = BecknerRegime::from_gap(2.0).unwrap();
        let t = check_twosided_moments(&k, &[0.3, -1.7], &reg, &[2.0, 3.0, 6.0]).unwrap();
        assert!(t.passed());
        assert!((t.variance - t.poincare_rhs).abs() < 1e-12);
    }

    #[test]
    fn floor_limits_order() {
        let reg = BecknerRegime::new(1.0, 0.0).unwrap().with_floor(1.5).unwrap();
        assert_eq!(reg.max_r(), 3.0);
        let k = flip_chain().kernel;
        assert!(check_twosided_moments(&k, &[0.0, 1.0], &reg, &[2.0, 3.0]).is_ok());
        assert!(check_twosided_moments(&k, &[0.0, 1.0], &reg, &[4.0]).is_err());
    }

    #[test]
    fn bad_inputs() {
        assert!(BecknerRegime::new(0.0, 0.0).is_err());
        let k = flip_chain().kernel;
        let reg = BecknerRegime::new(1.0, 0.0).unwrap();
        assert!(check_twosided_moments(&k, &[0.0, 1.0, 2.0], &reg, &[2.0]).is_err());
        assert!(check_twosided_moments(&k, &[0.0, 1.0], &reg, &[1.5]).is_err());
    }
}
