//! Explicit constants in the passage from the modified log-Sobolev inequality
//! to Beckner inequalities: α_p ≥ K_p · ρ₀ with
//!
//! k(p, θ) = (1 − 2((1+θ)^p − 1) / (p(p−1)(1−θ)²)) · θ^{p−1} / (e^{p−1}(1+θ)^{p−1}),
//! K_p = max(1 − 1/p, (p/2) · sup_{θ∈(0,1)} k(p, θ)).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::golden_max;

/// Number of grid points used to bracket the supremum over θ.
pub const THETA_GRID: usize = 10_001;
const THETA_EDGE: f64 = 1e-6;

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::Domain(format!("p must lie in (1, 2], got {p}")));
    }
    Ok(())
}

pub fn k_theta(p: f64, theta: f64) -> Result<f64> {
    check_p(p)?;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!("theta must lie in (0, 1), got {theta}")));
    }
    Ok(k_raw(p, theta))
}

fn k_raw(p: f64, theta: f64) -> f64 {
    let first = 1.0 - 2.0 * ((1.0 + theta).powf(p) - 1.0) / (p * (p - 1.0) * (1.0 - theta).powi(2));
    let second = (theta / (std::f64::consts::E * (1.0 + theta))).powf(p - 1.0);
    first * second
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BigK {
    pub p: f64,
    pub value: f64,
    /// Maximizer of k(p, ·) and the value (p/2)·k there.
    pub theta_star: f64,
    pub scaled_sup: f64,
    /// True when the 1 − 1/p branch is the larger one.
    pub trivial_branch: bool,
}

/// K_p with the supremum taken over a uniform grid on (1e-6, 1 − 1e-6)
/// followed by golden-section refinement inside the winning grid cell.
pub fn big_k(p: f64) -> Result<f64> {
    Ok(big_k_detail(p)?.value)
}

pub fn big_k_detail(p: f64) -> Result<BigK> {
    check_p(p)?;
    let h = (1.0 - 2.0 * THETA_EDGE) / (THETA_GRID - 1) as f64;
    let theta = |i: usize| THETA_EDGE + h * i as f64;
    let (imax, _) = (0..THETA_GRID).map(|i| (i, k_raw(p, theta(i)))).fold((0, f64::NEG_INFINITY), |acc, (i, v)| {
        if v > acc.1 {
            (i, v)
        } else {
            acc
        }
    });
    let lo = theta(imax.saturating_sub(1));
    let hi = theta((imax + 1).min(THETA_GRID - 1));
    let (t_star, k_star) = golden_max(|t| k_raw(p, t), lo, hi, 1e-14);
    let (t_star, k_star) =
        if k_star >= k_raw(p, theta(imax)) { (t_star, k_star) } else { (theta(imax), k_raw(p, theta(imax))) };
    let scaled = 0.5 * p * k_star;
    let trivial = 1.0 - 1.0 / p;
    Ok(BigK {
        p,
        value: scaled.max(trivial),
        theta_star: t_star,
        scaled_sup: scaled,
        trivial_branch: trivial >= scaled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((k_theta(1.2, 0.01).unwrap() - 0.29207).abs() < 1e-4);
        assert!(k_theta(1.001, 1e-6).unwrap() > 0.98);
        assert!(k_theta(1.0, 0.5).is_err());
        assert!(k_theta(1.5, 1.0).is_err());
    }

    #[test]
    fn p_two_uses_trivial_branch() {
        let k = big_k_detail(2.0).unwrap();
        assert!((k.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn k_never_exceeds_one() {
        for &p in &[1.01, 1.3, 1.7, 2.0] {
            for i in 1..100 {
                assert!(k_theta(p, i as f64 / 100.0).unwrap() <= 1.0);
            }
        }
    }
}
