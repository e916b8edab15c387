use serde::{Deserialize, Serialize};

use super::{poisson_constant, replicate, LibraryFunctional, PoissonFunctional, Window};
use crate::error::{Error, Result};
use crate::exec::{stream_id, stream_rng};
use crate::moments::{McOptions, TailReport};
use crate::numeric::{ksum, mean_stderr, pos, wilson_interval};

const USTAT_STREAM: u32 = 0x057;
const EMPIRICAL_STREAM: u32 = 0xe3b;
const CALIBRATION_SALT: u64 = 0x5eed_ca1b;
/// Normal quantile used for the upper confidence limits during calibration.
const CALIBRATION_Z: f64 = 3.0;

/// Upper bound on ‖(F − EF)₊‖_r for F ≥ 0 with Γ₊(F) ≤ F^α G:
/// 2D√r (EF)^{α/2} g^{1−α/2} + (2D)^{2/(2−α)} r^{1/(2−α)} g, where
/// g = ‖G^{1/(2−α)}‖_r.
pub fn self_bounded_moment_bound(ef: f64, g_norm: f64, alpha: f64, r: f64) -> Result<f64> {
    if !(0.0..2.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must lie in [0, 2), got {alpha}")));
    }
    if !(r >= 2.0) || !r.is_finite() {
        return Err(Error::Domain(format!("moment order must satisfy r >= 2, got {r}")));
    }
    if !(ef >= 0.0) || !(g_norm >= 0.0) || !ef.is_finite() || !g_norm.is_finite() {
        return Err(Error::Domain("mean and norm must be finite and nonnegative".into()));
    }
    let d = poisson_constant();
    let e = 2.0 / (2.0 - alpha);
    Ok(2.0 * d * r.sqrt() * ef.powf(alpha / 2.0) * g_norm.powf(1.0 - alpha / 2.0)
        + (2.0 * d).powf(e) * r.powf(e / 2.0) * g_norm)
}

/// 2 exp(−min(t²/(C′m²a(EU)^α), t^{2−α}/(C′m²a))).
pub fn u_stat_tail_bound(eu: f64, m: usize, a: f64, alpha: f64, t: f64, c_prime: f64) -> Result<f64> {
    if !(0.0..2.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must lie in [0, 2), got {alpha}")));
    }
    if m == 0 || !(eu >= 0.0) || !(a >= 0.0) || !(t >= 0.0) || !(c_prime > 0.0) {
        return Err(Error::Domain("need m >= 1, EU >= 0, a >= 0, t >= 0 and C' > 0".into()));
    }
    if t == 0.0 {
        return Ok(2.0);
    }
    let scale = c_prime * (m * m) as f64 * a;
    if scale == 0.0 {
        return Ok(0.0);
    }
    let x = (t * t / (scale * eu.powf(alpha))).min(t.powf(2.0 - alpha) / scale);
    Ok(2.0 * (-x).exp())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UStatTailReport {
    pub label: String,
    pub m: usize,
    pub alpha: f64,
    /// Largest Σ_i S_i² / U^α seen, S_i the local sums of the kernel.
    pub a: f64,
    pub mean: f64,
    pub c_prime: f64,
    /// C′ was fitted on an independent calibration run.
    pub calibrated: bool,
    pub calibration_seed: Option<u64>,
    pub tail: TailReport,
}

struct UStatRun {
    values: Vec<f64>,
    mean: f64,
    a: f64,
}

fn ustat_run(f: &LibraryFunctional, m: usize, alpha: f64, window: &Window, opts: &McOptions) -> UStatRun {
    let rows = replicate(window, opts, USTAT_STREAM, |eta, _| {
        let u = f.evaluate(eta);
        // D⁻U at a point equals m times its local kernel sum.
        let s2 = ksum(f.delete_gradients(eta).iter().map(|d| (d / m as f64).powi(2)));
        (u, if u > 0.0 { s2 / u.powf(alpha) } else { 0.0 })
    });
    let values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let a = rows.iter().fold(0.0f64, |acc, r| acc.max(r.1));
    UStatRun { mean: mean_stderr(&values).0, values, a }
}

fn tail_counts(run: &UStatRun, t: f64) -> usize {
    run.values.iter().filter(|v| **v - run.mean >= t).count()
}

/// Empirical upper tail of a library U-statistic against the tail bound. When
/// `c_prime` is `None` it is fitted on an independent run as the smallest
/// value whose bound covers the upper confidence limits there.
pub fn ustat_tail_compare(
    f: &LibraryFunctional,
    window: &Window,
    alpha: f64,
    t_grid: &[f64],
    c_prime: Option<f64>,
    opts: &McOptions,
) -> Result<UStatTailReport> {
    let m = f.u_stat_order().ok_or_else(|| Error::InvalidArgument(format!("{} is not a U-statistic", f.label())))?;
    f.validate(window)?;
    if opts.samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    if !(0.0..2.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha must lie in [0, 2), got {alpha}")));
    }
    if t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Domain("tail thresholds must be positive".into()));
    }
    let (c, calibration_seed) = match c_prime {
        Some(c) => (c, None),
        None => {
            let seed = opts.seed ^ CALIBRATION_SALT;
            let cal = ustat_run(f, m, alpha, window, &McOptions { seed, ..*opts });
            let scale = (m * m) as f64 * cal.a;
            let n = cal.values.len();
            let mut c = f64::MIN_POSITIVE;
            for &t in t_grid {
                let (_, hi) = wilson_interval(tail_counts(&cal, t), n, CALIBRATION_Z);
                if scale > 0.0 && hi < 2.0 {
                    let x = (t * t / (scale * cal.mean.powf(alpha))).min(t.powf(2.0 - alpha) / scale);
                    c = c.max(x / (2.0 / hi).ln());
                }
            }
            (c, Some(seed))
        }
    };
    let run = ustat_run(f, m, alpha, window, opts);
    let n = run.values.len();
    let mut tail = TailReport {
        t_grid: t_grid.to_vec(),
        empirical: vec![],
        ci_low: vec![],
        ci_high: vec![],
        bound: vec![],
        dominated: vec![],
        mean: run.mean,
        mean_exact: false,
        samples: n,
        seed: opts.seed,
        passed: true,
    };
    for &t in t_grid {
        let hits = tail_counts(&run, t);
        let (lo, hi) = wilson_interval(hits, n, opts.z);
        let b = u_stat_tail_bound(run.mean, m, run.a, alpha, t, c)?;
        tail.empirical.push(hits as f64 / n as f64);
        tail.ci_low.push(lo);
        tail.ci_high.push(hi);
        tail.bound.push(b);
        // a = 0 forces every local sum to vanish, so U is a.s. constant and
        // its exact tail is 0 = bound.
        let ok = b >= hi || run.a == 0.0;
        tail.dominated.push(ok);
        tail.passed &= ok;
    }
    Ok(UStatTailReport {
        label: f.label(),
        m,
        alpha,
        a: run.a,
        mean: run.mean,
        c_prime: c,
        calibrated: c_prime.is_none(),
        calibration_seed,
        tail,
    })
}

/// A member of a finite function class on the window.
pub type ClassFunction = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmpiricalMode {
    /// Z = sup_f ∫ f dη over nonnegative f.
    Z,
    /// S = sup_f ∫ f d(η − λ).
    S,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalProcessBound {
    pub mode: EmpiricalMode,
    pub r: f64,
    pub constant: f64,
    /// EZ or ES.
    pub mean: f64,
    /// Z mode: ‖G‖_r with G = sup_{y∈η} sup_f f(y).
    pub g_norm: Option<f64>,
    /// S mode: Σ² = sup_f ∫f²dλ + E sup_f ∫f²dη.
    pub sigma: Option<f64>,
    /// S mode: ‖sup_{y∈η} sup_f |f(y)|‖_r.
    pub sup_norm: Option<f64>,
    /// Bracket multiplying the constant.
    pub shape: f64,
    pub bound: f64,
    /// Z mode: the fully explicit self-bounded bound with α = 1.
    pub explicit_bound: Option<f64>,
    /// Monte Carlo ‖(Z − EZ)₊‖_r (or S).
    pub lhs: f64,
    /// lhs / shape.
    pub required_constant: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Moment bound for suprema of Poisson integrals over a finite class. Z mode:
/// C(√r √EZ √‖G‖_r + r‖G‖_r), r ≥ 2. S mode: C(√r Σ + r‖sup|f|‖_r), r ≥ 4.
/// λ-integrals use `quadrature_points` fixed uniform points.
pub fn empirical_process_bound(
    class: &[ClassFunction],
    window: &Window,
    r: f64,
    mode: EmpiricalMode,
    constant: f64,
    quadrature_points: usize,
    opts: &McOptions,
) -> Result<EmpiricalProcessBound> {
    if class.is_empty() {
        return Err(Error::InvalidArgument("function class is empty".into()));
    }
    let r_min = if mode == EmpiricalMode::Z { 2.0 } else { 4.0 };
    if !(r >= r_min) || !r.is_finite() {
        return Err(Error::Domain(format!("moment order must satisfy r >= {r_min}, got {r}")));
    }
    if !(constant > 0.0) || opts.samples < 2 || quadrature_points == 0 {
        return Err(Error::InvalidArgument("need a positive constant, two samples and quadrature points".into()));
    }
    // ∫ f dλ and ∫ f² dλ on a fixed quadrature set.
    let mass = window.mass();
    let mut qrng = stream_rng(opts.seed, stream_id(EMPIRICAL_STREAM, u32::MAX as u64));
    let nodes: Vec<Vec<f64>> = (0..quadrature_points).map(|_| window.uniform_point(&mut qrng)).collect();
    let lam = |g: &dyn Fn(&[f64]) -> f64| mass * ksum(nodes.iter().map(|x| g(x))) / quadrature_points as f64;
    let lin: Vec<f64> = class.iter().map(|f| lam(&|x: &[f64]| f(x))).collect();
    let sq: Vec<f64> = class.iter().map(|f| lam(&|x: &[f64]| f(x) * f(x))).collect();

    let rows = replicate(window, opts, EMPIRICAL_STREAM, |eta, _| {
        let vals: Vec<Vec<f64>> = class.iter().map(|f| eta.iter().map(f).collect()).collect();
        let negative = vals.iter().flatten().any(|v| *v < 0.0);
        let integral = |k: usize| ksum(vals[k].iter().copied());
        let (stat, g) = match mode {
            EmpiricalMode::Z => (
                (0..class.len()).map(integral).fold(f64::NEG_INFINITY, f64::max),
                vals.iter().flatten().fold(0.0f64, |a, v| a.max(*v)),
            ),
            EmpiricalMode::S => (
                (0..class.len()).map(|k| integral(k) - lin[k]).fold(f64::NEG_INFINITY, f64::max),
                vals.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())),
            ),
        };
        let sq_eta = vals.iter().map(|v| ksum(v.iter().map(|x| x * x))).fold(0.0f64, f64::max);
        (stat, g, sq_eta, negative)
    });
    if mode == EmpiricalMode::Z && rows.iter().any(|r| r.3) {
        return Err(Error::Domain("Z mode needs nonnegative functions".into()));
    }
    let stats: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let (mean, _) = mean_stderr(&stats);
    let n = stats.len() as f64;
    let rnorm = |xs: &mut dyn Iterator<Item = f64>| (ksum(xs.map(|x| x.powf(r))) / n).powf(1.0 / r);
    let lhs = rnorm(&mut stats.iter().map(|s| pos(s - mean)));
    let g_norm = rnorm(&mut rows.iter().map(|r| r.1));
    let (shape, g_field, sigma, sup_norm, explicit) = match mode {
        EmpiricalMode::Z => {
            let shape = r.sqrt() * mean.max(0.0).sqrt() * g_norm.sqrt() + r * g_norm;
            (shape, Some(g_norm), None, None, Some(self_bounded_moment_bound(mean.max(0.0), g_norm, 1.0, r)?))
        }
        EmpiricalMode::S => {
            let e_sq = ksum(rows.iter().map(|r| r.2)) / n;
            let sigma = (sq.iter().fold(0.0f64, |a, v| a.max(*v)) + e_sq).sqrt();
            (r.sqrt() * sigma + r * g_norm, None, Some(sigma), Some(g_norm), None)
        }
    };
    Ok(EmpiricalProcessBound {
        mode,
        r,
        constant,
        mean,
        g_norm: g_field,
        sigma,
        sup_norm,
        shape,
        bound: constant * shape,
        explicit_bound: explicit,
        lhs,
        required_constant: if shape > 0.0 { lhs / shape } else { 0.0 },
        samples: opts.samples,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_bounded_special_cases() {
        assert_eq!(self_bounded_moment_bound(5.0, 0.0, 1.0, 4.0).unwrap(), 0.0);
        let d = poisson_constant();
        let b = self_bounded_moment_bound(5.0, 2.0, 0.0, 4.0).unwrap();
        assert!((b - (2.0 * d * 2.0 * 2.0 + 2.0 * d * 2.0 * 2.0)).abs() < 1e-12);
        assert!(self_bounded_moment_bound(1.0, 1.0, 2.0, 4.0).is_err());
        // α = 2 − 1/m gives exponent 2/(2 − α) = 2m.
        let m = 3.0;
        let alpha = 2.0 - 1.0 / m;
        let b1 = self_bounded_moment_bound(0.0, 1.0, alpha, 2.0).unwrap();
        assert!((b1 - (2.0 * d).powf(2.0 * m) * 2f64.powf(m)).abs() < 1e-9 * b1);
    }

    #[test]
    fn ustat_tail_limits() {
        assert_eq!(u_stat_tail_bound(10.0, 2, 1.0, 1.0, 0.0, 1.0).unwrap(), 2.0);
        assert!(u_stat_tail_bound(10.0, 2, 1.0, 1.0, 1e-6, 1.0).unwrap() > 1.999);
        // large t: the second branch wins
        let t = 400.0;
        let b = u_stat_tail_bound(10.0, 2, 1.0, 1.0, t, 1.0).unwrap();
        assert!((b.ln() - (2f64.ln() - t / 4.0)).abs() < 1e-9);
        assert!(u_stat_tail_bound(1.0, 2, 1.0, 2.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn edge_tail_with_calibrated_constant() {
        let w = Window::unit_cube(2, 30.0).unwrap();
        let f = LibraryFunctional::GilbertEdges { radius: 0.1 };
        let opts = McOptions { samples: 20_000, seed: 3, ..Default::default() };
        let rep = ustat_tail_compare(&f, &w, 1.0, &[2.0, 4.0, 6.0, 8.0], None, &opts).unwrap();
        assert!(rep.calibrated && rep.c_prime > 0.0 && rep.a > 0.0);
        assert!(rep.tail.passed, "{:?}", rep.tail);
        assert!(ustat_tail_compare(&LibraryFunctional::IsolatedPoints { radius: 0.1 }, &w, 1.0, &[1.0], None, &opts)
            .is_err());
    }

    #[test]
    fn empirical_zero_class() {
        let w = Window::unit_cube(2, 20.0).unwrap();
        let class: Vec<ClassFunction> = vec![Box::new(|_| 0.0)];
        let opts = McOptions { samples: 200, seed: 1, ..Default::default() };
        let b = empirical_process_bound(&class, &w, 2.0, EmpiricalMode::Z, 1.0, 16, &opts).unwrap();
        assert_eq!(b.bound, 0.0);
        assert!(empirical_process_bound(&[], &w, 2.0, EmpiricalMode::Z, 1.0, 16, &opts).is_err());
    }

    #[test]
    fn empirical_indicator_class() {
        let w = Window::unit_cube(2, 20.0).unwrap();
        let class: Vec<ClassFunction> = vec![Box::new(|x| (x[0] < 0.5) as u8 as f64)];
        let opts = McOptions { samples: 20_000, seed: 2, ..Default::default() };
        for r in [2.0, 4.0, 8.0] {
            let b = empirical_process_bound(&class, &w, r, EmpiricalMode::Z, 1.0, 64, &opts).unwrap();
            // Z = η(left half) ~ Poisson(10) and G = 1 almost surely.
            assert!((b.mean - 10.0).abs() < 0.1);
            assert!(b.required_constant < 1.0, "{b:?}");
            assert!(b.explicit_bound.unwrap() >= b.lhs);
        }
        let neg: Vec<ClassFunction> = vec![Box::new(|x| x[0] - 0.5)];
        assert!(empirical_process_bound(&neg, &w, 2.0, EmpiricalMode::Z, 1.0, 16, &opts).is_err());
        let s = empirical_process_bound(&neg, &w, 4.0, EmpiricalMode::S, 1.0, 4096, &opts).unwrap();
        assert!(s.sigma.unwrap() > 0.0 && s.mean.abs() < 0.3);
    }
}
