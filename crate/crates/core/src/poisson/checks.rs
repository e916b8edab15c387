use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{poisson_constant, replicate, PointConfiguration, PoissonFunctional, Window};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, stream_id, stream_rng, Rng};
use crate::moments::{McOptions, Method, MomentCheckReport, MARGIN_TOLERANCE};
use crate::numeric::{ksum, mean_stderr, neg, pos};

const MECKE_STREAM: u32 = 0x3ec;
const GAMMA_STREAM: u32 = 0x6a3;
const MOMENT_STREAM: u32 = 0x304;
const BOOT_STREAM: u32 = 0xb00;
const NORMAL_STREAM: u32 = 0x404;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeckeReport {
    pub label: String,
    /// E Σ_{x∈η} H(η − δ_x, x).
    pub lhs: f64,
    /// E ∫ H(η, x) λ(dx).
    pub rhs: f64,
    pub lhs_stderr: f64,
    pub rhs_stderr: f64,
    /// Standard error of the paired difference lhs − rhs.
    pub stderr: f64,
    pub z_score: f64,
    pub samples: usize,
    pub quadrature_points: usize,
    pub seed: u64,
    /// |lhs − rhs| ≤ 3 · stderr.
    pub passed: bool,
}

fn mecke_report(label: String, pairs: Vec<(f64, f64)>, quadrature_points: usize, opts: &McOptions) -> MeckeReport {
    let l: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let r: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let d: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
    let (lhs, lhs_stderr) = mean_stderr(&l);
    let (rhs, rhs_stderr) = mean_stderr(&r);
    let (diff, stderr) = mean_stderr(&d);
    let z_score = if stderr > 0.0 { diff / stderr } else { 0.0 };
    let passed = diff.abs() <= 3.0 * stderr + 1e-12 * lhs.abs().max(1.0);
    MeckeReport {
        label,
        lhs,
        rhs,
        lhs_stderr,
        rhs_stderr,
        stderr,
        z_score,
        samples: opts.samples,
        quadrature_points,
        seed: opts.seed,
        passed,
    }
}

fn check_mc(opts: &McOptions, quadrature_points: usize) -> Result<()> {
    if opts.samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    if quadrature_points == 0 {
        return Err(Error::InvalidArgument("need at least one quadrature point".into()));
    }
    Ok(())
}

/// Monte Carlo check of E Σ_{x∈η} H(η − δ_x, x) = ∫ E H(η, x) λ(dx). The
/// λ-integral uses `quadrature_points` uniform points per sample.
pub fn mecke_check<H>(window: &Window, h: H, quadrature_points: usize, opts: &McOptions) -> Result<MeckeReport>
where
    H: Fn(&PointConfiguration, &[f64]) -> f64 + Sync + Send,
{
    check_mc(opts, quadrature_points)?;
    let mass = window.mass();
    let pairs = replicate(window, opts, MECKE_STREAM, |eta, rng| {
        let l = ksum((0..eta.len()).map(|i| h(&eta.without(i), eta.point(i))));
        let mut x = vec![0.0; window.dimension];
        let r = ksum((0..quadrature_points).map(|_| {
            window.fill_uniform(rng, &mut x);
            h(eta, &x)
        }));
        (l, mass * r / quadrature_points as f64)
    });
    Ok(mecke_report("custom".into(), pairs, quadrature_points, opts))
}

/// Mecke check with H(η, x) = D_x⁺F(η), so that the left side is
/// E Σ_i D⁻F(η) at the points of η.
pub fn mecke_check_functional<F>(
    f: &F,
    window: &Window,
    quadrature_points: usize,
    opts: &McOptions,
) -> Result<MeckeReport>
where
    F: PoissonFunctional + ?Sized,
{
    check_mc(opts, quadrature_points)?;
    let mass = window.mass();
    let pairs = replicate(window, opts, MECKE_STREAM, |eta, rng| {
        let l = ksum(f.delete_gradients(eta));
        let mut x = vec![0.0; window.dimension];
        let r = ksum((0..quadrature_points).map(|_| {
            window.fill_uniform(rng, &mut x);
            f.add_gradient(eta, &x)
        }));
        (l, mass * r / quadrature_points as f64)
    });
    Ok(mecke_report(f.label(), pairs, quadrature_points, opts))
}

/// Pieces of Γ and Γ₊ at one configuration. The `delete_*` sums over η are
/// exact; the `add_*` λ-integrals are quadrature estimates.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct GammaEstimate {
    /// Σ_{x∈η} (D_x⁻F)₊².
    pub delete_pos: f64,
    /// Σ_{x∈η} (D_x⁻F)₋².
    pub delete_neg: f64,
    /// ∫ (D_x⁺F)₊² λ(dx).
    pub add_pos: f64,
    /// ∫ (D_x⁺F)₋² λ(dx).
    pub add_neg: f64,
    pub add_pos_stderr: f64,
    pub add_neg_stderr: f64,
    pub quadrature_points: usize,
}

impl GammaEstimate {
    /// Γ₊(F).
    pub fn gamma_plus(&self) -> f64 {
        self.delete_pos + self.add_neg
    }

    /// Γ₊(−F).
    pub fn gamma_plus_reflected(&self) -> f64 {
        self.delete_neg + self.add_pos
    }

    /// Γ(F) = Γ₊(F) + Γ₊(−F).
    pub fn gamma(&self) -> f64 {
        self.gamma_plus() + self.gamma_plus_reflected()
    }

    /// Quadrature standard error of Γ₊(F).
    pub fn stderr(&self) -> f64 {
        self.add_neg_stderr
    }
}

fn gamma_with<F: PoissonFunctional + ?Sized>(
    f: &F,
    eta: &PointConfiguration,
    window: &Window,
    quadrature_points: usize,
    rng: &mut Rng,
) -> GammaEstimate {
    let dm = f.delete_gradients(eta);
    let mut g = GammaEstimate {
        delete_pos: ksum(dm.iter().map(|&v| pos(v).powi(2))),
        delete_neg: ksum(dm.iter().map(|&v| neg(v).powi(2))),
        quadrature_points,
        ..Default::default()
    };
    let mass = window.mass();
    if mass == 0.0 {
        return g;
    }
    let mut x = vec![0.0; window.dimension];
    let mut ps = Vec::with_capacity(quadrature_points);
    let mut ns = Vec::with_capacity(quadrature_points);
    for _ in 0..quadrature_points {
        window.fill_uniform(rng, &mut x);
        let d = f.add_gradient(eta, &x);
        ps.push(mass * pos(d).powi(2));
        ns.push(mass * neg(d).powi(2));
    }
    let se = |v: &[f64]| if v.len() > 1 { mean_stderr(v) } else { (v[0], 0.0) };
    (g.add_pos, g.add_pos_stderr) = se(&ps);
    if !f.is_increasing() {
        (g.add_neg, g.add_neg_stderr) = se(&ns);
    }
    g
}

/// Γ₊(F)(η) and the related pieces, with the λ-integral estimated from
/// `quadrature_points` uniform points drawn from `seed`.
pub fn gamma_plus_poisson<F: PoissonFunctional + ?Sized>(
    f: &F,
    eta: &PointConfiguration,
    window: &Window,
    quadrature_points: usize,
    seed: u64,
) -> Result<GammaEstimate> {
    if quadrature_points == 0 {
        return Err(Error::InvalidArgument("need at least one quadrature point".into()));
    }
    if eta.dim() != window.dimension && !eta.is_empty() {
        return Err(Error::DimensionMismatch { expected: window.dimension, got: eta.dim() });
    }
    Ok(gamma_with(f, eta, window, quadrature_points, &mut stream_rng(seed, stream_id(GAMMA_STREAM, 0))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonMcOptions {
    #[serde(flatten)]
    pub mc: McOptions,
    #[serde(default = "default_quadrature")]
    pub quadrature_points: usize,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
}

fn default_quadrature() -> usize {
    32
}

fn default_bootstrap() -> usize {
    200
}

impl Default for PoissonMcOptions {
    fn default() -> Self {
        PoissonMcOptions {
            mc: McOptions::default(),
            quadrature_points: default_quadrature(),
            bootstrap: default_bootstrap(),
        }
    }
}

/// 95% percentile bootstrap intervals per moment order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub lhs_low: Vec<f64>,
    pub lhs_high: Vec<f64>,
    pub rhs_low: Vec<f64>,
    pub rhs_high: Vec<f64>,
}

/// A Monte Carlo moment comparison passes when the bound is at least the
/// lower confidence limit of the left side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoissonCheck {
    pub report: MomentCheckReport,
    pub ci: BootstrapCi,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoissonMomentReport {
    pub label: String,
    pub constant: f64,
    pub mean: f64,
    pub variance: f64,
    pub variance_stderr: f64,
    /// ‖F − EF‖_r against D√r‖√Γ(F)‖_r.
    pub two_sided: PoissonCheck,
    /// ‖(F − EF)₊‖_r against D√r‖√Γ₊(F)‖_r.
    pub upper: PoissonCheck,
    /// ‖(F − EF)₋‖_r against D√r‖√Γ₊(−F)‖_r.
    pub lower: PoissonCheck,
    pub passed: bool,
}

fn power_mean(xs: &[f64], r: f64) -> f64 {
    (ksum(xs.iter().map(|x| x.powf(r))) / xs.len() as f64).powf(1.0 / r)
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// lhs_r = ‖dev‖_r, rhs_r = D√r ‖√g‖_r, with bootstrap intervals. The
/// centering is the full-sample mean throughout.
fn mc_check(
    label: String,
    dev: &[f64],
    g: &[f64],
    d: f64,
    r_values: &[f64],
    opts: &PoissonMcOptions,
    tag: u64,
) -> PoissonCheck {
    let n = dev.len();
    let lhs: Vec<f64> = r_values.iter().map(|&r| power_mean(dev, r)).collect();
    let rhs: Vec<f64> = r_values.iter().map(|&r| d * r.sqrt() * power_mean(g, r / 2.0).sqrt()).collect();
    // Powers are precomputed so each bootstrap replicate is a plain resum.
    let lp: Vec<Vec<f64>> = r_values.iter().map(|&r| dev.iter().map(|x| x.powf(r)).collect()).collect();
    let rp: Vec<Vec<f64>> = r_values.iter().map(|&r| g.iter().map(|x| x.powf(r / 2.0)).collect()).collect();
    let k = r_values.len();
    let reps = map_indexed(opts.mc.exec, opts.bootstrap, |b| {
        let mut rng = stream_rng(opts.mc.seed, stream_id(BOOT_STREAM, (tag << 24) | b as u64));
        let mut acc = vec![0.0; 2 * k];
        for _ in 0..n {
            let i = rng.random_range(0..n);
            for j in 0..k {
                acc[j] += lp[j][i];
                acc[k + j] += rp[j][i];
            }
        }
        (0..k)
            .map(|j| {
                let r = r_values[j];
                ((acc[j] / n as f64).powf(1.0 / r), d * r.sqrt() * (acc[k + j] / n as f64).powf(1.0 / r))
            })
            .collect::<Vec<_>>()
    });
    let mut ci = BootstrapCi { lhs_low: vec![], lhs_high: vec![], rhs_low: vec![], rhs_high: vec![] };
    let (mut ls, mut rs) = (Vec::new(), Vec::new());
    for j in 0..k {
        if reps.is_empty() {
            ci.lhs_low.push(lhs[j]);
            ci.lhs_high.push(lhs[j]);
            ci.rhs_low.push(rhs[j]);
            ci.rhs_high.push(rhs[j]);
            ls.push(0.0);
            rs.push(0.0);
            continue;
        }
        let mut a: Vec<f64> = reps.iter().map(|v| v[j].0).collect();
        let mut b: Vec<f64> = reps.iter().map(|v| v[j].1).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        ci.lhs_low.push(percentile(&a, 0.025));
        ci.lhs_high.push(percentile(&a, 0.975));
        ci.rhs_low.push(percentile(&b, 0.025));
        ci.rhs_high.push(percentile(&b, 0.975));
        ls.push(mean_stderr(&a).1 * (a.len() as f64).sqrt());
        rs.push(mean_stderr(&b).1 * (b.len() as f64).sqrt());
    }
    let margin: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| r - l).collect();
    let passed = (0..k).all(|j| rhs[j] - ci.lhs_low[j] >= -MARGIN_TOLERANCE * rhs[j].abs().max(1.0));
    PoissonCheck {
        report: MomentCheckReport {
            label,
            r_values: r_values.to_vec(),
            lhs,
            rhs,
            margin,
            method: Method::MonteCarlo,
            sample_count: n,
            seed: opts.mc.seed,
            lhs_stderr: Some(ls),
            rhs_stderr: Some(rs),
            regime: None,
            passed,
        },
        ci,
    }
}

/// Monte Carlo check of the two-sided and both one-sided Poisson moment
/// bounds for `f` on `window`.
pub fn poisson_moment_check<F>(
    f: &F,
    window: &Window,
    r_values: &[f64],
    opts: &PoissonMcOptions,
) -> Result<PoissonMomentReport>
where
    F: PoissonFunctional + ?Sized,
{
    check_mc(&opts.mc, opts.quadrature_points)?;
    if r_values.is_empty() {
        return Err(Error::InvalidArgument("no moment orders given".into()));
    }
    if let Some(r) = r_values.iter().find(|r| !(**r >= 2.0) || !r.is_finite()) {
        return Err(Error::Domain(format!("moment order must satisfy r >= 2, got {r}")));
    }
    let rows = replicate(window, &opts.mc, MOMENT_STREAM, |eta, rng| {
        (f.evaluate(eta), gamma_with(f, eta, window, opts.quadrature_points, rng))
    });
    let vals: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let (mean, _) = mean_stderr(&vals);
    let n = vals.len() as f64;
    let dev: Vec<f64> = vals.iter().map(|v| v - mean).collect();
    let m2 = ksum(dev.iter().map(|d| d * d)) / n;
    let m4 = ksum(dev.iter().map(|d| d.powi(4))) / n;
    let variance = m2 * n / (n - 1.0);
    let variance_stderr = ((m4 - m2 * m2).max(0.0) / n).sqrt();

    let d = poisson_constant();
    let label = f.label();
    let abs: Vec<f64> = dev.iter().map(|x| x.abs()).collect();
    let up: Vec<f64> = dev.iter().map(|&x| pos(x)).collect();
    let down: Vec<f64> = dev.iter().map(|&x| neg(x)).collect();
    let g: Vec<f64> = rows.iter().map(|r| r.1.gamma()).collect();
    let gp: Vec<f64> = rows.iter().map(|r| r.1.gamma_plus()).collect();
    let gm: Vec<f64> = rows.iter().map(|r| r.1.gamma_plus_reflected()).collect();
    let two_sided = mc_check(format!("{label} two-sided"), &abs, &g, d, r_values, opts, 0);
    let upper = mc_check(format!("{label} upper"), &up, &gp, d, r_values, opts, 1);
    let lower = mc_check(format!("{label} lower"), &down, &gm, d, r_values, opts, 2);
    let passed = two_sided.report.passed && upper.report.passed && lower.report.passed;
    Ok(PoissonMomentReport { label, constant: d, mean, variance, variance_stderr, two_sided, upper, lower, passed })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalityReport {
    pub mass: f64,
    pub samples: usize,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Jarque–Bera statistic, asymptotically χ²₂.
    pub statistic: f64,
    pub p_value: f64,
    /// p ≥ 0.01.
    pub passed: bool,
}

/// Jarque–Bera test of (count − λvol)/√(λvol).
pub fn count_normality(window: &Window, samples: usize, seed: u64) -> Result<NormalityReport> {
    let mass = window.mass();
    if !(mass > 0.0) {
        return Err(Error::Domain("normality check needs positive intensity".into()));
    }
    if samples < 8 {
        return Err(Error::InvalidArgument("need at least eight samples".into()));
    }
    let opts = McOptions { samples, seed, ..Default::default() };
    let z: Vec<f64> = replicate(window, &opts, NORMAL_STREAM, |eta, _| (eta.len() as f64 - mass) / mass.sqrt());
    let n = z.len() as f64;
    let m = ksum(z.iter().copied()) / n;
    let c = |k: i32| ksum(z.iter().map(|x| (x - m).powi(k))) / n;
    let (m2, m3, m4) = (c(2), c(3), c(4));
    let skewness = m3 / m2.powf(1.5);
    let excess_kurtosis = m4 / (m2 * m2) - 3.0;
    let statistic = n / 6.0 * (skewness * skewness + excess_kurtosis * excess_kurtosis / 4.0);
    // χ²₂ survival function.
    let p_value = (-statistic / 2.0).exp();
    Ok(NormalityReport { mass, samples, skewness, excess_kurtosis, statistic, p_value, passed: p_value >= 0.01 })
}
