//! Poisson point processes with finite intensity on axis-aligned boxes.
//!
//! A configuration η is a finite point list. Functionals expose the add and
//! delete gradients D_x⁺F(η) = F(η+δ_x) − F(η) and D_x⁻F(η) = F(η) − F(η−δ_x),
//! from which the Poisson carré du champ
//!
//! Γ(F)  = ∫(D_x⁻F)² η(dx) + ∫(D_x⁺F)² λ(dx)
//! Γ₊(F) = ∫(D_x⁻F)₊² η(dx) + ∫(D_x⁺F)₋² λ(dx)
//!
//! is assembled, the η-integral exactly and the λ-integral by Monte Carlo
//! quadrature over the window. Moment checks use ‖F − EF‖_r ≤ D√r‖√Γ(F)‖_r
//! with D² = 3√e/(√e − 1), and the same constant for the one-sided form.
//!
//! User-supplied functionals must be pure: they are evaluated concurrently
//! from several replicas.

mod bounds;
mod checks;
mod functional;

pub use bounds::{
    empirical_process_bound, self_bounded_moment_bound, u_stat_tail_bound, ustat_tail_compare, ClassFunction,
    EmpiricalMode, EmpiricalProcessBound, UStatTailReport,
};
pub use checks::{
    count_normality, gamma_plus_poisson, mecke_check, mecke_check_functional, poisson_moment_check, BootstrapCi,
    GammaEstimate, MeckeReport, NormalityReport, PoissonCheck, PoissonMcOptions, PoissonMomentReport,
};
pub use functional::{u_statistic, LibraryFunctional, PoissonFunctional, U_STAT_LIMIT};

use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, stream_id, stream_rng, Rng};
use crate::moments::{kappa, replica_ranges, McOptions};

const SAMPLE_STREAM: u32 = 0x9015;

/// D with D² = 3κ(0) = 3√e/(√e − 1).
pub fn poisson_constant() -> f64 {
    (3.0 * kappa(0.0).expect("kappa(0) is finite")).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWindow")]
pub struct Window {
    pub dimension: usize,
    /// Per-axis [lo, hi].
    pub bounds: Vec<[f64; 2]>,
    /// Points per unit volume.
    pub intensity: f64,
}

#[derive(Deserialize)]
struct RawWindow {
    #[serde(default)]
    dimension: Option<usize>,
    bounds: Vec<[f64; 2]>,
    intensity: f64,
}

impl TryFrom<RawWindow> for Window {
    type Error = Error;

    fn try_from(raw: RawWindow) -> Result<Self> {
        if let Some(d) = raw.dimension {
            if d != raw.bounds.len() {
                return Err(Error::DimensionMismatch { expected: d, got: raw.bounds.len() });
            }
        }
        Window::new(raw.bounds, raw.intensity)
    }
}

impl Window {
    pub fn new(bounds: Vec<[f64; 2]>, intensity: f64) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidArgument("window needs at least one axis".into()));
        }
        for (k, [lo, hi]) in bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || !(hi > lo) {
                return Err(Error::InvalidArgument(format!("axis {k} has empty or infinite extent [{lo}, {hi}]")));
            }
        }
        if !(intensity >= 0.0) || !intensity.is_finite() {
            return Err(Error::InvalidArgument(format!("intensity must be finite and nonnegative, got {intensity}")));
        }
        Ok(Window { dimension: bounds.len(), bounds, intensity })
    }

    /// [0, 1]^d with the given intensity.
    pub fn unit_cube(dimension: usize, intensity: f64) -> Result<Self> {
        Window::new(vec![[0.0, 1.0]; dimension], intensity)
    }

    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(|[lo, hi]| hi - lo).product()
    }

    /// λ(window) = intensity · volume.
    pub fn mass(&self) -> f64 {
        self.intensity * self.volume()
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|[lo, hi]| 0.5 * (lo + hi)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension && x.iter().zip(&self.bounds).all(|(v, [lo, hi])| *lo <= *v && *v <= *hi)
    }

    pub fn uniform_point(&self, rng: &mut Rng) -> Vec<f64> {
        let mut x = vec![0.0; self.dimension];
        self.fill_uniform(rng, &mut x);
        x
    }

    pub(crate) fn fill_uniform(&self, rng: &mut Rng, out: &mut [f64]) {
        for (v, [lo, hi]) in out.iter_mut().zip(&self.bounds) {
            *v = lo + (hi - lo) * rng.random::<f64>();
        }
    }
}

/// Finite point configuration stored as a flat coordinate buffer. Serializes
/// as a list of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct PointConfiguration {
    dim: usize,
    coords: Vec<f64>,
}

impl From<PointConfiguration> for Vec<Vec<f64>> {
    fn from(c: PointConfiguration) -> Self {
        c.iter().map(|p| p.to_vec()).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for PointConfiguration {
    type Error = Error;

    fn try_from(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        PointConfiguration::from_points(dim, &points)
    }
}

impl PointConfiguration {
    pub fn empty(dim: usize) -> Self {
        PointConfiguration { dim, coords: Vec::new() }
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("point coordinates must be finite".into()));
            }
            coords.extend_from_slice(p);
        }
        Ok(PointConfiguration { dim, coords })
    }

    /// Like [`from_points`](Self::from_points) but also checks every point
    /// lies in `window`.
    pub fn in_window(window: &Window, points: &[Vec<f64>]) -> Result<Self> {
        let c = PointConfiguration::from_points(window.dimension, points)?;
        if let Some(i) = c.iter().position(|p| !window.contains(p)) {
            return Err(Error::Domain(format!("point {i} lies outside the window")));
        }
        Ok(c)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        self.coords.extend_from_slice(x);
    }

    /// η + δ_x.
    pub fn with_point(&self, x: &[f64]) -> Self {
        let mut c = self.clone();
        c.push(x);
        c
    }

    /// η − δ_{x_i}.
    pub fn without(&self, i: usize) -> Self {
        let mut coords = Vec::with_capacity(self.coords.len().saturating_sub(self.dim));
        coords.extend_from_slice(&self.coords[..i * self.dim]);
        coords.extend_from_slice(&self.coords[(i + 1) * self.dim..]);
        PointConfiguration { dim: self.dim, coords }
    }

    /// Number of points in the box `bounds`.
    pub fn count_in(&self, bounds: &[[f64; 2]]) -> usize {
        self.iter().filter(|p| p.iter().zip(bounds).all(|(v, [lo, hi])| *lo <= *v && *v <= *hi)).count()
    }
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One draw of the process on `window` from `rng`.
pub fn sample_with(window: &Window, rng: &mut Rng) -> PointConfiguration {
    let mass = window.mass();
    let n = if mass > 0.0 { Poisson::new(mass).expect("positive finite mass").sample(rng) as usize } else { 0 };
    let d = window.dimension;
    let mut coords = vec![0.0; n * d];
    for p in coords.chunks_exact_mut(d) {
        window.fill_uniform(rng, p);
    }
    PointConfiguration { dim: d, coords }
}

/// One draw of the process on `window`.
pub fn sample_process(window: &Window, seed: u64) -> PointConfiguration {
    sample_with(window, &mut stream_rng(seed, stream_id(SAMPLE_STREAM, 0)))
}

/// Draw `opts.samples` configurations in replica blocks and map each with
/// `f`, which also gets the replica's RNG for any auxiliary randomness.
pub(crate) fn replicate<T, F>(window: &Window, opts: &McOptions, tag: u32, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&PointConfiguration, &mut Rng) -> T + Sync + Send,
{
    let ranges = replica_ranges(opts.samples);
    map_indexed(opts.exec, ranges.len(), |b| {
        let mut rng = stream_rng(opts.seed, stream_id(tag, b as u64));
        ranges[b]
            .clone()
            .map(|_| {
                let eta = sample_with(window, &mut rng);
                f(&eta, &mut rng)
            })
            .collect::<Vec<T>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::mean_stderr;

    #[test]
    fn constant_value() {
        let e = 0.5f64.exp();
        assert!((poisson_constant().powi(2) - 3.0 * e / (e - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_intensity_is_empty() {
        let w = Window::unit_cube(2, 0.0).unwrap();
        assert!(sample_process(&w, 3).is_empty());
    }

    #[test]
    fn count_mean_and_variance() {
        let w = Window::unit_cube(2, 50.0).unwrap();
        let opts = McOptions { samples: 10_000, seed: 11, ..Default::default() };
        let counts: Vec<f64> = replicate(&w, &opts, 1, |eta, _| eta.len() as f64);
        let (m, se) = mean_stderr(&counts);
        assert!((m - 50.0).abs() < 3.0 * se, "{m} ± {se}");
        let v = counts.iter().map(|c| (c - m) * (c - m)).sum::<f64>() / (counts.len() - 1) as f64;
        // sd of the sample variance ≈ sqrt(2σ⁴ + λ)/√n for Poisson(λ)
        let sd = ((2.0 * 50.0f64 * 50.0 + 50.0) / counts.len() as f64).sqrt();
        assert!((v - 50.0).abs() < 3.0 * sd, "{v}");
    }

    #[test]
    fn points_stay_inside() {
        let w = Window::new(vec![[-1.0, 2.0], [0.5, 0.75]], 40.0).unwrap();
        let eta = sample_process(&w, 5);
        assert!(eta.iter().all(|p| w.contains(p)));
    }

    #[test]
    fn serde_roundtrip() {
        let w: Window = serde_json::from_str(r#"{"bounds": [[0, 2], [0, 1]], "intensity": 3}"#).unwrap();
        assert_eq!(w.dimension, 2);
        assert_eq!(w.mass(), 6.0);
        assert!(serde_json::from_str::<Window>(r#"{"dimension": 3, "bounds": [[0, 1]], "intensity": 1}"#).is_err());
        let eta = sample_process(&w, 1);
        let s = serde_json::to_string(&eta).unwrap();
        assert!(s.starts_with("[["));
        let back: PointConfiguration = serde_json::from_str(&s).unwrap();
        assert_eq!(back, eta);
    }

    #[test]
    fn add_and_remove() {
        let c = PointConfiguration::from_points(1, &[vec![0.1], vec![0.2], vec![0.3]]).unwrap();
        assert_eq!(c.without(1).iter().map(|p| p[0]).collect::<Vec<_>>(), vec![0.1, 0.3]);
        assert_eq!(c.with_point(&[0.9]).len(), 4);
        let w = Window::unit_cube(1, 1.0).unwrap();
        assert!(PointConfiguration::in_window(&w, &[vec![1.5]]).is_err());
    }

    #[test]
    fn bad_windows() {
        assert!(Window::new(vec![[1.0, 1.0]], 1.0).is_err());
        assert!(Window::new(vec![[0.0, 1.0]], -1.0).is_err());
        assert!(Window::new(vec![[0.0, f64::INFINITY]], 1.0).is_err());
    }
}
