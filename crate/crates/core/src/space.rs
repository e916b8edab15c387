//! Finite probability spaces and the basic functionals of a measure.
//!
//! A [`FiniteSpace`] is a list of opaque state labels with a strictly positive
//! probability vector. Functions on the space are plain `&[f64]` slices indexed
//! like the states.

use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ksum, xlogx};

/// Weights below this value are rejected.
pub const MIN_WEIGHT: f64 = 1e-15;
/// Allowed deviation of the total mass from one.
pub const MASS_TOLERANCE: f64 = 1e-12;
/// Floor used inside logarithms in relaxed entropy mode.
pub const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace")]
pub struct FiniteSpace {
    labels: Vec<String>,
    mu: Vec<f64>,
}

#[derive(Deserialize)]
struct RawSpace {
    labels: Vec<String>,
    mu: Vec<f64>,
}

impl TryFrom<RawSpace> for FiniteSpace {
    type Error = Error;
    fn try_from(raw: RawSpace) -> Result<Self> {
        FiniteSpace::new(raw.labels, raw.mu)
    }
}

/// How [`FiniteSpace::entropy`] treats tiny positive values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntropyMode {
    /// Values in `(0, 1e-300)` are an error.
    #[default]
    Strict,
    /// Values in `(0, 1e-300)` are clamped to `1e-300` inside logarithms.
    Relaxed,
}

impl FiniteSpace {
    pub fn new(labels: Vec<String>, mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::InvalidMeasure("empty state space".into()));
        }
        if labels.len() != mu.len() {
            return Err(Error::DimensionMismatch { expected: mu.len(), got: labels.len() });
        }
        for (i, &w) in mu.iter().enumerate() {
            if !w.is_finite() || w < MIN_WEIGHT {
                return Err(Error::InvalidMeasure(format!(
                    "weight of state {i} ({}) is {w:e}; weights must be finite and at least {MIN_WEIGHT:e}",
                    labels[i]
                )));
            }
        }
        let total = ksum(mu.iter().copied());
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("total mass {total} differs from 1")));
        }
        let mut seen = std::collections::HashSet::with_capacity(labels.len());
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidMeasure(format!("duplicate label {l:?}")));
            }
        }
        Ok(Self { labels, mu })
    }

    /// Normalizes nonnegative weights into a probability vector.
    pub fn from_weights(labels: Vec<String>, weights: &[f64]) -> Result<Self> {
        let z = ksum(weights.iter().copied());
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::InvalidMeasure(format!("total weight {z} is not positive")));
        }
        let mu = weights.iter().map(|w| w / z).collect();
        Self::new(labels, mu)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::new(labels, vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: f.len() });
        }
        Ok(())
    }

    /// μ(f).
    pub fn expectation(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        Ok(self.mean_unchecked(f))
    }

    pub(crate) fn mean_unchecked(&self, f: &[f64]) -> f64 {
        ksum(self.mu.iter().zip(f).map(|(m, x)| m * x))
    }

    pub fn variance(&self, f: &[f64]) -> Result<f64> {
        self.covariance(f, f)
    }

    pub fn covariance(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        self.check_len(g)?;
        let mf = self.mean_unchecked(f);
        let mg = self.mean_unchecked(g);
        Ok(ksum(self.mu.iter().zip(f.iter().zip(g)).map(|(m, (a, b))| m * (a - mf) * (b - mg))))
    }

    /// Ent(f) = μ(f log f) − μ(f) log μ(f) for f ≥ 0.
    pub fn entropy(&self, f: &[f64]) -> Result<f64> {
        self.entropy_with(f, EntropyMode::Strict)
    }

    pub fn entropy_with(&self, f: &[f64], mode: EntropyMode) -> Result<f64> {
        self.check_len(f)?;
        for (i, &x) in f.iter().enumerate() {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::Domain(format!("entropy needs f >= 0, f[{i}] = {x}")));
            }
            if x > 0.0 && x < LOG_FLOOR && mode == EntropyMode::Strict {
                return Err(Error::Domain(format!("f[{i}] = {x:e} underflows the log floor; use relaxed mode")));
            }
        }
        let m = self.mean_unchecked(f);
        let plogp = |x: f64| {
            if x == 0.0 {
                0.0
            } else {
                x * x.max(LOG_FLOOR).ln()
            }
        };
        let a = ksum(self.mu.iter().zip(f).map(|(w, &x)| w * plogp(x)));
        let ent = a - xlogx(m);
        // Ent is nonnegative; clip rounding noise.
        Ok(ent.max(0.0))
    }

    /// μ(f^p) − μ(f)^p for f ≥ 0.
    pub fn p_defect(&self, f: &[f64], p: f64) -> Result<f64> {
        self.check_len(f)?;
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::Domain(format!("p-defect needs p >= 1, got {p}")));
        }
        if let Some(i) = f.iter().position(|x| !(*x >= 0.0)) {
            return Err(Error::Domain(format!("p-defect needs f >= 0, f[{i}] = {}", f[i])));
        }
        let m = self.mean_unchecked(f);
        let a = ksum(self.mu.iter().zip(f).map(|(w, x)| w * x.powf(p)));
        Ok((a - m.powf(p)).max(0.0))
    }

    /// μ(g²) − μ(|g|^q)^{2/q}, the defect appearing in the q-Beckner form.
    pub fn q_defect(&self, g: &[f64], q: f64) -> Result<f64> {
        self.check_len(g)?;
        if !(q > 0.0 && q <= 2.0) {
            return Err(Error::Domain(format!("q-defect needs q in (0, 2], got {q}")));
        }
        let a = ksum(self.mu.iter().zip(g).map(|(w, x)| w * x * x));
        let b = ksum(self.mu.iter().zip(g).map(|(w, x)| w * x.abs().powf(q)));
        Ok((a - b.powf(2.0 / q)).max(0.0))
    }

    /// (μ|f|^r)^{1/r}; `r = f64::INFINITY` gives the max norm.
    pub fn lr_norm(&self, f: &[f64], r: f64) -> Result<f64> {
        self.check_len(f)?;
        if !(r >= 1.0) {
            return Err(Error::Domain(format!("L_r norm needs r >= 1, got {r}")));
        }
        Ok(self.lr_norm_unchecked(f, r))
    }

    pub(crate) fn lr_norm_unchecked(&self, f: &[f64], r: f64) -> f64 {
        if r.is_infinite() {
            return f.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        }
        // Scale by the max to avoid overflow at large r.
        let scale = f.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let s = ksum(self.mu.iter().zip(f).map(|(w, x)| w * (x.abs() / scale).powf(r)));
        scale * s.powf(1.0 / r)
    }

    /// Alias-table sampler for μ.
    pub fn sampler(&self) -> Result<StateSampler> {
        let table =
            WeightedAliasIndex::new(self.mu.clone()).map_err(|e| Error::InvalidMeasure(format!("alias table: {e}")))?;
        Ok(StateSampler { table })
    }
}

/// Draws state indices from μ.
#[derive(Debug, Clone)]
pub struct StateSampler {
    table: WeightedAliasIndex<f64>,
}

impl StateSampler {
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.table.sample(rng)
    }
}

/// Uniform index in `0..n`.
pub fn uniform_index<R: rand::Rng + ?Sized>(rng: &mut R, n: usize) -> usize {
    rng.random_range(0..n)
}
