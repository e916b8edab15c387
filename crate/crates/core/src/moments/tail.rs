//! Monte Carlo tail probabilities against analytic bounds.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, stream_id, stream_rng, ExecMode, Rng};
use crate::numeric::{wilson_interval, KahanSum};
use crate::space::FiniteSpace;

/// Monte Carlo work is split into this many replica blocks, each with its own
/// RNG stream, so results do not depend on the execution mode.
pub const REPLICAS: usize = 64;

const TAIL_STREAM: u32 = 0x7a1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub exec: ExecMode,
    /// Normal quantile for the Wilson intervals.
    #[serde(default = "default_z")]
    pub z: f64,
}

fn default_z() -> f64 {
    1.96
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions { samples: 100_000, seed: 0, exec: ExecMode::Parallel, z: default_z() }
    }
}

pub(crate) fn replica_ranges(samples: usize) -> Vec<Range<usize>> {
    let blocks = REPLICAS.min(samples.max(1));
    (0..blocks).map(|b| b * samples / blocks..(b + 1) * samples / blocks).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailReport {
    pub t_grid: Vec<f64>,
    /// Empirical P(f − Ef ≥ t).
    pub empirical: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub bound: Vec<f64>,
    /// bound ≥ upper confidence limit.
    pub dominated: Vec<bool>,
    pub mean: f64,
    pub mean_exact: bool,
    pub samples: usize,
    pub seed: u64,
    pub passed: bool,
}

impl TailReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,empirical,ci_low,ci_high,bound,dominated\n");
        for i in 0..self.t_grid.len() {
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{}\n",
                self.t_grid[i], self.empirical[i], self.ci_low[i], self.ci_high[i], self.bound[i], self.dominated[i]
            ));
        }
        out
    }
}

/// Draw `opts.samples` values of f from `sample`, estimate P(f − Ef ≥ t) with
/// Wilson intervals and compare with `bound(t)`. When `mean` is `None` the
/// sample mean is used for Ef.
pub fn monte_carlo_tail_compare<S, B>(
    sample: S,
    mean: Option<f64>,
    bound: B,
    t_grid: &[f64],
    opts: &McOptions,
) -> Result<TailReport>
where
    S: Fn(&mut Rng) -> f64 + Sync + Send,
    B: Fn(f64) -> f64,
{
    if opts.samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let ranges = replica_ranges(opts.samples);
    let blocks: Vec<Vec<f64>> = map_indexed(opts.exec, ranges.len(), |b| {
        let mut rng = stream_rng(opts.seed, stream_id(TAIL_STREAM, b as u64));
        ranges[b].clone().map(|_| sample(&mut rng)).collect()
    });
    let values: Vec<f64> = blocks.into_iter().flatten().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("sampler returned a non-finite value".into()));
    }
    let (m, mean_exact) = match mean {
        Some(m) => (m, true),
        None => {
            let mut acc = KahanSum::new();
            values.iter().for_each(|v| acc.add(*v));
            (acc.value() / values.len() as f64, false)
        }
    };
    let mut sorted: Vec<f64> = values.iter().map(|v| v - m).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut rep = TailReport {
        t_grid: t_grid.to_vec(),
        empirical: Vec::new(),
        ci_low: Vec::new(),
        ci_high: Vec::new(),
        bound: Vec::new(),
        dominated: Vec::new(),
        mean: m,
        mean_exact,
        samples: n,
        seed: opts.seed,
        passed: true,
    };
    for &t in t_grid {
        let below = sorted.partition_point(|d| *d < t);
        let hits = n - below;
        let (lo, hi) = wilson_interval(hits, n, opts.z);
        let b = bound(t);
        rep.empirical.push(hits as f64 / n as f64);
        rep.ci_low.push(lo);
        rep.ci_high.push(hi);
        rep.bound.push(b);
        rep.dominated.push(b >= hi);
        rep.passed &= b >= hi;
    }
    Ok(rep)
}

/// Tail comparison for f on a finite space, sampling states exactly from μ
/// and using the exact mean.
pub fn tail_compare_on_space<B>(
    space: &FiniteSpace,
    f: &[f64],
    bound: B,
    t_grid: &[f64],
    opts: &McOptions,
) -> Result<TailReport>
where
    B: Fn(f64) -> f64,
{
    let mean = space.expectation(f)?;
    let sampler = space.sampler()?;
    monte_carlo_tail_compare(|rng| f[sampler.sample(rng)], Some(mean), bound, t_grid, opts)
}

/// Chebyshev in L_r: P(X ≥ t) ≤ min(1, min_r (M_r/t)^r) from a list of
/// moment bounds (r, M_r) with ‖X₊‖_r ≤ M_r.
pub fn moment_tail_bound(moments: &[(f64, f64)], t: f64) -> f64 {
    if !(t > 0.0) {
        return 1.0;
    }
    moments.iter().map(|&(r, m)| if m <= 0.0 { 0.0 } else { (r * (m / t).ln()).exp() }).fold(1.0, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{build_glauber, ProductSpec};
    use rand::Rng as _;

    #[test]
    fn replica_ranges_cover() {
        for s in [1, 63, 64, 1000, 100_001] {
            let r = replica_ranges(s);
            assert_eq!(r.first().unwrap().start, 0);
            assert_eq!(r.last().unwrap().end, s);
            assert!(r.windows(2).all(|w| w[0].end == w[1].start));
        }
    }

    #[test]
    fn chebyshev_bound() {
        assert_eq!(moment_tail_bound(&[(2.0, 1.0)], 0.5), 1.0);
        assert!((moment_tail_bound(&[(2.0, 1.0), (4.0, 1.0)], 2.0) - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn coin_tail() {
        let opts = McOptions { samples: 20_000, seed: 1, ..Default::default() };
        let r =
            monte_carlo_tail_compare(|rng| rng.random_range(0..2) as f64, Some(0.5), |_| 1.0, &[0.0, 0.5, 0.6], &opts)
                .unwrap();
        assert!(r.ci_low[1] < 0.5 && 0.5 < r.ci_high[1]);
        assert_eq!(r.empirical[2], 0.0);
        assert!(r.passed);
    }

    #[test]
    fn execution_mode_invariant() {
        let b = build_glauber(&ProductSpec::factorized(vec![vec![0.5, 0.5]; 6])).unwrap();
        let f = b.coordinate_sum();
        let t = [0.5, 1.5, 2.5];
        let seq = McOptions { samples: 5000, seed: 3, exec: ExecMode::Sequential, ..Default::default() };
        let par = McOptions { exec: ExecMode::Parallel, ..seq };
        let a = tail_compare_on_space(b.space(), &f, |_| 1.0, &t, &seq).unwrap();
        let c = tail_compare_on_space(b.space(), &f, |_| 1.0, &t, &par).unwrap();
        assert_eq!(a.empirical, c.empirical);
    }
}
