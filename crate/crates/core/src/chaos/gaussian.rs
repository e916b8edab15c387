use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::norms::{all_partition_norms, AmOptions, PartitionNorm};
use super::IndexedTensor;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, stream_id, stream_rng};
use crate::moments::{replica_ranges, McOptions};
use crate::numeric::mean_stderr;

const CHAOS_STREAM: u32 = 0xc4a;

/// Σ_{𝓘 ∈ P_k} r^{|𝓘|/2} ‖A‖_𝓘 from precomputed norms.
pub fn chaos_envelope(r: f64, norms: &[PartitionNorm]) -> f64 {
    norms.iter().map(|n| r.powf(n.blocks as f64 / 2.0) * n.value).sum()
}

/// C_k Σ_{𝓘 ∈ P_k} r^{|𝓘|/2} ‖A‖_𝓘, an upper bound for ‖⟨A, G_1⊗⋯⊗G_k⟩‖_r
/// once C_k is valid. C_k is supplied by the caller.
pub fn chaos_moment_bound(a: &IndexedTensor, r: f64, c_k: f64, opts: &AmOptions) -> Result<f64> {
    if !(r >= 2.0) || !r.is_finite() {
        return Err(Error::Domain(format!("moment order must satisfy r >= 2, got {r}")));
    }
    if !(c_k > 0.0) || !c_k.is_finite() {
        return Err(Error::Domain(format!("constant must be positive, got {c_k}")));
    }
    if a.is_zero() {
        return Ok(0.0);
    }
    Ok(c_k * chaos_envelope(r, &all_partition_norms(a, opts)?))
}

/// ⟨A, g_1 ⊗ ⋯ ⊗ g_d⟩ by contracting the last axis first.
fn contract(a: &IndexedTensor, gs: &[Vec<f64>], scratch: &mut Vec<f64>) -> f64 {
    let n = a.dim();
    scratch.clear();
    scratch.extend_from_slice(a.entries());
    for g in gs.iter().rev() {
        let len = scratch.len() / n;
        for i in 0..len {
            let v: f64 = scratch[i * n..(i + 1) * n].iter().zip(g).map(|(x, y)| x * y).sum();
            scratch[i] = v;
        }
        scratch.truncate(len);
    }
    scratch[0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McMoment {
    pub r: f64,
    /// (mean |X|^r)^{1/r}.
    pub estimate: f64,
    pub stderr: f64,
    /// ((mean + z·se)_+)^{1/r} and ((mean − z·se)_+)^{1/r}.
    pub upper: f64,
    pub lower: f64,
}

/// Monte Carlo estimates of ‖⟨A, G_1⊗⋯⊗G_d⟩‖_r with independent standard
/// Gaussian vectors G_l.
pub fn chaos_mc_moments(a: &IndexedTensor, r_values: &[f64], opts: &McOptions) -> Result<Vec<McMoment>> {
    if opts.samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let n = a.dim();
    let d = a.order();
    let ranges = replica_ranges(opts.samples);
    let blocks = map_indexed(opts.exec, ranges.len(), |b| {
        let mut rng = stream_rng(opts.seed, stream_id(CHAOS_STREAM, b as u64));
        let mut gs = vec![vec![0.0; n]; d];
        let mut scratch = Vec::with_capacity(a.entries().len());
        ranges[b]
            .clone()
            .map(|_| {
                for g in gs.iter_mut() {
                    g.iter_mut().for_each(|x| *x = StandardNormal.sample(&mut rng));
                }
                contract(a, &gs, &mut scratch)
            })
            .collect::<Vec<f64>>()
    });
    let xs: Vec<f64> = blocks.into_iter().flatten().collect();
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(r_values
        .iter()
        .map(|&r| {
            if scale == 0.0 {
                return McMoment { r, estimate: 0.0, stderr: 0.0, upper: 0.0, lower: 0.0 };
            }
            let pw: Vec<f64> = xs.iter().map(|x| (x.abs() / scale).powf(r)).collect();
            let (m, se) = mean_stderr(&pw);
            let root = |v: f64| scale * v.max(0.0).powf(1.0 / r);
            McMoment {
                r,
                estimate: root(m),
                stderr: if m > 0.0 { root(m) / (r * m) * se } else { 0.0 },
                upper: root(m + opts.z * se),
                lower: root(m - opts.z * se),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChaosCalibration {
    /// Smallest C with C · envelope ≥ upper confidence limit throughout.
    pub constant: f64,
    /// ratios[t][j] = upper MC moment / envelope for tensor t at r_values[j].
    pub ratios: Vec<Vec<f64>>,
    pub r_values: Vec<f64>,
    pub argmax: (usize, usize),
    pub samples: usize,
    pub seed: u64,
}

/// Seed of the Monte Carlo run for tensor `t` in a calibration family.
fn family_seed(seed: u64, t: usize) -> u64 {
    seed ^ (t as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Smallest constant making the moment envelope dominate the upper
/// confidence limits of the Monte Carlo moments over a tensor family.
pub fn calibrate_chaos_constant(
    tensors: &[IndexedTensor],
    r_values: &[f64],
    mc: &McOptions,
    am: &AmOptions,
) -> Result<ChaosCalibration> {
    if tensors.is_empty() || r_values.is_empty() {
        return Err(Error::InvalidArgument("calibration needs tensors and moment orders".into()));
    }
    let mut ratios = Vec::with_capacity(tensors.len());
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for (t, a) in tensors.iter().enumerate() {
        let norms = all_partition_norms(a, am)?;
        let est = chaos_mc_moments(a, r_values, &McOptions { seed: family_seed(mc.seed, t), ..*mc })?;
        let row: Vec<f64> = est
            .iter()
            .map(|m| {
                let env = chaos_envelope(m.r, &norms);
                if env > 0.0 {
                    m.upper / env
                } else {
                    0.0
                }
            })
            .collect();
        for (j, &v) in row.iter().enumerate() {
            if v > best.0 {
                best = (v, (t, j));
            }
        }
        ratios.push(row);
    }
    Ok(ChaosCalibration {
        constant: best.0,
        ratios,
        r_values: r_values.to_vec(),
        argmax: best.1,
        samples: mc.samples,
        seed: mc.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ExecMode;

    #[test]
    fn zero_tensor_bound() {
        let z = IndexedTensor::zeros(2, 3).unwrap();
        assert_eq!(chaos_moment_bound(&z, 4.0, 1.0, &AmOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn contraction_matches_bilinear_form() {
        let a = IndexedTensor::from_matrix(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let mut s = Vec::new();
        let v = contract(&a, &[vec![1.0, -1.0], vec![0.5, 2.0]], &mut s);
        // x^T A y with x = (1, -1), y = (0.5, 2)
        assert!((v - (1.0 * 0.5 + 2.0 * 2.0 - 3.0 * 0.5 - 4.0 * 2.0)).abs() < 1e-15);
    }

    #[test]
    fn second_moment_of_decoupled_chaos_is_hs_norm() {
        let a = IndexedTensor::from_matrix(&[vec![1.0, 0.5], vec![-0.2, 2.0]]).unwrap();
        let est = chaos_mc_moments(&a, &[2.0], &McOptions { samples: 200_000, seed: 4, ..Default::default() }).unwrap();
        let hs = a.frobenius();
        assert!((est[0].estimate - hs).abs() < 4.0 * est[0].stderr + 1e-3, "{} vs {hs}", est[0].estimate);
        assert!(est[0].lower <= est[0].estimate && est[0].estimate <= est[0].upper);
    }

    #[test]
    fn mc_is_mode_independent() {
        let a = IndexedTensor::vector(vec![1.0, 0.0, 0.0]).unwrap();
        let s = McOptions { samples: 3000, seed: 1, exec: ExecMode::Sequential, ..Default::default() };
        let p = McOptions { exec: ExecMode::Parallel, ..s };
        let x = chaos_mc_moments(&a, &[2.0, 4.0], &s).unwrap();
        let y = chaos_mc_moments(&a, &[2.0, 4.0], &p).unwrap();
        assert_eq!(x[1].estimate.to_bits(), y[1].estimate.to_bits());
    }
}
