//! Moment bounds on the symmetric group and suprema of Hoeffding statistics.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::tail::{replica_ranges, McOptions};
use super::{kappa, Method, MomentCheckReport};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, stream_id, stream_rng};
use crate::numeric::{ksum, mean_stderr, pos};
use crate::zoo::permutations;

/// Largest n for which S_n is enumerated.
pub const EXACT_LIMIT: usize = 6;

const HOEFFDING_STREAM: u32 = 0x40e;

/// D = sqrt(√e/(√e − 1)), i.e. D² = κ(0).
pub fn symmetric_group_constant() -> f64 {
    kappa(0.0).expect("s = 0").sqrt()
}

/// Lexicographic rank of a permutation of {0, …, n−1}.
fn rank(perm: &[usize]) -> usize {
    let n = perm.len();
    let mut r = 0;
    for i in 0..n {
        let smaller = perm[i + 1..].iter().filter(|&&v| v < perm[i]).count();
        r = r * (n - i) + smaller;
    }
    r
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetricGroupReport {
    pub n: usize,
    pub constant: f64,
    /// ‖f − Ef‖_r against D√r ‖√V‖_r.
    pub two_sided: MomentCheckReport,
    /// ‖(f − Ef)₊‖_r against D√r ‖√V₊‖_r.
    pub one_sided: MomentCheckReport,
}

impl SymmetricGroupReport {
    pub fn passed(&self) -> bool {
        self.two_sided.passed && self.one_sided.passed
    }
}

/// Exact check over all n! permutations of
/// ‖f − Ef‖_r ≤ D√r ‖(Σ_{i,j} (f(σ) − f(σ∘τ_ij))²/(n+2))^{1/2}‖_r
/// and of its one-sided version.
pub fn symmetric_group_moment_check<F>(n: usize, f: F, r_values: &[f64]) -> Result<SymmetricGroupReport>
where
    F: Fn(&[usize]) -> f64,
{
    if !(2..=EXACT_LIMIT).contains(&n) {
        return Err(Error::InvalidArgument(format!("symmetric group check needs 2 <= n <= {EXACT_LIMIT}, got {n}")));
    }
    if r_values.is_empty() || r_values.iter().any(|r| !(*r >= 2.0) || !r.is_finite()) {
        return Err(Error::Domain("moment orders must satisfy r >= 2".into()));
    }
    let perms = permutations(n);
    let vals: Vec<f64> = perms.iter().map(|p| f(p)).collect();
    let mean = ksum(vals.iter().copied()) / vals.len() as f64;
    let mut v = Vec::with_capacity(perms.len());
    let mut v_plus = Vec::with_capacity(perms.len());
    let mut buf = vec![0usize; n];
    for (k, p) in perms.iter().enumerate() {
        let mut all = 0.0;
        let mut up = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                buf.copy_from_slice(p);
                buf.swap(i, j);
                let d = vals[k] - vals[rank(&buf)];
                // (i, j) and (j, i) contribute equally.
                all += 2.0 * d * d;
                up += 2.0 * pos(d).powi(2);
            }
        }
        v.push(all / (n + 2) as f64);
        v_plus.push(up / (n + 2) as f64);
    }
    let d = symmetric_group_constant();
    let count = perms.len() as f64;
    let norm = |xs: &[f64], r: f64| {
        let scale = xs.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        scale * (ksum(xs.iter().map(|x| (x.abs() / scale).powf(r))) / count).powf(1.0 / r)
    };
    let c: Vec<f64> = vals.iter().map(|x| x - mean).collect();
    let cp: Vec<f64> = c.iter().map(|x| pos(*x)).collect();
    let sv: Vec<f64> = v.iter().map(|x| x.sqrt()).collect();
    let svp: Vec<f64> = v_plus.iter().map(|x| x.sqrt()).collect();
    let two_sided = MomentCheckReport::exact(
        "symmetric_two_sided",
        r_values,
        r_values.iter().map(|&r| norm(&c, r)).collect(),
        r_values.iter().map(|&r| d * r.sqrt() * norm(&sv, r)).collect(),
        perms.len(),
    );
    let one_sided = MomentCheckReport::exact(
        "symmetric_one_sided",
        r_values,
        r_values.iter().map(|&r| norm(&cp, r)).collect(),
        r_values.iter().map(|&r| d * r.sqrt() * norm(&svp, r)).collect(),
        perms.len(),
    );
    Ok(SymmetricGroupReport { n, constant: d, two_sided, one_sided })
}

fn check_matrices(matrices: &[Vec<Vec<f64>>]) -> Result<usize> {
    let first = matrices.first().ok_or_else(|| Error::InvalidArgument("empty matrix family".into()))?;
    let n = first.len();
    if n == 0 {
        return Err(Error::InvalidArgument("matrices must be at least 1x1".into()));
    }
    for m in matrices {
        if m.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: m.len() });
        }
        for row in m {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical("non-finite matrix entry".into()));
            }
        }
    }
    Ok(n)
}

/// Z(σ) = sup_a Σ_k a_{kσ(k)}.
pub fn hoeffding_z(matrices: &[Vec<Vec<f64>>], perm: &[usize]) -> f64 {
    matrices.iter().map(|a| ksum(perm.iter().enumerate().map(|(k, &j)| a[k][j]))).fold(f64::NEG_INFINITY, f64::max)
}

/// sup_a (Σ_k a²_{kσ(k)})^{1/2} and max_k sup_a |a_{kσ(k)}|.
fn ingredients_at(matrices: &[Vec<Vec<f64>>], perm: &[usize]) -> (f64, f64) {
    let mut s = 0.0f64;
    let mut m = 0.0f64;
    for a in matrices {
        s = s.max(ksum(perm.iter().enumerate().map(|(k, &j)| a[k][j] * a[k][j])).sqrt());
        for (k, &j) in perm.iter().enumerate() {
            m = m.max(a[k][j].abs());
        }
    }
    (s, m)
}

/// Evaluate `g` on all permutations (n ≤ limit) or on `opts.samples` uniform
/// ones drawn in fixed replica blocks.
fn over_permutations<T, G>(n: usize, limit: usize, opts: &McOptions, g: G) -> (Vec<T>, Method)
where
    T: Send,
    G: Fn(&[usize]) -> T + Sync + Send,
{
    if n <= limit {
        return (permutations(n).iter().map(|p| g(p)).collect(), Method::Exact);
    }
    let ranges = replica_ranges(opts.samples);
    let blocks = map_indexed(opts.exec, ranges.len(), |b| {
        let mut rng = stream_rng(opts.seed, stream_id(HOEFFDING_STREAM, b as u64));
        let mut perm: Vec<usize> = (0..n).collect();
        ranges[b]
            .clone()
            .map(|_| {
                perm.shuffle(&mut rng);
                g(&perm)
            })
            .collect::<Vec<T>>()
    });
    (blocks.into_iter().flatten().collect(), Method::MonteCarlo)
}

/// Exact (n ≤ 8) or Monte Carlo value of ‖(Z − EZ)₊‖_r, with standard error
/// (zero when exact). The Monte Carlo version centres at the sample mean.
pub fn hoeffding_excess_moment(matrices: &[Vec<Vec<f64>>], r: f64, opts: &McOptions) -> Result<(f64, f64)> {
    let n = check_matrices(matrices)?;
    let (z, method) = over_permutations(n, 8, opts, |p| hoeffding_z(matrices, p));
    let mean = ksum(z.iter().copied()) / z.len() as f64;
    let pw: Vec<f64> = z.iter().map(|v| pos(v - mean).powf(r)).collect();
    let (m, se) = mean_stderr(&pw);
    let val = m.powf(1.0 / r);
    let se = match method {
        Method::Exact => 0.0,
        Method::MonteCarlo if m > 0.0 => val / (r * m) * se,
        Method::MonteCarlo => 0.0,
    };
    Ok((val, se))
}

/// Ingredients of the supremum bound at one r and the resulting bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HoeffdingBound {
    pub n: usize,
    pub r: f64,
    /// A = E sup_a (Σ_k a²_{kσ(k)})^{1/2}.
    pub a: f64,
    /// B_r = ‖max_k sup_a |a_{kσ(k)}|‖_r.
    pub b_r: f64,
    pub a_stderr: f64,
    pub b_stderr: f64,
    /// 4D√r A + 10D² r B_r, a bound on ‖(Z − EZ)₊‖_r.
    pub bound: f64,
    /// e times the bound: P(Z ≥ EZ + threshold) ≤ e^{2−r}.
    pub tail_threshold: f64,
    pub tail_probability: f64,
    pub method: Method,
    pub sample_count: usize,
    pub seed: u64,
    #[serde(skip)]
    m_values: Vec<f64>,
}

impl HoeffdingBound {
    fn b_at(&self, r: f64) -> f64 {
        let scale = self.m_values.iter().fold(0.0f64, |a, x| a.max(*x));
        if scale == 0.0 {
            return 0.0;
        }
        let m = ksum(self.m_values.iter().map(|v| (v / scale).powf(r))) / self.m_values.len() as f64;
        scale * m.powf(1.0 / r)
    }

    /// 4D√r A + 10D² r B_r at another order r, reusing the sampled ingredients.
    pub fn bound_at(&self, r: f64) -> f64 {
        let d = symmetric_group_constant();
        4.0 * d * r.sqrt() * self.a + 10.0 * d * d * r * self.b_at(r)
    }

    /// Tail bound at deviation t ≥ 0: e^{2−r} for the largest r ≥ 2 whose
    /// threshold e·bound_at(r) does not exceed t, and 1 otherwise.
    pub fn tail_bound(&self, t: f64) -> f64 {
        let thr = |r: f64| std::f64::consts::E * self.bound_at(r);
        if !(t >= thr(2.0)) {
            return 1.0;
        }
        let (mut lo, mut hi) = (2.0f64, 4.0f64);
        while thr(hi) <= t && hi < 1e6 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if thr(mid) <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (2.0 - lo).exp().min(1.0)
    }
}

/// Supremum bound for Z = sup_a Σ_k a_{kσ(k)} over a family of n×n matrices;
/// A and B_r are exact for n ≤ 6 and Monte Carlo otherwise.
pub fn hoeffding_supremum_bound(matrices: &[Vec<Vec<f64>>], r: f64, opts: &McOptions) -> Result<HoeffdingBound> {
    if !(r >= 2.0) || !r.is_finite() {
        return Err(Error::Domain(format!("moment order must satisfy r >= 2, got {r}")));
    }
    let n = check_matrices(matrices)?;
    let (pairs, method) = over_permutations(n, EXACT_LIMIT, opts, |p| ingredients_at(matrices, p));
    let s_values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let m_values: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (a, a_se) = mean_stderr(&s_values);
    let mut out = HoeffdingBound {
        n,
        r,
        a,
        b_r: 0.0,
        a_stderr: 0.0,
        b_stderr: 0.0,
        bound: 0.0,
        tail_threshold: 0.0,
        tail_probability: (2.0 - r).exp(),
        method,
        sample_count: m_values.len(),
        seed: if method == Method::Exact { 0 } else { opts.seed },
        m_values,
    };
    out.b_r = out.b_at(r);
    if method == Method::MonteCarlo {
        out.a_stderr = a_se;
        let pw: Vec<f64> = out.m_values.iter().map(|v| v.powf(r)).collect();
        let (m, se) = mean_stderr(&pw);
        out.b_stderr = if m > 0.0 { out.b_r / (r * m) * se } else { 0.0 };
    }
    out.bound = out.bound_at(r);
    out.tail_threshold = std::f64::consts::E * out.bound;
    Ok(out)
}

/// Encoding of sampling without replacement: for each vector x ∈ ℝ^n the
/// matrix a^x_{ij} = x_j for rows i < m and 0 otherwise, so that
/// Z = sup_x Σ_{k<m} x_{σ(k)}.
pub fn sampling_without_replacement_matrices(xs: &[Vec<f64>], m: usize) -> Result<Vec<Vec<Vec<f64>>>> {
    let n = xs.first().map(|x| x.len()).ok_or_else(|| Error::InvalidArgument("empty vector family".into()))?;
    if m > n {
        return Err(Error::InvalidArgument(format!("sample size {m} exceeds population size {n}")));
    }
    xs.iter()
        .map(|x| {
            if x.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: x.len() });
            }
            Ok((0..n).map(|i| if i < m { x.clone() } else { vec![0.0; n] }).collect())
        })
        .collect()
}
