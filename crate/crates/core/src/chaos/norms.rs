use std::cmp::Ordering;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{enumerate_partitions, IndexedTensor, Partition};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, stream_id, stream_rng, ExecMode};

const AM_STREAM: u32 = 0xa11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmOptions {
    pub starts: usize,
    pub max_sweeps: usize,
    /// Relative improvement below which a sweep counts as stalled; three
    /// stalled sweeps in a row stop the run.
    pub tol: f64,
    pub seed: u64,
    #[serde(default)]
    pub exec: ExecMode,
}

impl Default for AmOptions {
    fn default() -> Self {
        AmOptions { starts: 64, max_sweeps: 2000, tol: 1e-10, seed: 0, exec: ExecMode::Parallel }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmResult {
    pub value: f64,
    /// Unit vector per block, indexed by the block's sub-multi-index.
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
    pub start: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    Frobenius,
    Svd,
    AlternatingMaximization,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionNorm {
    pub partition: String,
    pub blocks: usize,
    pub value: f64,
    /// min over blocks of the spectral norm of the block-vs-rest
    /// matricization; equals `value` for exact methods.
    pub upper_bound: f64,
    pub method: NormMethod,
    /// True when `value` is only certified from below.
    pub lower_bound_only: bool,
}

/// Position of every entry inside each block's vector.
fn block_offsets(a: &IndexedTensor, blocks: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = a.dim();
    let mut idx = vec![0usize; a.order()];
    let mut out = vec![Vec::with_capacity(a.entries().len()); blocks.len()];
    for flat in 0..a.entries().len() {
        a.unflatten_into(flat, &mut idx);
        for (l, b) in blocks.iter().enumerate() {
            out[l].push(b.iter().fold(0, |acc, &ax| acc * n + idx[ax]));
        }
    }
    out
}

/// Matrix with rows indexed by the axes in `rows` and columns by the rest.
pub fn matricization(a: &IndexedTensor, rows: &[usize]) -> DMatrix<f64> {
    let rest: Vec<usize> = (0..a.order()).filter(|ax| !rows.contains(ax)).collect();
    let n = a.dim();
    let nr = n.pow(rows.len() as u32);
    let nc = n.pow(rest.len() as u32);
    let mut m = DMatrix::zeros(nr, nc);
    let mut idx = vec![0usize; a.order()];
    for (flat, &v) in a.entries().iter().enumerate() {
        a.unflatten_into(flat, &mut idx);
        let r = rows.iter().fold(0, |acc, &ax| acc * n + idx[ax]);
        let c = rest.iter().fold(0, |acc, &ax| acc * n + idx[ax]);
        m[(r, c)] = v;
    }
    m
}

fn top_singular(m: DMatrix<f64>) -> (f64, Vec<f64>) {
    if m.ncols() == 0 || m.nrows() == 0 {
        return (0.0, vec![]);
    }
    let svd = m.svd(true, false);
    let (k, s) =
        svd.singular_values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    let u = svd.u.expect("requested");
    (s, u.column(k).iter().copied().collect())
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

struct Sweeper<'a> {
    entries: &'a [f64],
    offsets: Vec<Vec<usize>>,
    lens: Vec<usize>,
}

impl Sweeper<'_> {
    /// Replace block `l` by the normalized contraction of A against the other
    /// blocks; returns the new objective value.
    fn update(&self, xs: &mut [Vec<f64>], l: usize) -> f64 {
        let mut g = vec![0.0; self.lens[l]];
        for (flat, &a) in self.entries.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let mut w = a;
            for (m, x) in xs.iter().enumerate() {
                if m != l {
                    w *= x[self.offsets[m][flat]];
                }
            }
            g[self.offsets[l][flat]] += w;
        }
        let norm = normalize(&mut g);
        if norm > 0.0 {
            xs[l] = g;
        }
        norm
    }

    fn run(&self, mut xs: Vec<Vec<f64>>, opts: &AmOptions) -> (f64, Vec<Vec<f64>>, usize) {
        let k = xs.len();
        let mut value = f64::NEG_INFINITY;
        let mut stalls = 0;
        let mut sweeps = 0;
        while sweeps < opts.max_sweeps {
            sweeps += 1;
            let mut v = 0.0;
            for l in 0..k {
                v = self.update(&mut xs, l);
            }
            if v - value <= opts.tol * v.abs().max(f64::MIN_POSITIVE) {
                stalls += 1;
                if stalls >= 3 {
                    value = value.max(v);
                    break;
                }
            } else {
                stalls = 0;
            }
            value = value.max(v);
        }
        (value, xs, sweeps)
    }
}

fn lex_cmp(a: &[Vec<f64>], b: &[Vec<f64>]) -> Ordering {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Multi-start alternating maximization of Σ_i a_i Π_l x^l_{i_{I_l}} over unit
/// vectors. Start 0 uses the leading singular vectors of the block-vs-rest
/// matricizations, the others are seeded Gaussian. The best start wins, ties
/// broken by lexicographic comparison of the vectors.
pub fn alternating_maximization(a: &IndexedTensor, part: &Partition, opts: &AmOptions) -> Result<AmResult> {
    if part.order() != a.order() {
        return Err(Error::DimensionMismatch { expected: a.order(), got: part.order() });
    }
    if opts.starts == 0 {
        return Err(Error::InvalidArgument("alternating maximization needs at least one start".into()));
    }
    let blocks = part.blocks();
    let n = a.dim();
    let sweeper = Sweeper {
        entries: a.entries(),
        offsets: block_offsets(a, blocks),
        lens: blocks.iter().map(|b| n.pow(b.len() as u32)).collect(),
    };
    let runs = map_indexed(opts.exec, opts.starts, |s| {
        let xs: Vec<Vec<f64>> = if s == 0 {
            blocks
                .iter()
                .map(|b| {
                    let (_, mut u) = top_singular(matricization(a, b));
                    if normalize(&mut u) == 0.0 {
                        u = vec![1.0 / (u.len() as f64).sqrt(); u.len()];
                    }
                    u
                })
                .collect()
        } else {
            let mut rng = stream_rng(opts.seed, stream_id(AM_STREAM, s as u64));
            sweeper
                .lens
                .iter()
                .map(|&len| {
                    let mut v: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut rng)).collect();
                    normalize(&mut v);
                    v
                })
                .collect()
        };
        let (value, vectors, sweeps) = sweeper.run(xs, opts);
        AmResult { value, vectors, sweeps, start: s }
    });
    let best = runs
        .into_iter()
        .reduce(|best, r| match r.value.total_cmp(&best.value) {
            Ordering::Greater => r,
            Ordering::Equal if lex_cmp(&r.vectors, &best.vectors).is_gt() => r,
            _ => best,
        })
        .expect("at least one start");
    Ok(best)
}

/// ‖A‖_𝓘: exact for one block (Euclidean norm) and two blocks (largest
/// singular value of the matricization), alternating maximization otherwise.
pub fn partition_norm(a: &IndexedTensor, part: &Partition, opts: &AmOptions) -> Result<PartitionNorm> {
    if part.order() != a.order() {
        return Err(Error::DimensionMismatch { expected: a.order(), got: part.order() });
    }
    let blocks = part.blocks();
    let name = part.to_string();
    if blocks.len() == 1 {
        let v = a.frobenius();
        return Ok(PartitionNorm {
            partition: name,
            blocks: 1,
            value: v,
            upper_bound: v,
            method: NormMethod::Frobenius,
            lower_bound_only: false,
        });
    }
    let flat_upper =
        blocks.iter().map(|b| top_singular(matricization(a, b)).0).fold(f64::INFINITY, f64::min).min(a.frobenius());
    if blocks.len() == 2 {
        let v = top_singular(matricization(a, &blocks[0])).0;
        return Ok(PartitionNorm {
            partition: name,
            blocks: 2,
            value: v,
            upper_bound: v,
            method: NormMethod::Svd,
            lower_bound_only: false,
        });
    }
    if a.is_zero() {
        return Ok(PartitionNorm {
            partition: name,
            blocks: blocks.len(),
            value: 0.0,
            upper_bound: 0.0,
            method: NormMethod::AlternatingMaximization,
            lower_bound_only: false,
        });
    }
    let am = alternating_maximization(a, part, opts)?;
    Ok(PartitionNorm {
        partition: name,
        blocks: blocks.len(),
        value: am.value.min(flat_upper),
        upper_bound: flat_upper,
        method: NormMethod::AlternatingMaximization,
        lower_bound_only: true,
    })
}

/// Norms for every partition of [d], in [`enumerate_partitions`] order.
pub fn all_partition_norms(a: &IndexedTensor, opts: &AmOptions) -> Result<Vec<PartitionNorm>> {
    enumerate_partitions(a.order())?.iter().map(|p| partition_norm(a, p, opts)).collect()
}
