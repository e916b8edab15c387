//! Partition norms of d-indexed arrays, moment envelopes of Gaussian chaoses
//! and higher-order tail bounds.
//!
//! For a partition 𝓘 = {I_1, …, I_k} of [d],
//! ‖A‖_𝓘 = sup Σ_i a_i Π_l x^l_{i_{I_l}} over unit vectors x^l ∈ ℝ^{n^{|I_l|}}.
//! The single-block norm is the Euclidean norm of the flattened array and a
//! two-block norm is the spectral norm of a matricization; finer partitions
//! are handled by alternating maximization.

mod gaussian;
mod gradient;
mod norms;
mod tail;

pub use gaussian::{
    calibrate_chaos_constant, chaos_envelope, chaos_mc_moments, chaos_moment_bound, ChaosCalibration, McMoment,
};
pub use gradient::{
    expected_gradient, gradient_tensor, moment_constant, moment_decomposition_bound, oriented_gradient, BinaryCube,
    DecompositionReport,
};
pub use norms::{
    all_partition_norms, alternating_maximization, matricization, partition_norm, AmOptions, AmResult, NormMethod,
    PartitionNorm,
};
pub use tail::{
    higher_order_tail, polynomial_eta, polynomial_tail_bound, triangle_count_tail_bound, triangle_eta,
    triangle_expected_gradients, TailParameters,
};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{stream_id, stream_rng};
use crate::numeric::ksum;

const TENSOR_STREAM: u32 = 0x7e5;

/// Largest supported order.
pub const MAX_ORDER: usize = 4;
/// Cap on the number of stored entries n^d.
pub const MAX_ENTRIES: usize = 1 << 22;

fn entry_count(order: usize, dim: usize) -> Result<usize> {
    dim.checked_pow(order as u32)
        .filter(|c| *c <= MAX_ENTRIES)
        .ok_or(Error::TooLarge { states: usize::MAX, limit: MAX_ENTRIES })
}

/// Dense array (a_i)_{i ∈ [n]^d} in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTensor")]
pub struct IndexedTensor {
    order: usize,
    dim: usize,
    entries: Vec<f64>,
}

#[derive(Deserialize)]
struct RawTensor {
    order: usize,
    dim: usize,
    entries: Vec<f64>,
}

impl TryFrom<RawTensor> for IndexedTensor {
    type Error = Error;

    fn try_from(r: RawTensor) -> Result<Self> {
        IndexedTensor::new(r.order, r.dim, r.entries)
    }
}

impl IndexedTensor {
    pub fn new(order: usize, dim: usize, entries: Vec<f64>) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::InvalidArgument(format!("tensor order must be in 1..={MAX_ORDER}, got {order}")));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("tensor dimension must be positive".into()));
        }
        let count = entry_count(order, dim)?;
        if entries.len() != count {
            return Err(Error::DimensionMismatch { expected: count, got: entries.len() });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite tensor entry".into()));
        }
        Ok(IndexedTensor { order, dim, entries })
    }

    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        Self::new(order, dim, vec![0.0; entry_count(order, dim)?])
    }

    /// Build from a function of the multi-index.
    pub fn from_fn<F: FnMut(&[usize]) -> f64>(order: usize, dim: usize, mut f: F) -> Result<Self> {
        let mut t = Self::zeros(order, dim)?;
        let mut idx = vec![0usize; order];
        for flat in 0..t.entries.len() {
            t.unflatten_into(flat, &mut idx);
            t.entries[flat] = f(&idx);
        }
        if t.entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite tensor entry".into()));
        }
        Ok(t)
    }

    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("matrix must be square".into()));
        }
        Self::new(2, n, rows.iter().flatten().copied().collect())
    }

    pub fn vector(v: Vec<f64>) -> Result<Self> {
        let n = v.len();
        Self::new(1, n, v)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.entries[self.flatten(idx)]
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn unflatten_into(&self, mut flat: usize, idx: &mut [usize]) {
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.dim;
            flat /= self.dim;
        }
    }

    /// Euclidean norm of the flattened array, i.e. ‖A‖_{[d]}.
    pub fn frobenius(&self) -> f64 {
        let scale = self.entries.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        scale * ksum(self.entries.iter().map(|x| (x / scale) * (x / scale))).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|v| *v == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        IndexedTensor { order: self.order, dim: self.dim, entries: self.entries.iter().map(|v| c * v).collect() }
    }

    /// Array with i.i.d. standard Gaussian entries; member `index` of the
    /// family generated from `seed`.
    pub fn gaussian(order: usize, dim: usize, seed: u64, index: u64) -> Result<Self> {
        use rand_distr::{Distribution, StandardNormal};
        let len = entry_count(order, dim)?;
        let mut rng = stream_rng(seed, stream_id(TENSOR_STREAM, index));
        IndexedTensor::new(order, dim, (0..len).map(|_| StandardNormal.sample(&mut rng)).collect())
    }
}

/// Set partition of the axes {0, …, d−1}; displayed 1-based as `{1,2}{3}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct Partition {
    order: usize,
    blocks: Vec<Vec<usize>>,
}

impl TryFrom<Vec<Vec<usize>>> for Partition {
    type Error = Error;

    /// Blocks are given 1-based, as in `[[1, 2], [3]]`.
    fn try_from(blocks: Vec<Vec<usize>>) -> Result<Self> {
        if blocks.iter().flatten().any(|&a| a == 0) {
            return Err(Error::InvalidArgument("partition blocks are 1-based".into()));
        }
        let order = blocks.iter().map(|b| b.len()).sum();
        Partition::new(order, blocks.into_iter().map(|b| b.into_iter().map(|a| a - 1).collect()).collect())
    }
}

impl From<Partition> for Vec<Vec<usize>> {
    fn from(p: Partition) -> Self {
        p.blocks.into_iter().map(|b| b.into_iter().map(|a| a + 1).collect()).collect()
    }
}

impl Partition {
    /// Validates disjointness, coverage of 0..order and nonempty blocks;
    /// blocks are sorted internally and ordered by their smallest element.
    pub fn new(order: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        if blocks.iter().any(|b| b.is_empty()) {
            return Err(Error::InvalidArgument("partition has an empty block".into()));
        }
        let mut seen = vec![false; order];
        for &a in blocks.iter().flatten() {
            if a >= order || seen[a] {
                return Err(Error::InvalidArgument(format!("axis {} repeated or out of range", a + 1)));
            }
            seen[a] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument("partition does not cover every axis".into()));
        }
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(Partition { order, blocks })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Single block {[d]}.
    pub fn whole(order: usize) -> Self {
        Partition { order, blocks: vec![(0..order).collect()] }
    }

    /// Singletons {1}…{d}.
    pub fn finest(order: usize) -> Self {
        Partition { order, blocks: (0..order).map(|a| vec![a]).collect() }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocks {
            let inner: Vec<String> = b.iter().map(|a| (a + 1).to_string()).collect();
            write!(f, "{{{}}}", inner.join(","))?;
        }
        Ok(())
    }
}

/// All set partitions of [d], 1 ≤ d ≤ 4, in order of their restricted growth
/// strings (so {[d]} comes first and the singletons last).
pub fn enumerate_partitions(d: usize) -> Result<Vec<Partition>> {
    if !(1..=MAX_ORDER).contains(&d) {
        return Err(Error::InvalidArgument(format!("partitions supported for 1 <= d <= {MAX_ORDER}, got {d}")));
    }
    let mut out = Vec::new();
    let mut rgs = vec![0usize; d];
    fn rec(pos: usize, max: usize, rgs: &mut Vec<usize>, out: &mut Vec<Partition>) {
        let d = rgs.len();
        if pos == d {
            let k = rgs.iter().max().unwrap() + 1;
            let mut blocks = vec![Vec::new(); k];
            for (a, &b) in rgs.iter().enumerate() {
                blocks[b].push(a);
            }
            out.push(Partition { order: d, blocks });
            return;
        }
        for v in 0..=max + 1 {
            rgs[pos] = v;
            rec(pos + 1, max.max(v), rgs, out);
        }
    }
    // The first axis always opens block 0.
    if d == 1 {
        out.push(Partition::whole(1));
        return Ok(out);
    }
    rec(1, 0, &mut rgs, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let counts: Vec<usize> = (1..=4).map(|d| enumerate_partitions(d).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 15]);
        assert!(enumerate_partitions(0).is_err());
        assert!(enumerate_partitions(5).is_err());
    }

    #[test]
    fn order_of_partitions() {
        let p = enumerate_partitions(2).unwrap();
        assert_eq!(p[0].to_string(), "{1,2}");
        assert_eq!(p[1].to_string(), "{1}{2}");
        let p3: Vec<String> = enumerate_partitions(3).unwrap().iter().map(|p| p.to_string()).collect();
        assert_eq!(p3, vec!["{1,2,3}", "{1,2}{3}", "{1,3}{2}", "{1}{2,3}", "{1}{2}{3}"]);
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::new(3, vec![vec![0, 1]]).is_err());
        assert!(Partition::new(2, vec![vec![0], vec![]]).is_err());
        let p: Partition = serde_json::from_str("[[3], [1, 2]]").unwrap();
        assert_eq!(p.to_string(), "{1,2}{3}");
    }

    #[test]
    fn tensor_indexing_and_json() {
        let t = IndexedTensor::from_fn(3, 2, |i| (i[0] * 4 + i[1] * 2 + i[2]) as f64).unwrap();
        assert_eq!(t.entries(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let json = serde_json::to_string(&t).unwrap();
        let back: IndexedTensor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
        assert!(serde_json::from_str::<IndexedTensor>(r#"{"order":2,"dim":2,"entries":[1,2,3]}"#).is_err());
    }
}
