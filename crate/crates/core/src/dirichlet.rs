//! Reversible Markov kernels on a [`FiniteSpace`] and the quadratic forms
//! they induce: the generator, the Dirichlet form, the carré du champ and its
//! one-sided variant.
//!
//! Rates are stored row-compressed (only nonzero off-diagonal entries), so all
//! operators cost O(number of transitions). Diagonal entries are irrelevant to
//! every form here and are dropped on construction.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ksum, pos, KahanSum};
use crate::space::FiniteSpace;

/// Relative tolerance of the detailed-balance check.
pub const BALANCE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    space: FiniteSpace,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Outcome of [`Kernel::check_detailed_balance`].
#[derive(Debug, Clone, Serialize)]
pub struct BalanceReport {
    pub max_violation: f64,
    pub worst_pair: Option<(usize, usize)>,
    /// Pairs whose violation exceeds the relative tolerance.
    pub violations: Vec<(usize, usize, f64)>,
}

impl BalanceReport {
    pub fn is_reversible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Kernel {
    /// Builds a kernel from `(x, y, rate)` triplets and checks detailed balance.
    pub fn new(space: FiniteSpace, rates: Vec<(usize, usize, f64)>) -> Result<Self> {
        let k = Self::new_unchecked(space, rates)?;
        let report = k.check_detailed_balance();
        if let Some(&(x, y, violation)) = report.violations.iter().max_by(|a, b| a.2.total_cmp(&b.2)) {
            return Err(Error::NotReversible { x, y, violation });
        }
        Ok(k)
    }

    /// Builds a kernel without the reversibility check. Index and sign checks
    /// still apply; duplicate triplets are summed.
    pub fn new_unchecked(space: FiniteSpace, rates: Vec<(usize, usize, f64)>) -> Result<Self> {
        let n = space.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (x, y, q) in rates {
            if x >= n || y >= n {
                return Err(Error::InvalidArgument(format!("rate ({x}, {y}) out of range for {n} states")));
            }
            if !q.is_finite() || q < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "rate ({x}, {y}) = {q} is not a finite nonnegative number"
                )));
            }
            if x != y && q > 0.0 {
                rows[x].push((y, q));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut i = 0;
            while i < row.len() {
                let y = row[i].0;
                let mut q = 0.0;
                while i < row.len() && row[i].0 == y {
                    q += row[i].1;
                    i += 1;
                }
                cols.push(y);
                vals.push(q);
            }
            row_ptr.push(cols.len());
        }
        Ok(Self { space, row_ptr, cols, vals })
    }

    /// Builds a kernel from a dense rate matrix given by rows.
    pub fn from_dense(space: FiniteSpace, q: &[Vec<f64>]) -> Result<Self> {
        let n = space.len();
        if q.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: q.len() });
        }
        let mut t = Vec::new();
        for (x, row) in q.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            for (y, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((x, y, v));
                }
            }
        }
        Self::new(space, t)
    }

    pub fn space(&self) -> &FiniteSpace {
        &self.space
    }

    pub fn mu(&self) -> &[f64] {
        self.space.mu()
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// Number of stored (nonzero, off-diagonal) transitions.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzero transitions out of `x` as `(y, rate)`.
    pub fn row(&self, x: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[x]..self.row_ptr[x + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn rate(&self, x: usize, y: usize) -> f64 {
        let r = self.row_ptr[x]..self.row_ptr[x + 1];
        match self.cols[r.clone()].binary_search(&y) {
            Ok(i) => self.vals[r.start + i],
            Err(_) => 0.0,
        }
    }

    /// Total jump rate out of each state.
    pub fn exit_rates(&self) -> Vec<f64> {
        (0..self.len()).map(|x| ksum(self.row(x).map(|(_, q)| q))).collect()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.len()).flat_map(|x| self.row(x).map(move |(y, q)| (x, y, q))).collect()
    }

    /// Same chain with every rate multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {c}")));
        }
        let mut k = self.clone();
        k.vals.iter_mut().for_each(|v| *v *= c);
        Ok(k)
    }

    /// Checks `|q_xy μ_x − q_yx μ_y| ≤ tol · max(q_xy μ_x, q_yx μ_y, 1e-30)` for
    /// every pair with a nonzero rate in either direction.
    pub fn check_detailed_balance(&self) -> BalanceReport {
        let mu = self.mu();
        let mut lookup: HashMap<(usize, usize), f64> = HashMap::with_capacity(self.nnz());
        for (x, y, q) in self.triplets() {
            lookup.insert((x, y), q);
        }
        let mut max_violation = 0.0f64;
        let mut worst = None;
        let mut violations = Vec::new();
        let mut visit = |x: usize, y: usize, qxy: f64, qyx: f64| {
            let a = qxy * mu[x];
            let b = qyx * mu[y];
            let v = (a - b).abs();
            if v > max_violation {
                max_violation = v;
                worst = Some((x, y));
            }
            if v > BALANCE_TOLERANCE * a.max(b).max(1e-30) {
                violations.push((x, y, v));
            }
        };
        for (&(x, y), &qxy) in lookup.iter() {
            let qyx = lookup.get(&(y, x)).copied().unwrap_or(0.0);
            // Visit each unordered pair once: from the smaller index, or from
            // the only direction present.
            if x < y || qyx == 0.0 {
                visit(x, y, qxy, qyx);
            }
        }
        violations.sort_by_key(|v| (v.0, v.1));
        BalanceReport { max_violation, worst_pair: worst, violations }
    }

    /// max_y |(μL)_y|; zero exactly when μ is stationary.
    pub fn stationarity_residual(&self) -> f64 {
        let n = self.len();
        let mu = self.mu();
        let mut inflow = vec![KahanSum::new(); n];
        for x in 0..n {
            for (y, q) in self.row(x) {
                inflow[y].add(mu[x] * q);
            }
        }
        let exit = self.exit_rates();
        (0..n).map(|y| (inflow[y].value() - mu[y] * exit[y]).abs()).fold(0.0, f64::max)
    }

    /// Communicating classes of the symmetrized transition graph, each sorted,
    /// ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (x, y, _) in self.triplets() {
            adj[x].push(y);
            adj[y].push(x);
        }
        let mut comp = vec![usize::MAX; n];
        let mut out = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![s];
            comp[s] = id;
            let mut i = 0;
            while i < members.len() {
                let x = members[i];
                for &y in &adj[x] {
                    if comp[y] == usize::MAX {
                        comp[y] = id;
                        members.push(y);
                    }
                }
                i += 1;
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn ensure_irreducible(&self) -> Result<()> {
        let classes = self.components();
        if classes.len() > 1 {
            return Err(Error::Reducible { components: classes.len(), classes });
        }
        Ok(())
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: f.len() });
        }
        Ok(())
    }

    /// Lf(x) = Σ_y q_xy (f(y) − f(x)).
    pub fn generator_apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f)?;
        let mut out = vec![0.0; self.len()];
        self.neg_generator_into(f, &mut out);
        out.iter_mut().for_each(|v| *v = -*v);
        Ok(out)
    }

    /// Writes (−Lf)(x) = Σ_y q_xy (f(x) − f(y)) into `out`.
    pub(crate) fn neg_generator_into(&self, f: &[f64], out: &mut [f64]) {
        for x in 0..self.len() {
            let fx = f[x];
            let mut s = 0.0;
            for (y, q) in self.row(x) {
                s += q * (fx - f[y]);
            }
            out[x] = s;
        }
    }

    /// Ɛ(f, g) = ½ Σ_x μ_x Σ_y q_xy (f(y) − f(x))(g(y) − g(x)).
    pub fn dirichlet_form(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        self.check_len(g)?;
        Ok(self.dirichlet_unchecked(f, g))
    }

    pub(crate) fn dirichlet_unchecked(&self, f: &[f64], g: &[f64]) -> f64 {
        let mu = self.mu();
        let mut acc = KahanSum::new();
        for x in 0..self.len() {
            for (y, q) in self.row(x) {
                acc.add(0.5 * mu[x] * q * (f[y] - f[x]) * (g[y] - g[x]));
            }
        }
        acc.value()
    }

    /// Ɛ(f, g) via the one-sided representation
    /// Σ_x μ_x Σ_y q_xy (f(x) − f(y))₊ (g(x) − g(y)); equal to
    /// [`Self::dirichlet_form`] for reversible kernels.
    pub fn dirichlet_form_one_sided(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        self.check_len(g)?;
        let mu = self.mu();
        let mut acc = KahanSum::new();
        for x in 0..self.len() {
            for (y, q) in self.row(x) {
                acc.add(mu[x] * q * pos(f[x] - f[y]) * (g[x] - g[y]));
            }
        }
        Ok(acc.value())
    }

    /// Γ(f, g)(x) = ½ Σ_y q_xy (f(y) − f(x))(g(y) − g(x)).
    pub fn carre_du_champ(&self, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f)?;
        self.check_len(g)?;
        Ok((0..self.len()).map(|x| ksum(self.row(x).map(|(y, q)| 0.5 * q * (f[y] - f[x]) * (g[y] - g[x])))).collect())
    }

    /// Γ₊(f)(x) = Σ_y q_xy (f(x) − f(y))₊².
    pub fn gamma_plus(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f)?;
        Ok((0..self.len())
            .map(|x| {
                ksum(self.row(x).map(|(y, q)| {
                    let d = pos(f[x] - f[y]);
                    q * d * d
                }))
            })
            .collect())
    }

    /// Dense copy of the rate matrix (diagonal zero).
    pub fn dense_rates(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for (x, y, q) in self.triplets() {
            m[(x, y)] = q;
        }
        m
    }
}

#[derive(Serialize, Deserialize)]
struct RawKernel {
    space: FiniteSpace,
    rates: Vec<(usize, usize, f64)>,
}

impl Serialize for Kernel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawKernel { space: self.space.clone(), rates: self.triplets() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Kernel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawKernel::deserialize(d)?;
        Kernel::new(raw.space, raw.rates).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flip() -> Kernel {
        Kernel::new(FiniteSpace::uniform(2).unwrap(), vec![(0, 1, 1.0), (1, 0, 1.0)]).unwrap()
    }

    #[test]
    fn flip_chain_forms() {
        let k = flip();
        let f = [0.0, 1.0];
        assert!((k.dirichlet_form(&f, &f).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(k.carre_du_champ(&f, &f).unwrap(), vec![0.5, 0.5]);
        assert_eq!(k.gamma_plus(&f).unwrap(), vec![0.0, 1.0]);
        assert_eq!(k.generator_apply(&f).unwrap(), vec![1.0, -1.0]);
    }

    #[test]
    fn detects_irreversibility() {
        let s = FiniteSpace::new(vec!["a".into(), "b".into()], vec![1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let k = Kernel::new_unchecked(s.clone(), vec![(0, 1, 2.0), (1, 0, 0.5)]).unwrap();
        let r = k.check_detailed_balance();
        assert!((r.max_violation - 1.0 / 3.0).abs() < 1e-15);
        assert!(!r.is_reversible());
        assert!(Kernel::new(s, vec![(0, 1, 2.0), (1, 0, 0.5)]).is_err());
    }

    #[test]
    fn one_way_rate_is_a_violation() {
        let k = Kernel::new_unchecked(FiniteSpace::uniform(2).unwrap(), vec![(0, 1, 1.0)]).unwrap();
        assert!(!k.check_detailed_balance().is_reversible());
    }

    #[test]
    fn reducible_detected() {
        let k = Kernel::new(FiniteSpace::uniform(4).unwrap(), vec![(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)])
            .unwrap();
        assert_eq!(k.components(), vec![vec![0, 1], vec![2, 3]]);
        assert!(matches!(k.ensure_irreducible(), Err(Error::Reducible { components: 2, .. })));
    }

    #[test]
    fn duplicates_are_summed() {
        let k = Kernel::new(FiniteSpace::uniform(2).unwrap(), vec![(0, 1, 0.5), (0, 1, 0.5), (1, 0, 1.0), (0, 0, 7.0)])
            .unwrap();
        assert_eq!(k.nnz(), 2);
        assert_eq!(k.rate(0, 1), 1.0);
        assert_eq!(k.rate(0, 0), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let k = flip();
        let js = serde_json::to_string(&k).unwrap();
        let back: Kernel = serde_json::from_str(&js).unwrap();
        assert_eq!(k, back);
    }
}
