//! Ratio functionals R(u) = N(u) / D(u) whose infima are the functional
//! inequality constants, parametrized by a log-variable u with f = e^u.
//!
//! All ratios are invariant under u ↦ u + c, so evaluation shifts u by its
//! maximum first. Denominators are computed as sums of nonnegative terms
//! around the normalized function, which keeps them accurate near constants.

use serde::{Deserialize, Serialize};

use crate::dirichlet::Kernel;
use crate::numeric::KahanSum;

/// Denominators (for the normalized function) below this are rejected.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstantKind {
    /// λ·Var(f) ≤ Ɛ(f, f)
    Poincare,
    /// ρ₀·Ent(f) ≤ Ɛ(f, log f)
    ModifiedLogSobolev,
    /// ρ₁·Ent(g²) ≤ Ɛ(g, g)
    LogSobolev,
    /// α·(μ(f^p) − μ(f)^p) ≤ (p/2)·Ɛ(f, f^{p−1})
    BecknerP { p: f64 },
    /// β·(μ(g²) − μ(g^q)^{2/q}) ≤ (2−q)·Ɛ(g, g)
    BecknerQ { q: f64 },
}

impl ConstantKind {
    pub fn symbol(&self) -> String {
        match self {
            ConstantKind::Poincare => "lambda".into(),
            ConstantKind::ModifiedLogSobolev => "rho0".into(),
            ConstantKind::LogSobolev => "rho1".into(),
            ConstantKind::BecknerP { p } => format!("alpha_{p}"),
            ConstantKind::BecknerQ { q } => format!("beta_{q}"),
        }
    }

    /// Limit of the ratio along f = 1 + εφ, ε → 0, with φ the gap eigenfunction.
    pub fn near_constant_limit(&self, gap: f64) -> f64 {
        match self {
            ConstantKind::Poincare => gap,
            ConstantKind::ModifiedLogSobolev => 2.0 * gap,
            ConstantKind::LogSobolev => 0.5 * gap,
            ConstantKind::BecknerP { .. } => gap,
            ConstantKind::BecknerQ { .. } => gap,
        }
    }

    /// Whether the optimization variable exponentiates to f (mLSI, Beckner-p)
    /// or to g with f = g² (LSI, Beckner-q).
    pub(crate) fn uses_square_root(&self) -> bool {
        matches!(self, ConstantKind::LogSobolev | ConstantKind::BecknerQ { .. })
    }
}

/// Value of N/D for a given positive function, computed directly from the
/// definitions. Returns `None` for degenerate denominators.
pub fn ratio_of(kernel: &Kernel, kind: ConstantKind, f: &[f64]) -> Option<f64> {
    let space = kernel.space();
    let (num, den) = match kind {
        ConstantKind::Poincare => (kernel.dirichlet_unchecked(f, f), space.variance(f).ok()?),
        ConstantKind::ModifiedLogSobolev => {
            let lf: Vec<f64> = f.iter().map(|x| x.ln()).collect();
            (kernel.dirichlet_unchecked(f, &lf), space.entropy(f).ok()?)
        }
        ConstantKind::LogSobolev => {
            let f2: Vec<f64> = f.iter().map(|x| x * x).collect();
            (kernel.dirichlet_unchecked(f, f), space.entropy(&f2).ok()?)
        }
        ConstantKind::BecknerP { p } => {
            let g: Vec<f64> = f.iter().map(|x| x.powf(p - 1.0)).collect();
            (0.5 * p * kernel.dirichlet_unchecked(f, &g), space.p_defect(f, p).ok()?)
        }
        ConstantKind::BecknerQ { q } => ((2.0 - q) * kernel.dirichlet_unchecked(f, f), space.q_defect(f, q).ok()?),
    };
    if den <= 0.0 || !num.is_finite() {
        return None;
    }
    Some(num / den)
}

/// Scratch buffers for repeated evaluation on one kernel.
pub(crate) struct Objective<'a> {
    kernel: &'a Kernel,
    kind: ConstantKind,
    f: Vec<f64>,
    g: Vec<f64>,
    lf: Vec<f64>,
    lg: Vec<f64>,
    shifted: Vec<f64>,
}

/// t log t − t + 1 for t = 1 + h, accurate near h = 0.
#[inline]
fn ent_term(t: f64) -> f64 {
    let h = t - 1.0;
    if h.abs() < 0.5 {
        t * h.ln_1p() - h
    } else if t == 0.0 {
        1.0
    } else {
        t * t.ln() - t + 1.0
    }
}

/// t^a − 1 − a(t − 1) for a ≥ 1, accurate near t = 1.
#[inline]
fn power_term(t: f64, a: f64) -> f64 {
    let h = t - 1.0;
    if h.abs() < 0.5 {
        (a * h.ln_1p()).exp_m1() - a * h
    } else {
        t.powf(a) - 1.0 - a * h
    }
}

impl<'a> Objective<'a> {
    pub(crate) fn new(kernel: &'a Kernel, kind: ConstantKind) -> Self {
        let n = kernel.len();
        Self {
            kernel,
            kind,
            f: vec![0.0; n],
            g: vec![0.0; n],
            lf: vec![0.0; n],
            lg: vec![0.0; n],
            shifted: vec![0.0; n],
        }
    }

    fn pairwise(&self, a: &[f64], b: &[f64]) -> f64 {
        let mu = self.kernel.mu();
        let mut acc = KahanSum::new();
        for x in 0..a.len() {
            for (y, q) in self.kernel.row(x) {
                if y > x {
                    // Reversibility: both orientations contribute equally.
                    acc.add(mu[x] * q * (a[y] - a[x]) * (b[y] - b[x]));
                }
            }
        }
        acc.value()
    }

    /// Ratio value and its gradient in u. `None` when the denominator is
    /// degenerate or the evaluation is not finite.
    pub(crate) fn value_grad(&mut self, u: &[f64], grad: &mut [f64]) -> Option<f64> {
        let mu = self.kernel.mu();
        let n = u.len();
        let umax = u.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        for i in 0..n {
            self.shifted[i] = u[i] - umax;
            self.f[i] = self.shifted[i].exp();
        }
        let u = &self.shifted;
        let (num, den, scale);
        match self.kind {
            ConstantKind::Poincare => unreachable!("Poincaré is solved spectrally"),
            ConstantKind::ModifiedLogSobolev => {
                let m: f64 = crate::numeric::kdot(mu, &self.f);
                num = self.pairwise(&self.f, u);
                den = m * kahan(mu.iter().zip(&self.f).map(|(w, x)| w * ent_term(x / m)));
                scale = m;
                if !(den > DEGENERATE_DENOMINATOR * scale) || !num.is_finite() {
                    return None;
                }
                let r = num / den;
                self.kernel.neg_generator_into(&self.f, &mut self.lf);
                self.kernel.neg_generator_into(u, &mut self.lg);
                let lm = m.ln();
                for x in 0..n {
                    let dn = mu[x] * (self.f[x] * self.lg[x] + self.lf[x]);
                    let dd = mu[x] * self.f[x] * (u[x] - lm);
                    grad[x] = (dn - r * dd) / den;
                }
                Some(r)
            }
            ConstantKind::BecknerP { p } => {
                let m: f64 = crate::numeric::kdot(mu, &self.f);
                for x in 0..n {
                    self.g[x] = ((p - 1.0) * u[x]).exp();
                }
                num = 0.5 * p * self.pairwise(&self.f, &self.g);
                let mp = m.powf(p);
                den = mp * kahan(mu.iter().zip(&self.f).map(|(w, x)| w * power_term(x / m, p)));
                scale = mp;
                if !(den > DEGENERATE_DENOMINATOR * scale) || !num.is_finite() {
                    return None;
                }
                let r = num / den;
                self.kernel.neg_generator_into(&self.f, &mut self.lf);
                self.kernel.neg_generator_into(&self.g, &mut self.lg);
                let mp1 = m.powf(p - 1.0);
                for x in 0..n {
                    let dn = 0.5 * p * mu[x] * (self.lg[x] * self.f[x] + (p - 1.0) * self.lf[x] * self.g[x]);
                    let dd = p * mu[x] * self.f[x] * (self.g[x] - mp1);
                    grad[x] = (dn - r * dd) / den;
                }
                Some(r)
            }
            ConstantKind::LogSobolev => {
                // f holds g = e^u here.
                for x in 0..n {
                    self.g[x] = self.f[x] * self.f[x];
                }
                let big_m: f64 = crate::numeric::kdot(mu, &self.g);
                num = self.pairwise(&self.f, &self.f);
                den = big_m * kahan(mu.iter().zip(&self.g).map(|(w, x)| w * ent_term(x / big_m)));
                scale = big_m;
                if !(den > DEGENERATE_DENOMINATOR * scale) || !num.is_finite() {
                    return None;
                }
                let r = num / den;
                self.kernel.neg_generator_into(&self.f, &mut self.lf);
                let lm = big_m.ln();
                for x in 0..n {
                    let dn = 2.0 * mu[x] * self.f[x] * self.lf[x];
                    let dd = 2.0 * mu[x] * self.g[x] * (2.0 * u[x] - lm);
                    grad[x] = (dn - r * dd) / den;
                }
                Some(r)
            }
            ConstantKind::BecknerQ { q } => {
                for x in 0..n {
                    self.g[x] = (q * u[x]).exp();
                }
                let s: f64 = crate::numeric::kdot(mu, &self.g);
                let a = 2.0 / q;
                num = (2.0 - q) * self.pairwise(&self.f, &self.f);
                let sa = s.powf(a);
                den = sa * kahan(mu.iter().zip(&self.g).map(|(w, x)| w * power_term(x / s, a)));
                scale = kahan(mu.iter().zip(&self.f).map(|(w, x)| w * x * x));
                if !(den > DEGENERATE_DENOMINATOR * scale) || !num.is_finite() {
                    return None;
                }
                let r = num / den;
                self.kernel.neg_generator_into(&self.f, &mut self.lf);
                let sa1 = s.powf(a - 1.0);
                for x in 0..n {
                    let dn = 2.0 * (2.0 - q) * mu[x] * self.f[x] * self.lf[x];
                    let dd = 2.0 * mu[x] * (self.f[x] * self.f[x] - sa1 * self.g[x]);
                    grad[x] = (dn - r * dd) / den;
                }
                Some(r)
            }
        }
    }
}

fn kahan<I: Iterator<Item = f64>>(it: I) -> f64 {
    crate::numeric::ksum(it)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::FiniteSpace;

    fn chain3() -> Kernel {
        let s = FiniteSpace::new(vec!["a".into(), "b".into(), "c".into()], vec![0.2, 0.3, 0.5]).unwrap();
        // q_xy = c_xy / mu_x with symmetric conductances c.
        let c = [[0.0, 0.3, 0.1], [0.3, 0.0, 0.4], [0.1, 0.4, 0.0]];
        let mut t = Vec::new();
        for x in 0..3 {
            for y in 0..3 {
                if x != y {
                    t.push((x, y, c[x][y] / s.mu()[x]));
                }
            }
        }
        Kernel::new(s, t).unwrap()
    }

    fn kinds() -> Vec<ConstantKind> {
        vec![
            ConstantKind::ModifiedLogSobolev,
            ConstantKind::LogSobolev,
            ConstantKind::BecknerP { p: 1.3 },
            ConstantKind::BecknerP { p: 2.0 },
            ConstantKind::BecknerQ { q: 1.0 },
            ConstantKind::BecknerQ { q: 1.6 },
        ]
    }

    #[test]
    fn value_matches_direct_definition() {
        let k = chain3();
        let u = [0.3, -0.7, 1.1];
        for kind in kinds() {
            let mut obj = Objective::new(&k, kind);
            let mut g = vec![0.0; 3];
            let v = obj.value_grad(&u, &mut g).unwrap();
            let f: Vec<f64> = u.iter().map(|x: &f64| x.exp()).collect();
            let want = ratio_of(&k, kind, &f).unwrap();
            assert!((v - want).abs() < 1e-12 * want.abs(), "{kind:?}: {v} vs {want}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let k = chain3();
        let u = [0.3, -0.7, 1.1];
        for kind in kinds() {
            let mut obj = Objective::new(&k, kind);
            let mut g = vec![0.0; 3];
            obj.value_grad(&u, &mut g).unwrap();
            for i in 0..3 {
                let h = 1e-6;
                let mut up = u;
                let mut dn = u;
                up[i] += h;
                dn[i] -= h;
                let mut tmp = vec![0.0; 3];
                let fp = obj.value_grad(&up, &mut tmp).unwrap();
                let fm = obj.value_grad(&dn, &mut tmp).unwrap();
                let fd = (fp - fm) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "{kind:?} [{i}]: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn shift_invariance() {
        let k = chain3();
        let mut g = vec![0.0; 3];
        for kind in kinds() {
            let mut obj = Objective::new(&k, kind);
            let a = obj.value_grad(&[0.1, 0.2, -0.4], &mut g).unwrap();
            let b = obj.value_grad(&[5.1, 5.2, 4.6], &mut g).unwrap();
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn degenerate_denominator_rejected() {
        let k = chain3();
        let mut g = vec![0.0; 3];
        let mut obj = Objective::new(&k, ConstantKind::ModifiedLogSobolev);
        assert!(obj.value_grad(&[1.0, 1.0, 1.0], &mut g).is_none());
    }
}
