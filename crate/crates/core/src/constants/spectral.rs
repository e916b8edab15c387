//! Spectral gap of a reversible kernel.
//!
//! The generator is symmetrized as S = D^{1/2} (−L) D^{−1/2} with D = diag(μ).
//! S is positive semidefinite with null vector √μ; the gap is its smallest
//! eigenvalue on the orthogonal complement of √μ.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::dirichlet::Kernel;
use crate::error::{Error, Result};
use crate::exec::{stream_id, stream_rng};
use crate::numeric::kdot;

/// Largest state space solved with a dense eigendecomposition.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone)]
pub struct Spectral {
    pub gap: f64,
    /// Eigenfunction with μ-mean 0 and μ-variance 1.
    pub eigenfunction: Vec<f64>,
    /// Residual ‖Sv − λv‖ of the returned pair.
    pub residual: f64,
    pub method: &'static str,
}

pub fn spectral_gap(kernel: &Kernel, seed: u64) -> Result<Spectral> {
    kernel.ensure_irreducible()?;
    if kernel.len() < 2 {
        return Err(Error::InvalidArgument("spectral gap needs at least two states".into()));
    }
    if kernel.len() <= DENSE_LIMIT {
        dense_gap(kernel)
    } else {
        lanczos_gap(kernel, seed, 400)
    }
}

fn symmetrized(kernel: &Kernel) -> DMatrix<f64> {
    let n = kernel.len();
    let mu = kernel.mu();
    let mut s = DMatrix::zeros(n, n);
    for x in 0..n {
        for (y, q) in kernel.row(x) {
            s[(x, x)] += q;
            let v = 0.5 * q * (mu[x] / mu[y]).sqrt();
            s[(x, y)] -= v;
            s[(y, x)] -= v;
        }
    }
    s
}

fn finish(kernel: &Kernel, v: &[f64], gap: f64, residual: f64, method: &'static str) -> Spectral {
    let mu = kernel.mu();
    let mut phi: Vec<f64> = v.iter().zip(mu).map(|(a, m)| a / m.sqrt()).collect();
    let mean = kernel.space().mean_unchecked(&phi);
    phi.iter_mut().for_each(|p| *p -= mean);
    let var = kdot(&phi.iter().zip(mu).map(|(p, m)| p * m).collect::<Vec<_>>(), &phi);
    let norm = var.sqrt();
    if norm > 0.0 {
        phi.iter_mut().for_each(|p| *p /= norm);
    }
    // Fix the sign so the largest entry is positive.
    let imax = phi
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if phi[imax] < 0.0 {
        phi.iter_mut().for_each(|p| *p = -*p);
    }
    Spectral { gap, eigenfunction: phi, residual, method }
}

pub(crate) fn dense_gap(kernel: &Kernel) -> Result<Spectral> {
    let s = symmetrized(kernel);
    let n = s.nrows();
    let root: DVector<f64> = DVector::from_iterator(n, kernel.mu().iter().map(|m| m.sqrt()));
    let eig = SymmetricEigen::new(s.clone());
    // The null mode is the eigenvector most aligned with √μ.
    let null = (0..n)
        .max_by(|&a, &b| {
            let oa = eig.eigenvectors.column(a).dot(&root).abs();
            let ob = eig.eigenvectors.column(b).dot(&root).abs();
            oa.total_cmp(&ob)
        })
        .ok_or_else(|| Error::Numerical("empty spectrum".into()))?;
    let (idx, gap) = (0..n)
        .filter(|&i| i != null)
        .map(|i| (i, eig.eigenvalues[i]))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .ok_or_else(|| Error::Numerical("no nontrivial eigenvalue".into()))?;
    let v = eig.eigenvectors.column(idx).into_owned();
    let residual = (&s * &v - &v * gap).norm();
    Ok(finish(kernel, v.as_slice(), gap, residual, "dense symmetric eigensolver"))
}

/// Lanczos with full reorthogonalization, deflating √μ.
pub(crate) fn lanczos_gap(kernel: &Kernel, seed: u64, max_steps: usize) -> Result<Spectral> {
    let n = kernel.len();
    let mu = kernel.mu();
    let root: Vec<f64> = mu.iter().map(|m| m.sqrt()).collect();
    let apply = |v: &[f64], out: &mut [f64]| {
        let w: Vec<f64> = v.iter().zip(&root).map(|(a, r)| a / r).collect();
        kernel.neg_generator_into(&w, out);
        out.iter_mut().zip(&root).for_each(|(o, r)| *o *= r);
    };
    let orth = |v: &mut [f64], basis: &[Vec<f64>]| {
        for b in basis {
            let c = kdot(v, b);
            v.iter_mut().zip(b).for_each(|(a, bb)| *a -= c * bb);
        }
    };
    let normalize = |v: &mut [f64]| {
        let nrm = kdot(v, v).sqrt();
        v.iter_mut().for_each(|a| *a /= nrm);
        nrm
    };
    let mut rng = stream_rng(seed, stream_id(0x5a, 0));
    let mut q0: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut unit_root = root.clone();
    normalize(&mut unit_root);
    orth(&mut q0, std::slice::from_ref(&unit_root));
    normalize(&mut q0);
    basis.push(q0);
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let steps = max_steps.min(n - 1);
    let mut w = vec![0.0; n];
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for j in 0..steps {
        apply(&basis[j], &mut w);
        let a = kdot(&w, &basis[j]);
        alpha.push(a);
        orth(&mut w, std::slice::from_ref(&unit_root));
        orth(&mut w, &basis);
        orth(&mut w, &basis);
        let b = kdot(&w, &w).sqrt();
        let m = alpha.len();
        if (j + 1) % 10 == 0 || j + 1 == steps || b < 1e-12 {
            let mut t = DMatrix::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (k, theta) = (0..m).map(|i| (i, eig.eigenvalues[i])).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
            let s = eig.eigenvectors.column(k);
            let resid = (b * s[m - 1]).abs();
            let mut y = vec![0.0; n];
            for (i, bv) in basis.iter().enumerate() {
                y.iter_mut().zip(bv).for_each(|(a, v)| *a += s[i] * v);
            }
            best = Some((theta, y, resid));
            if resid <= 1e-10 * theta.abs().max(1.0) || b < 1e-12 {
                break;
            }
        }
        if b < 1e-12 {
            break;
        }
        beta.push(b);
        let next: Vec<f64> = w.iter().map(|a| a / b).collect();
        basis.push(next);
    }
    let (theta, y, resid) = best.ok_or_else(|| Error::Numerical("Lanczos produced no Ritz pair".into()))?;
    Ok(finish(kernel, &y, theta, resid, "Lanczos with full reorthogonalization"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::FiniteSpace;

    fn path(n: usize) -> Kernel {
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.push((i, i + 1, 1.0));
            t.push((i + 1, i, 1.0));
        }
        Kernel::new(FiniteSpace::uniform(n).unwrap(), t).unwrap()
    }

    #[test]
    fn two_point_gap() {
        let s = dense_gap(&path(2)).unwrap();
        assert!((s.gap - 2.0).abs() < 1e-12);
    }

    #[test]
    fn path_gap_matches_cosine_formula() {
        let n = 12;
        let want = 2.0 - 2.0 * (std::f64::consts::PI / n as f64).cos();
        let s = dense_gap(&path(n)).unwrap();
        assert!((s.gap - want).abs() < 1e-10);
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let k = path(60);
        let d = dense_gap(&k).unwrap();
        let l = lanczos_gap(&k, 3, 59).unwrap();
        assert!((d.gap - l.gap).abs() < 1e-8, "{} vs {}", d.gap, l.gap);
    }
}
