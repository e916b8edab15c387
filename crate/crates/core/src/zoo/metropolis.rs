use crate::dirichlet::Kernel;
use crate::error::{Error, Result};
use crate::space::FiniteSpace;

/// Metropolis chain for μ on a symmetric neighbour relation:
/// q_xy = c · min(μ(y)/μ(x), 1) for x ~ y.
pub fn metropolis_kernel<F>(space: &FiniteSpace, neighbours: F, normalization: f64) -> Result<Kernel>
where
    F: Fn(usize, usize) -> bool,
{
    if !(normalization > 0.0 && normalization.is_finite()) {
        return Err(Error::InvalidArgument(format!("normalization must be positive, got {normalization}")));
    }
    let mu = space.mu();
    let mut rates = Vec::new();
    for x in 0..space.len() {
        for y in 0..space.len() {
            if x != y && neighbours(x, y) {
                if !neighbours(y, x) {
                    return Err(Error::InvalidArgument(format!("relation is not symmetric at ({x}, {y})")));
                }
                rates.push((x, y, normalization * (mu[y] / mu[x]).min(1.0)));
            }
        }
    }
    Kernel::new(space.clone(), rates)
}

/// x ~ y when the words differ in exactly one position, or when y is x with
/// two positions swapped.
pub fn single_change_or_transposition(x: &[i64], y: &[i64]) -> bool {
    if x.len() != y.len() {
        return false;
    }
    let diff: Vec<usize> = (0..x.len()).filter(|&i| x[i] != y[i]).collect();
    match diff.as_slice() {
        [_] => true,
        [i, j] => x[*i] == y[*j] && x[*j] == y[*i],
        _ => false,
    }
}
