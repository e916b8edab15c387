//! Interchange (random transposition) process on the symmetric group and its
//! projection to multislices.

use std::collections::HashMap;

use super::{beckner_predictions, check_states, ModelBundle, Prediction};
use crate::dirichlet::Kernel;
use crate::error::{Error, Result};
use crate::space::FiniteSpace;

/// Rearranges `v` into the next permutation in lexicographic order.
fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Distinct rearrangements of `base` in lexicographic order.
fn arrangements(mut base: Vec<usize>) -> Vec<Vec<usize>> {
    base.sort_unstable();
    let mut out = vec![base.clone()];
    while next_permutation(&mut base) {
        out.push(base.clone());
    }
    out
}

/// All permutations of {0, …, n−1} in one-line notation, lexicographic.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    arrangements((0..n).collect())
}

fn pair_swap_kernel(states: &[Vec<usize>], labels: Vec<String>, n: usize) -> Result<Kernel> {
    let index: HashMap<&[usize], usize> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let rate = 2.0 / (n * (n - 1)) as f64;
    let mut rates = Vec::new();
    let mut buf = vec![0usize; n];
    for (k, s) in states.iter().enumerate() {
        for i in 0..n {
            for j in i + 1..n {
                if s[i] == s[j] {
                    continue;
                }
                buf.copy_from_slice(s);
                buf.swap(i, j);
                rates.push((k, index[buf.as_slice()], rate));
            }
        }
    }
    let space = FiniteSpace::new(labels, vec![1.0 / states.len() as f64; states.len()])?;
    Kernel::new(space, rates)
}

fn label(s: &[usize]) -> String {
    s.iter().map(|v| (v + 1).to_string()).collect::<Vec<_>>().join(" ")
}

/// Interchange process on S_n: uniform measure, σ → σ∘τ_ij at rate
/// 2/(n(n−1)) for every transposition.
pub fn build_interchange(n: usize) -> Result<ModelBundle> {
    if !(2..=9).contains(&n) {
        return Err(Error::InvalidArgument(format!("interchange needs 2 <= n <= 9, got {n}")));
    }
    let states = permutations(n);
    check_states(states.len())?;
    let labels = states.iter().map(|s| label(s)).collect();
    let kernel = pair_swap_kernel(&states, labels, n)?;
    let nf = n as f64;
    let rho0 = 1.0 / (nf - 1.0);
    let explicit = move |p: f64| p * (nf + 2.0) / (2.0 * nf * (nf - 1.0));
    let mut predicted = vec![
        Prediction::lower("rho0", rho0, "interchange process: rho0 >= 1/(n-1) (Gao-Quastel, Bobkov-Tetali)"),
        Prediction::lower(
            "lambda",
            (nf + 2.0) / (nf * (nf - 1.0)),
            "interchange process: Bobkov-Tetali Beckner bound at p = 2",
        ),
    ];
    predicted.extend(beckner_predictions(
        rho0,
        "Beckner from modified log-Sobolev: alpha_p >= K_p rho0",
        Some((&explicit, "interchange process: alpha_p >= p(n+2)/(2n(n-1)) (Bobkov-Tetali)")),
    ));
    Ok(ModelBundle {
        name: "interchange".into(),
        kernel,
        coordinates: states.iter().map(|s| s.iter().map(|&v| v as i64).collect()).collect(),
        predicted,
        metadata: serde_json::json!({"n": n}),
    })
}

/// Uniform measure on words with `kappa[l]` copies of letter `l`, under the
/// same pair-swap dynamics.
pub fn build_multislice(kappa: &[usize]) -> Result<ModelBundle> {
    let n: usize = kappa.iter().sum();
    if n < 2 || kappa.iter().filter(|&&k| k > 0).count() < 2 {
        return Err(Error::InvalidArgument("multislice needs n >= 2 and at least two letters".into()));
    }
    let base: Vec<usize> = kappa.iter().enumerate().flat_map(|(l, &k)| std::iter::repeat_n(l, k)).collect();
    let states = arrangements(base);
    check_states(states.len())?;
    let labels = states.iter().map(|s| s.iter().map(|v| v.to_string()).collect::<String>()).collect();
    let kernel = pair_swap_kernel(&states, labels, n)?;
    let rho0 = 1.0 / (n as f64 - 1.0);
    let mut predicted = vec![Prediction::lower(
        "rho0",
        rho0,
        "multislice: functions lift to the interchange process, so rho0 >= 1/(n-1)",
    )];
    predicted.extend(beckner_predictions(rho0, "Beckner from modified log-Sobolev: alpha_p >= K_p rho0", None));
    Ok(ModelBundle {
        name: "multislice".into(),
        kernel,
        coordinates: states.iter().map(|s| s.iter().map(|&v| v as i64).collect()).collect(),
        predicted,
        metadata: serde_json::json!({"kappa": kappa}),
    })
}

/// For each permutation σ of S_n (in [`permutations`] order), the index of
/// the multislice word x(σ)_k = w_{σ(k)}, where w is the sorted base word.
pub fn multislice_lift(kappa: &[usize]) -> Vec<usize> {
    let base: Vec<usize> = kappa.iter().enumerate().flat_map(|(l, &k)| std::iter::repeat_n(l, k)).collect();
    let words = arrangements(base.clone());
    let index: HashMap<Vec<usize>, usize> = words.into_iter().enumerate().map(|(i, w)| (w, i)).collect();
    permutations(base.len()).iter().map(|s| index[&s.iter().map(|&k| base[k]).collect::<Vec<_>>()]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s3_structure() {
        let b = build_interchange(3).unwrap();
        assert_eq!(b.len(), 6);
        for x in 0..6 {
            let r: Vec<_> = b.kernel.row(x).collect();
            assert_eq!(r.len(), 3);
            assert!(r.iter().all(|(_, q)| (*q - 1.0 / 3.0).abs() < 1e-15));
        }
    }

    #[test]
    fn two_letter_multislice_is_flip() {
        let b = build_multislice(&[1, 1]).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.kernel.rate(0, 1), 1.0);
        assert_eq!(b.kernel.rate(1, 0), 1.0);
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(5).len(), 120);
        assert_eq!(arrangements(vec![0, 0, 1, 1]).len(), 6);
    }
}
