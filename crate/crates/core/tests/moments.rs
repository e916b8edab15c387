use ineqlab::constants::{optimal_mlsi, optimal_poincare, OptimizerOptions};
use ineqlab::moments::{
    aida_stroock_curve, check_onesided_moments, check_twosided_moments, hoeffding_supremum_bound, hoeffding_z, kappa,
    moment_tail_bound, sampling_without_replacement_matrices, symmetric_group_moment_check, tail_compare_on_space,
    BecknerRegime, McOptions,
};
use ineqlab::zoo::{build_glauber, random_reversible_chain, ProductSpec};
use proptest::prelude::*;

#[test]
fn kappa_at_zero() {
    let e = 0.5f64.exp();
    assert!((kappa(0.0).unwrap() - e / (e - 1.0)).abs() < 1e-14);
    assert!(kappa(-0.1).is_err());
}

#[test]
fn estimated_regimes_give_valid_bounds() {
    let r = [2.0, 3.0, 4.0, 8.0, 12.0];
    for seed in 0..4 {
        let b = random_reversible_chain(5, 30 + seed).unwrap();
        let f: Vec<f64> = (0..5).map(|i| ((i as u64 * 13 + seed) % 7) as f64).collect();
        let rho0 = optimal_mlsi(&b.kernel, &OptimizerOptions { seed, ..Default::default() }).unwrap().value;
        let lam = optimal_poincare(&b.kernel).unwrap().value;
        for regime in [BecknerRegime::from_mlsi(rho0).unwrap(), BecknerRegime::from_gap(lam).unwrap()] {
            let two = check_twosided_moments(&b.kernel, &f, &regime, &r).unwrap();
            let one = check_onesided_moments(&b.kernel, &f, &regime, &r).unwrap();
            assert!(
                two.passed() && one.passed(),
                "seed {seed}, {regime:?}: {} {}",
                two.report.min_margin(),
                one.min_margin()
            );
        }
    }
}

#[test]
fn floor_limits_moment_orders() {
    let b = random_reversible_chain(3, 1).unwrap();
    let f = [0.0, 1.0, 3.0];
    let regime = BecknerRegime::new(0.2, 0.0).unwrap().with_floor(1.5).unwrap();
    assert!(check_twosided_moments(&b.kernel, &f, &regime, &[2.0, 3.0]).is_ok());
    assert!(check_twosided_moments(&b.kernel, &f, &regime, &[3.5]).is_err());
    assert!(BecknerRegime::new(0.2, 0.0).unwrap().with_floor(1.0).is_err());
}

#[test]
fn constant_function_has_zero_moments() {
    let b = random_reversible_chain(4, 2).unwrap();
    let regime = BecknerRegime::new(1.0, 0.0).unwrap();
    let rep = check_twosided_moments(&b.kernel, &[2.5; 4], &regime, &[2.0, 6.0]).unwrap();
    assert!(rep.report.lhs.iter().chain(&rep.report.rhs).all(|v| v.abs() < 1e-15));
    assert!(rep.passed());
}

#[test]
fn moment_tails_cover_glauber_sums() {
    let b = build_glauber(&ProductSpec::factorized(vec![vec![0.5, 0.5]; 10])).unwrap();
    let f = b.coordinate_sum();
    let regime = BecknerRegime::new(1.0 / 6.0, 0.0).unwrap();
    let r: Vec<f64> = (2..=12).map(f64::from).collect();
    let one = check_onesided_moments(&b.kernel, &f, &regime, &r).unwrap();
    let moments: Vec<(f64, f64)> = r.iter().zip(&one.upper.rhs).map(|(r, m2)| (*r, m2.sqrt())).collect();
    let opts = McOptions { samples: 50_000, seed: 3, ..Default::default() };
    let rep =
        tail_compare_on_space(b.space(), &f, |t| moment_tail_bound(&moments, t), &[1.0, 2.0, 3.0, 4.0], &opts).unwrap();
    assert!(rep.passed, "{:?}", rep);
    assert!(rep.mean_exact);
}

#[test]
fn aida_stroock_curve_is_increasing() {
    let b = random_reversible_chain(4, 8).unwrap();
    let curve = aida_stroock_curve(&b.kernel, &[0.0, 1.0, 0.0, 2.0], 0.5, &[2.0, 4.0, 8.0]).unwrap();
    assert!(curve.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn hoeffding_bound_covers_the_exact_excess() {
    let xs = vec![vec![1.0, -0.5, 2.0, 0.0, 0.3], vec![0.2, 0.2, -1.0, 1.5, 0.0]];
    let mats = sampling_without_replacement_matrices(&xs, 2).unwrap();
    let bound = hoeffding_supremum_bound(&mats, 4.0, &McOptions::default()).unwrap();
    let perms = ineqlab::zoo::permutations(5);
    let z: Vec<f64> = perms.iter().map(|p| hoeffding_z(&mats, p)).collect();
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    let excess = (z.iter().map(|v| (v - mean).max(0.0).powi(4)).sum::<f64>() / z.len() as f64).powf(0.25);
    assert!(excess <= bound.bound, "{excess} > {}", bound.bound);
    assert!(bound.tail_bound(0.0) == 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn symmetric_group_bound_holds(values in proptest::collection::vec(-5.0f64..5.0, 24), n in 3usize..=4) {
        // f(σ) = Σ_k w_{k,σ(k)} from a random weight table
        let f = |p: &[usize]| p.iter().enumerate().map(|(k, &v)| values[k * n + v]).sum::<f64>();
        let rep = symmetric_group_moment_check(n, f, &[2.0, 4.0, 6.0]).unwrap();
        prop_assert!(rep.passed(), "{:?}", rep.two_sided.margin);
    }
}
