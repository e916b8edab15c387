use ineqlab::constants::{
    big_k, optimal_lsi, optimal_mlsi, optimal_poincare, ratio_of, verify_implication_diagram, verify_main_theorem,
    ConstantEstimator, ConstantKind, DiagramOptions, OptimizerOptions,
};
use ineqlab::zoo::{build_interchange, flip_chain, random_reversible_chain};
use ineqlab::ExecMode;

fn opts(seed: u64) -> OptimizerOptions {
    OptimizerOptions { seed, ..Default::default() }
}

#[test]
fn two_point_chain_constants() {
    let k = flip_chain().kernel;
    assert!((optimal_poincare(&k).unwrap().value - 2.0).abs() < 1e-12);
    let rho1 = optimal_lsi(&k, &opts(1)).unwrap();
    assert!((rho1.value - 1.0).abs() < 1e-3, "rho1 = {}", rho1.value);
    let rho0 = optimal_mlsi(&k, &opts(1)).unwrap();
    assert!((rho0.value - 4.0).abs() < 1e-3, "rho0 = {}", rho0.value);
}

#[test]
fn witness_attains_reported_value() {
    let b = random_reversible_chain(4, 11).unwrap();
    let est = ConstantEstimator::new(&b.kernel, opts(2)).unwrap();
    for kind in [
        ConstantKind::ModifiedLogSobolev,
        ConstantKind::LogSobolev,
        ConstantKind::BecknerP { p: 1.5 },
        ConstantKind::BecknerQ { q: 1.25 },
    ] {
        let r = est.estimate(kind).unwrap();
        if r.source == "near_constant" {
            continue;
        }
        let direct = ratio_of(&b.kernel, kind, &r.witness).unwrap();
        assert!((direct - r.value).abs() <= 1e-8 * r.value, "{kind:?}: {direct} vs {}", r.value);
    }
}

#[test]
fn beckner_two_equals_gap() {
    for seed in 0..5 {
        let b = random_reversible_chain(3 + (seed as usize % 3), seed).unwrap();
        let est = ConstantEstimator::new(&b.kernel, opts(seed)).unwrap();
        let lam = est.poincare().value;
        let a2 = est.beckner_p(2.0).unwrap().value;
        assert!((a2 - lam).abs() <= 1e-6 * lam, "seed {seed}: {a2} vs {lam}");
    }
}

#[test]
fn more_starts_never_increase_the_value() {
    let b = random_reversible_chain(5, 3).unwrap();
    let mut last = f64::INFINITY;
    for starts in [1, 4, 8, 16, 32] {
        let o = OptimizerOptions { starts, seed: 9, ..Default::default() };
        let v = optimal_mlsi(&b.kernel, &o).unwrap().value;
        assert!(v <= last, "{starts} starts: {v} > {last}");
        last = v;
    }
}

#[test]
fn execution_mode_does_not_change_results() {
    let b = random_reversible_chain(5, 21).unwrap();
    let seq = OptimizerOptions { exec: ExecMode::Sequential, ..opts(4) };
    let par = OptimizerOptions { exec: ExecMode::Parallel, ..opts(4) };
    let a = optimal_lsi(&b.kernel, &seq).unwrap();
    let c = optimal_lsi(&b.kernel, &par).unwrap();
    assert_eq!(a.value.to_bits(), c.value.to_bits());
    assert_eq!(a.witness, c.witness);
}

#[test]
fn interchange_gap() {
    for n in [3usize, 4] {
        let b = build_interchange(n).unwrap();
        let lam = optimal_poincare(&b.kernel).unwrap().value;
        assert!((lam - 2.0 / (n as f64 - 1.0)).abs() < 1e-10, "n = {n}: {lam}");
    }
}

#[test]
fn theorem_holds_on_random_chains() {
    for seed in 0..6 {
        let b = random_reversible_chain(3 + seed as usize % 3, 100 + seed).unwrap();
        let r = verify_main_theorem(&b.kernel, &[1.05, 1.2, 1.5, 2.0], &opts(seed), 0.01).unwrap();
        if let Some(c) = r.failures().next() {
            panic!("seed {seed}: {} lhs {} rhs {}", c.name, c.lhs, c.rhs);
        };
    }
}

#[test]
fn diagram_holds_on_random_chains() {
    for seed in 0..6 {
        let b = random_reversible_chain(3 + seed as usize % 3, 200 + seed).unwrap();
        let r = verify_implication_diagram(&b.kernel, &DiagramOptions::default(), &opts(seed)).unwrap();
        if let Some(c) = r.failures().next() {
            panic!("seed {seed}: {} lhs {} rhs {}", c.name, c.lhs, c.rhs);
        };
    }
}

#[test]
fn big_k_is_at_least_a_sixth() {
    for i in 1..=50 {
        let p = 1.0 + i as f64 / 50.0;
        assert!(big_k(p).unwrap() >= 1.0 / 6.0);
    }
}
