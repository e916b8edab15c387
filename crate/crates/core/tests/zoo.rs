use ineqlab::constants::{ConstantEstimator, OptimizerOptions};
use ineqlab::numeric::slack;
use ineqlab::zoo::{
    build_glauber, build_hardcore, build_ising, build_multislice, dobrushin_parameters, erg_graph_delta,
    multislice_lift, BoundSide, ModelBundle, ModelSpec, ProductSpec, RateTable,
};

fn small_models() -> Vec<ModelSpec> {
    vec![
        ModelSpec::Flip,
        ModelSpec::RandomReversible { states: 5, seed: 17 },
        ModelSpec::Glauber(ProductSpec::factorized(vec![vec![0.3, 0.7], vec![0.2, 0.5, 0.3], vec![0.5, 0.5]])),
        ModelSpec::Ising {
            coupling: vec![vec![0.0, 0.1, 0.0], vec![0.1, 0.0, 0.1], vec![0.0, 0.1, 0.0]],
            field: vec![0.2, 0.0, -0.1],
        },
        ModelSpec::Hardcore { vertices: 4, edges: vec![(0, 1), (1, 2), (2, 3)], eta: 0.3 },
        ModelSpec::HardcoreStar { leaves: 4, eta: 0.1 },
        ModelSpec::Interchange { n: 4 },
        ModelSpec::Multislice { kappa: vec![2, 2] },
        ModelSpec::ZeroRange {
            particles: 3,
            sites: 3,
            rates: RateTable::Linear { slopes: vec![1.0, 2.0, 1.5] },
            destination: vec![0.2, 0.3, 0.5],
        },
        ModelSpec::Erg {
            vertices: 4,
            gammas: vec![-0.5, 0.05],
            graphs: vec![vec![(0, 1)], vec![(0, 1), (1, 2), (0, 2)]],
        },
    ]
}

fn bundles() -> Vec<ModelBundle> {
    small_models().iter().map(|s| s.build_bundle().unwrap()).collect()
}

#[test]
fn every_model_is_reversible_and_stationary() {
    for b in bundles() {
        assert!(b.kernel.check_detailed_balance().violations.is_empty(), "{}", b.name);
        assert!(b.kernel.stationarity_residual() < 1e-12, "{}", b.name);
        assert_eq!(b.coordinates.len(), b.len(), "{}", b.name);
        b.kernel.ensure_irreducible().unwrap();
    }
}

#[test]
fn predictions_hold_for_the_estimates() {
    for (i, b) in bundles().into_iter().enumerate() {
        let opts = OptimizerOptions { starts: 16, seed: i as u64, ..Default::default() };
        let est = ConstantEstimator::new(&b.kernel, opts).unwrap();
        for pred in b.checkable() {
            let value = match (pred.constant.as_str(), pred.p) {
                ("lambda", _) => est.poincare().value,
                ("rho0", _) => est.mlsi().unwrap().value,
                ("rho1", _) => est.lsi().unwrap().value,
                ("alpha_p", Some(p)) => est.beckner_p(p).unwrap().value,
                _ => continue,
            };
            assert!(
                pred.admits(value, slack(pred.value, 0.01)),
                "{}: {} {:?} {} vs estimate {value}",
                b.name,
                pred.constant,
                pred.side,
                pred.value
            );
        }
    }
}

#[test]
fn specs_roundtrip_through_json() {
    for spec in small_models() {
        let text = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        let (a, b) = (spec.build_bundle().unwrap(), back.build_bundle().unwrap());
        assert_eq!(a.kernel.triplets(), b.kernel.triplets());
        assert_eq!(a.space().mu(), b.space().mu());
    }
}

#[test]
fn uncoupled_ising_is_a_product_chain() {
    let h = [0.3, -0.2];
    let ising = build_ising(&[vec![0.0, 0.0], vec![0.0, 0.0]], &h).unwrap();
    // μ(ε) ∝ exp(−h ε) with index 0 the spin −1
    let marginals: Vec<Vec<f64>> = h
        .iter()
        .map(|&hi| {
            let z = hi.exp() + (-hi).exp();
            vec![hi.exp() / z, (-hi).exp() / z]
        })
        .collect();
    let product = build_glauber(&ProductSpec::factorized(marginals)).unwrap();
    for (x, y) in ising.space().mu().iter().zip(product.space().mu()) {
        assert!((x - y).abs() < 1e-14);
    }
    let gap = |b: &ModelBundle| ineqlab::constants::optimal_poincare(&b.kernel).unwrap().value;
    assert!((gap(&ising) - gap(&product)).abs() < 1e-10);
}

#[test]
fn product_measures_have_no_interdependence() {
    let d = dobrushin_parameters(&ProductSpec::factorized(vec![vec![0.25, 0.75]; 3])).unwrap();
    assert!(d.operator_norm.abs() < 1e-14);
    assert!((d.alpha - 1.0).abs() < 1e-14);
    assert!((d.beta - 0.25).abs() < 1e-14);
}

#[test]
fn multislice_functions_lift_to_the_interchange_process() {
    let kappa = [2, 1, 1];
    let slice = build_multislice(&kappa).unwrap();
    let inter = ModelSpec::Interchange { n: 4 }.build_bundle().unwrap();
    let lift = multislice_lift(&kappa);
    let f: Vec<f64> = (0..slice.len()).map(|i| ((i * 7) % 5) as f64).collect();
    let g: Vec<f64> = lift.iter().map(|&i| f[i]).collect();
    let ef = slice.kernel.dirichlet_form(&f, &f).unwrap();
    let eg = inter.kernel.dirichlet_form(&g, &g).unwrap();
    assert!((ef - eg).abs() < 1e-12, "{ef} vs {eg}");
    assert!((slice.space().variance(&f).unwrap() - inter.space().variance(&g).unwrap()).abs() < 1e-12);
}

#[test]
fn hardcore_excludes_adjacent_pairs() {
    let b = build_hardcore(3, &[(0, 1), (1, 2)], 0.5).unwrap();
    // ∅, {0}, {1}, {2}, {0, 2}
    assert_eq!(b.len(), 5);
    assert!(b.coordinates.iter().all(|c| !(c[0] == 1 && c[1] == 1) && !(c[1] == 1 && c[2] == 1)));
}

#[test]
fn erg_delta_ignores_the_edge_term() {
    let p = erg_graph_delta(&[5.0, 0.1, -0.2], &[1, 3, 2]).unwrap();
    assert!((p.delta - 0.5 * (0.1 * 3.0 * 2.0 + 0.2 * 2.0 * 1.0)).abs() < 1e-15);
    assert!(p.predicted.iter().all(|q| q.side == BoundSide::Lower || q.side == BoundSide::Upper));
    assert!(erg_graph_delta(&[1.0], &[1, 2]).is_err());
}
