use qmajor::covariant::{clock_unitary, decide_covariant_conversion, Representation};
use qmajor::linalg::{kron, trace_second, ComplexMatrix, C64, ONE, ZERO};
use qmajor::majorization::{
    compute_alpha, compute_beta, decide_bipartite_qmaj, decide_ensemble_conversion, extract_witness, ConversionProblem,
};
use qmajor::minentropy::min_entropy;
use qmajor::quantum::{max_entangled, maximally_mixed, pure_state, random_channel, random_state, trace_distance};
use qmajor::sdp::SdpSettings;
use qmajor::Error;

fn settings() -> SdpSettings {
    SdpSettings::default()
}

fn basis(d: usize, k: usize) -> ComplexMatrix {
    let mut v = vec![ZERO; d];
    v[k] = ONE;
    pure_state(&v)
}

fn problem(inputs: Vec<ComplexMatrix>, targets: Vec<ComplexMatrix>) -> ConversionProblem {
    ConversionProblem::new(inputs, targets, None).unwrap()
}

fn equal_inputs() -> ConversionProblem {
    problem(vec![maximally_mixed(2), maximally_mixed(2)], vec![basis(2, 0), basis(2, 1)])
}

#[test]
fn identity_instance_is_feasible_with_alpha_one() {
    let states: Vec<_> = (0..3).map(|s| random_state(2, s)).collect();
    let p = problem(states.clone(), states.clone());
    let r = decide_ensemble_conversion(&p, &settings()).unwrap();
    assert!(r.feasible && !r.marginal);
    assert!((r.alpha - 1.0).abs() <= 1e-6, "alpha {}", r.alpha);
    assert!((r.beta - 1.0).abs() <= 1e-6, "beta {}", r.beta);
    let ch = r.channel.unwrap();
    for s in &states {
        assert!(trace_distance(&ch.apply(s), s).unwrap() <= 1e-6);
    }
}

#[test]
fn orthogonal_pair_to_constant_is_feasible() {
    let p = problem(vec![basis(2, 0), basis(2, 1)], vec![basis(2, 0), basis(2, 0)]);
    let r = decide_ensemble_conversion(&p, &settings()).unwrap();
    assert!(r.feasible);
    let ch = r.channel.unwrap();
    assert!(trace_distance(&ch.apply(&basis(2, 1)), &basis(2, 0)).unwrap() <= 1e-6);
}

#[test]
fn equal_inputs_cannot_split() {
    let p = equal_inputs();
    let r = decide_ensemble_conversion(&p, &settings()).unwrap();
    assert!(!r.feasible && !r.marginal);
    assert!(r.alpha < 1.0 - 1e-3, "alpha {}", r.alpha);
    assert!((r.alpha - r.beta).abs() <= 1e-5);
    let w = r.witness.unwrap();
    assert!(w.violation >= 1e-6);
}

#[test]
fn nonorthogonal_pair_cannot_become_orthogonal() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = pure_state(&[C64::new(s, 0.0), C64::new(s, 0.0)]);
    let p = problem(vec![basis(2, 0), plus], vec![basis(2, 0), basis(2, 1)]);
    let r = decide_ensemble_conversion(&p, &settings()).unwrap();
    assert!(!r.feasible && r.witness.is_some());
}

#[test]
fn beta_unchanged_by_redundant_copy() {
    let ch = random_channel(2, 3, 7);
    let inputs: Vec<_> = (0..2).map(|s| random_state(2, 10 + s)).collect();
    let mut targets: Vec<_> = inputs.iter().map(|r| ch.apply(r)).collect();
    targets[1] = random_state(3, 99);
    let base = problem(inputs.clone(), targets.clone());
    let mut inputs2 = inputs.clone();
    let mut targets2 = targets.clone();
    inputs2.push(inputs[0].clone());
    targets2.push(targets[0].clone());
    let w = vec![0.5, 0.25, 0.25];
    let doubled = ConversionProblem::new(inputs2, targets2, Some(w)).unwrap();
    let b1 = compute_beta(&base, None, &settings()).unwrap();
    let b2 = compute_beta(&doubled, None, &settings()).unwrap();
    assert!((b1 - b2).abs() <= 1e-6, "{b1} vs {b2}");
}

#[test]
fn witness_requires_an_infeasible_instance() {
    let states: Vec<_> = (0..2).map(|s| random_state(2, 20 + s)).collect();
    let p = problem(states.clone(), states);
    let a = compute_alpha(&p, None, &settings()).unwrap();
    assert!(matches!(extract_witness(&p, &a, None, &settings()), Err(Error::Validation(_))));
}

#[test]
fn witness_violation_recomputes_and_tracks_alpha() {
    let p = equal_inputs();
    let a = compute_alpha(&p, None, &settings()).unwrap();
    let w = extract_witness(&p, &a, None, &settings()).unwrap();
    let mut ob = ComplexMatrix::zeros(4, 4);
    let mut oc = ComplexMatrix::zeros(4, 4);
    for ((&k, wk), s) in w.members.iter().zip(&w.weights).zip(&w.states) {
        ob += &kron(s, &p.inputs[k]).scale(*wk);
        oc += &kron(s, &p.targets[k]).scale(*wk);
    }
    let hb = min_entropy(&ob, 2, 2, &settings()).unwrap().value;
    let hc = min_entropy(&oc, 2, 2, &settings()).unwrap().value;
    assert!(hb - hc >= 1e-6);
    assert!((hb - hc - w.violation).abs() <= 1e-6);
    assert!(w.violation > 0.0 && a.value < 1.0);
}

#[test]
fn trivial_group_matches_plain_decision() {
    for seed in 0..4 {
        let inputs: Vec<_> = (0..2).map(|s| random_state(2, 100 * seed + s)).collect();
        let targets: Vec<_> = (0..2).map(|s| random_state(2, 100 * seed + 50 + s)).collect();
        let p = problem(inputs, targets);
        let plain = decide_ensemble_conversion(&p, &settings()).unwrap();
        let cov = decide_covariant_conversion(&p, &Representation::trivial(), &settings()).unwrap();
        assert_eq!(plain.feasible, cov.feasible);
        assert!((plain.alpha - cov.alpha).abs() <= 1e-6);
    }
}

#[test]
fn cyclic_phase_forbids_creating_coherence() {
    let u = clock_unitary(3, &[0, 1, 2]);
    let rep = Representation::cyclic(3, u.clone(), u).unwrap();
    let rho = ComplexMatrix::diag_real(&[0.6, 0.3, 0.1]);
    let s = 1.0 / 3f64.sqrt();
    let coherent = pure_state(&[C64::new(s, 0.0); 3]);
    let r = decide_covariant_conversion(&problem(vec![rho.clone()], vec![coherent.clone()]), &rep, &settings()).unwrap();
    assert!(!r.feasible);
    // Without the symmetry the same target is reachable by replacement.
    assert!(decide_ensemble_conversion(&problem(vec![rho], vec![coherent]), &settings()).unwrap().feasible);
}

#[test]
fn z2_feasibility_is_implied_by_z4() {
    let u = clock_unitary(4, &[0, 1, 3]);
    let z4 = Representation::cyclic(4, u.clone(), u.clone()).unwrap();
    let u2 = u.matmul(&u);
    let z2 = Representation::cyclic(2, u2.clone(), u2).unwrap();
    for seed in 0..3 {
        let ch = qmajor::covariant::random_covariant_channel(3, 3, &z4, seed).unwrap();
        let inputs: Vec<_> = (0..2).map(|s| random_state(3, 40 + 10 * seed + s)).collect();
        let targets = inputs.iter().map(|r| ch.apply(r)).collect();
        let p = problem(inputs, targets);
        assert!(decide_covariant_conversion(&p, &z4, &settings()).unwrap().feasible);
        assert!(decide_covariant_conversion(&p, &z2, &settings()).unwrap().feasible);
    }
}

#[test]
fn conversion_is_transitive_along_channel_chains() {
    let e1 = random_channel(2, 3, 1);
    let e2 = random_channel(3, 2, 2);
    let p: Vec<_> = (0..3).map(|s| random_state(2, 30 + s)).collect();
    let q: Vec<_> = p.iter().map(|r| e1.apply(r)).collect();
    let r: Vec<_> = q.iter().map(|x| e2.apply(x)).collect();
    let s = settings();
    assert!(decide_ensemble_conversion(&problem(p.clone(), q.clone()), &s).unwrap().feasible);
    assert!(decide_ensemble_conversion(&problem(q, r.clone()), &s).unwrap().feasible);
    assert!(decide_ensemble_conversion(&problem(p, r), &s).unwrap().feasible);
}

#[test]
fn bipartite_examples() {
    let s = settings();
    let rho = random_state(4, 5);
    assert!(decide_bipartite_qmaj(&rho, &rho, 2, 2, 2, &s).unwrap().feasible);

    let tau = random_state(3, 6);
    let replaced = kron(&trace_second(&rho, 2, 2), &tau);
    assert!(decide_bipartite_qmaj(&rho, &replaced, 2, 2, 3, &s).unwrap().feasible);

    let r = decide_bipartite_qmaj(&maximally_mixed(4), &max_entangled(2), 2, 2, 2, &s).unwrap();
    assert!(!r.feasible);
    assert!(r.witness_violation.is_some_and(|v| v > 1e-6));

    let mismatched = kron(&basis(2, 0), &maximally_mixed(2));
    let r = decide_bipartite_qmaj(&maximally_mixed(4), &mismatched, 2, 2, 2, &s).unwrap();
    assert!(!r.feasible);
    assert_eq!(r.reason.as_deref(), Some("incompatible marginals"));
}
