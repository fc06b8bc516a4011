use std::f64::consts::PI;

use qmajor::covariant::{decide_covariant_conversion, Representation, Side};
use qmajor::linalg::{ComplexMatrix, C64, ONE, ZERO};
use qmajor::majorization::ConversionProblem;
use qmajor::minentropy::helstrom_pair;
use qmajor::quantum::{pure_state, random_state};
use qmajor::sdp::SdpSettings;
use qmajor::thermo::{
    clock_guess, clock_states, decide_thermal_conversion, decide_thermal_incoherent, gibbs_state, random_gpc_channel,
    zn_from_hamiltonian, ClockConfig, ThermoContext,
};

fn settings() -> SdpSettings {
    SdpSettings::default()
}

fn qubit(beta: f64) -> ThermoContext {
    ThermoContext::same(ComplexMatrix::diag_real(&[0.0, 1.0]), beta).unwrap()
}

fn plus() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    pure_state(&[C64::new(s, 0.0), C64::new(s, 0.0)])
}

#[test]
fn gibbs_fixed_point_and_replacement() {
    let ctx = ThermoContext::new(ComplexMatrix::diag_real(&[0.0, 0.7, 1.3]), ComplexMatrix::diag_real(&[0.0, 0.4]), 1.2).unwrap();
    let g_in = gibbs_state(&ctx, Side::Input).unwrap();
    let g_out = gibbs_state(&ctx, Side::Output).unwrap();
    assert!(decide_thermal_conversion(&g_in, &g_out, &ctx, None, &settings()).unwrap().conversion.feasible);
    let rho = random_state(3, 4);
    assert!(decide_thermal_conversion(&rho, &g_out, &ctx, None, &settings()).unwrap().conversion.feasible);
}

#[test]
fn incoherent_input_cannot_gain_coherence() {
    let ctx = qubit(1.0);
    let rho = ComplexMatrix::diag_real(&[0.3, 0.7]);
    let r = decide_thermal_conversion(&rho, &plus(), &ctx, None, &settings()).unwrap();
    assert!(!r.conversion.feasible);
    assert!(r.monotone_violation.is_some_and(|v| v > 1e-6));
}

#[test]
fn dephasing_sweep_is_feasible_throughout() {
    let ctx = qubit(1.0);
    for k in 0..=4 {
        let lambda = k as f64 / 4.0;
        let sigma = &plus().scale(lambda) + &ComplexMatrix::identity(2).scale((1.0 - lambda) / 2.0);
        assert!(decide_thermal_conversion(&plus(), &sigma, &ctx, None, &settings()).unwrap().conversion.feasible, "lambda {lambda}");
    }
}

#[test]
fn incoherent_route_examples() {
    let ctx = qubit(1.5);
    let g = gibbs_state(&ctx, Side::Input).unwrap();
    let excited = ComplexMatrix::diag_real(&[0.0, 1.0]);
    assert!(decide_thermal_incoherent(&excited, &g, &ctx).unwrap());
    assert!(!decide_thermal_incoherent(&g, &excited, &ctx).unwrap());
    assert!(!decide_thermal_conversion(&g, &excited, &ctx, None, &settings()).unwrap().conversion.feasible);
}

#[test]
fn random_thermal_channel_images_are_feasible() {
    let ctx = ThermoContext::same(ComplexMatrix::diag_real(&[0.0, 0.5, 0.5]), 0.8).unwrap();
    for seed in 0..3 {
        let ch = random_gpc_channel(&ctx, seed, &settings()).unwrap();
        let rho = random_state(3, 50 + seed);
        let r = decide_thermal_conversion(&rho, &ch.apply(&rho), &ctx, None, &settings()).unwrap();
        assert!(r.conversion.feasible);
    }
}

#[test]
fn clock_states_shift_under_reference_evolution() {
    let cfg = ClockConfig::new(4, 0.3).unwrap();
    let c = clock_states(&cfg);
    for (m, ket) in c.states.iter().enumerate() {
        for z in ket {
            assert!((z.norm() - 0.5).abs() < 1e-12);
        }
        // exp(-i n eps H_R) is diagonal with entries exp(i 2 pi n k / N).
        for n in 0..4 {
            let shifted: Vec<C64> = ket
                .iter()
                .enumerate()
                .map(|(k, z)| z * C64::from_polar(1.0, -(n as f64) * cfg.epsilon * c.h_r[(k, k)].re))
                .collect();
            let target = &c.states[(m + n) % 4];
            let err = shifted.iter().zip(target).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10, "m {m} n {n}: {err}");
        }
    }
}

#[test]
fn clock_guess_examples() {
    let h = ComplexMatrix::diag_real(&[0.0, 1.0]);
    let g = clock_guess(&plus(), &h, &ClockConfig::new(2, PI).unwrap(), &settings()).unwrap();
    assert!((g.p_guess - 1.0).abs() <= 1e-9 && g.h_min.abs() <= 1e-7);

    let ground = pure_state(&[ONE, ZERO]);
    let g = clock_guess(&ground, &h, &ClockConfig::new(3, 2.0 * PI / 3.0).unwrap(), &settings()).unwrap();
    assert!((g.p_guess - 1.0 / 3.0).abs() <= 1e-7);

    let cfg = ClockConfig::new(2, PI).unwrap();
    let u = cfg.generator(&h).unwrap();
    for seed in 0..5 {
        let rho = random_state(2, 200 + seed);
        let g = clock_guess(&rho, &h, &cfg, &settings()).unwrap();
        let closed = helstrom_pair(&[0.5, 0.5], &[1.0, 0.0], &[0.0, 1.0], &[rho.clone(), rho.conjugate_by(&u)]).unwrap();
        assert!((g.p_guess - closed).abs() <= 1e-7);
    }
}

#[test]
fn zn_periods() {
    let fit = zn_from_hamiltonian(&ComplexMatrix::diag_real(&[0.0, 1.0]), PI, 1e-9).unwrap();
    assert_eq!(fit.config.n, 2);
    let fit = zn_from_hamiltonian(&ComplexMatrix::diag_real(&[0.0, 1.0, 2.0]), 2.0 * PI / 3.0, 1e-9).unwrap();
    assert_eq!(fit.config.n, 3);
    let fit = zn_from_hamiltonian(&ComplexMatrix::zeros(2, 2), 1.0, 1e-9).unwrap();
    assert_eq!(fit.config.n, 1);
    assert!(zn_from_hamiltonian(&ComplexMatrix::diag_real(&[0.0, 2f64.sqrt()]), 1.0, 1e-14).is_err());
}

#[test]
fn z3_and_u1_covariance_agree_on_a_qubit() {
    // With H = diag(0, 1) and epsilon = 2 pi / 3 the Z_3 phases e^{-i 2 pi k / 3} separate
    // every energy difference in {-1, 0, 1}, so Z_3 and U(1) covariance coincide.
    let h = ComplexMatrix::diag_real(&[0.0, 1.0]);
    let w = ClockConfig::new(3, 2.0 * PI / 3.0).unwrap().generator(&h).unwrap();
    let zn = Representation::cyclic(3, w.clone(), w).unwrap();
    let u1 = Representation::one_parameter(h.clone(), h).unwrap();
    let cases = [
        (plus(), ComplexMatrix::diag_real(&[0.8, 0.2])),
        (ComplexMatrix::diag_real(&[0.8, 0.2]), plus()),
        (plus(), &plus().scale(0.5) + &ComplexMatrix::identity(2).scale(0.25)),
        (random_state(2, 1), random_state(2, 2)),
    ];
    for (rho, sigma) in cases {
        let p = ConversionProblem::new(vec![rho], vec![sigma], None).unwrap();
        let a = decide_covariant_conversion(&p, &zn, &settings()).unwrap();
        let b = decide_covariant_conversion(&p, &u1, &settings()).unwrap();
        assert_eq!(a.feasible, b.feasible);
        assert!((a.alpha - b.alpha).abs() <= 1e-6, "{} vs {}", a.alpha, b.alpha);
    }
}
