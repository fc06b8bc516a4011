use qmajor_wasm::{clock_curve_json, coherence_sweep_json, thermo_curves_json};
use serde_json::Value;

#[test]
fn curves_for_uniform_gibbs() {
    let v: Value = serde_json::from_str(&thermo_curves_json(&[1.0, 0.0], &[0.5, 0.5], &[0.5, 0.5]).unwrap()).unwrap();
    assert_eq!(v["holds"], Value::Bool(true));
    let last = v["curve_p"].as_array().unwrap().last().unwrap().clone();
    assert!((last[0].as_f64().unwrap() - 1.0).abs() < 1e-12 && (last[1].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(thermo_curves_json(&[1.0], &[0.5, 0.5], &[0.5, 0.5]).is_err());
}

#[test]
fn sweep_matches_closed_form_away_from_the_boundary() {
    let v: Value = serde_json::from_str(&coherence_sweep_json(2.0, 10).unwrap()).unwrap();
    let pts = v.as_array().unwrap();
    assert_eq!(pts.len(), 11);
    for p in pts {
        if !p["marginal"].as_bool().unwrap() {
            assert_eq!(p["feasible"], p["closed_form"], "{p}");
        }
    }
    assert!(coherence_sweep_json(2.0, 0).is_err());
}

#[test]
fn clock_curve_for_equator_state() {
    let v: Value = serde_json::from_str(&clock_curve_json(std::f64::consts::FRAC_PI_2, 0.0, 4).unwrap()).unwrap();
    let pts = v.as_array().unwrap();
    assert_eq!(pts.len(), 3);
    // |+> under N = 2 has orthogonal orbit.
    assert!((pts[0]["p_guess"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    // A qubit carries at most two distinguishable clock times: p_guess <= 2/N.
    for p in pts {
        let n = p["n"].as_f64().unwrap();
        assert!(p["p_guess"].as_f64().unwrap() <= 2.0 / n + 1e-7);
    }
}
