//! Browser bindings: thermo-majorization curves, the qubit coherence sweep and clock
//! guessing probabilities. Each entry point returns a JSON document for the page to plot.

use qmajor::linalg::{ComplexMatrix, C64};
use qmajor::majorization::{thermo_curve_breakpoints, thermo_majorizes, thermo_margin};
use qmajor::quantum::pure_state;
use qmajor::sdp::SdpSettings;
use qmajor::selftest::{coherence_sweep_oracle, coherence_sweep_target};
use qmajor::thermo::{clock_guess, decide_thermal_conversion, ClockConfig, ThermoContext};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const MAX_SWEEP_STEPS: usize = 200;
pub const MAX_CLOCK_ORDER: usize = 16;

#[derive(Serialize)]
struct Curves {
    holds: bool,
    margin: f64,
    curve_p: Vec<(f64, f64)>,
    curve_q: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct SweepPoint {
    lambda: f64,
    feasible: bool,
    marginal: bool,
    alpha: f64,
    closed_form: bool,
}

#[derive(Serialize)]
struct ClockPoint {
    n: usize,
    p_guess: f64,
    h_min: f64,
}

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Thermo-majorization curves of `p` and `q` against the Gibbs populations `gibbs`.
pub fn thermo_curves_json(p: &[f64], q: &[f64], gibbs: &[f64]) -> Result<String, String> {
    let run = || -> qmajor::Result<Curves> {
        Ok(Curves {
            holds: thermo_majorizes(p, gibbs, q, gibbs)?,
            margin: thermo_margin(p, gibbs, q, gibbs)?,
            curve_p: thermo_curve_breakpoints(p, gibbs)?,
            curve_q: thermo_curve_breakpoints(q, gibbs)?,
        })
    };
    json(&run().map_err(|e| e.to_string())?)
}

/// `|+> -> lambda |+><+| + (1 - lambda)|0><0|` for `H = diag(0, 1)` on a grid of `steps + 1`
/// values of lambda, decided by the SDP and by the closed form.
pub fn coherence_sweep_json(beta: f64, steps: usize) -> Result<String, String> {
    if !(1..=MAX_SWEEP_STEPS).contains(&steps) {
        return Err(format!("steps must lie in 1..={MAX_SWEEP_STEPS}"));
    }
    let ctx = ThermoContext::same(ComplexMatrix::diag_real(&[0.0, 1.0]), beta).map_err(|e| e.to_string())?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = pure_state(&[C64::new(s, 0.0), C64::new(s, 0.0)]);
    let settings = SdpSettings::default();
    let points = (0..=steps)
        .map(|i| {
            let lambda = i as f64 / steps as f64;
            let r = decide_thermal_conversion(&plus, &coherence_sweep_target(lambda), &ctx, None, &settings)?;
            Ok(SweepPoint {
                lambda,
                feasible: r.conversion.feasible,
                marginal: r.conversion.marginal,
                alpha: r.conversion.alpha,
                closed_form: coherence_sweep_oracle(lambda, beta),
            })
        })
        .collect::<qmajor::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    json(&points)
}

/// Clock guessing probability of the qubit `cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`
/// under `H = diag(0, 1)` with `epsilon = 2 pi / N`, for `N = 2..=max_n`.
pub fn clock_curve_json(theta: f64, phi: f64, max_n: usize) -> Result<String, String> {
    if !(2..=MAX_CLOCK_ORDER).contains(&max_n) {
        return Err(format!("max_n must lie in 2..={MAX_CLOCK_ORDER}"));
    }
    let psi = [C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)];
    let rho = pure_state(&psi);
    let h = ComplexMatrix::diag_real(&[0.0, 1.0]);
    let settings = SdpSettings::default();
    let points = (2..=max_n)
        .map(|n| {
            let cfg = ClockConfig::new(n, 2.0 * std::f64::consts::PI / n as f64)?;
            let g = clock_guess(&rho, &h, &cfg, &settings)?;
            Ok(ClockPoint { n, p_guess: g.p_guess, h_min: g.h_min })
        })
        .collect::<qmajor::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    json(&points)
}

#[wasm_bindgen]
pub fn thermo_curves(p: &[f64], q: &[f64], gibbs: &[f64]) -> Result<String, JsError> {
    thermo_curves_json(p, q, gibbs).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn coherence_sweep(beta: f64, steps: usize) -> Result<String, JsError> {
    coherence_sweep_json(beta, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn clock_curve(theta: f64, phi: f64, max_n: usize) -> Result<String, JsError> {
    clock_curve_json(theta, phi, max_n).map_err(|e| JsError::new(&e))
}
