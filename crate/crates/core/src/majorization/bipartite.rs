//! Bipartite quantum majorization: a channel on B alone taking rho^{AB} to sigma^{AC}.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    decide_ensemble_conversion, witness_states_for_weights, compute_alpha, ConversionProblem, ConversionReport,
    MARGINAL_BAND,
};
use crate::error::{Error, Result};
use crate::linalg::{kron, trace_first, trace_norm, trace_second, ComplexMatrix};
use crate::minentropy::min_entropy;
use crate::quantum::{
    apply_choi, ic_povm, random_pure_state_rng, random_state_rng, reduce_bipartite_to_ensemble, validate_state, PovmBasis,
    QuantumChannel, POVM_DELTA, POVM_MIN_PROB,
};
use crate::sdp::{solve, SdpBuilder, SdpSettings, Sense, EPS_FEAS};

/// Largest admissible trace distance between the two A-marginals.
pub const MARGINAL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Serialize)]
pub struct BipartiteReport {
    pub feasible: bool,
    pub marginal: bool,
    /// Reason for an infeasible verdict reached without solving.
    pub reason: Option<String>,
    pub marginal_distance: f64,
    /// Optimal trace-norm slack of the direct search over channels on B.
    pub direct_slack: Option<f64>,
    /// Ensemble route through the IC-POVM reduction.
    pub ensemble: Option<ConversionReport>,
    pub povm_perturbed: bool,
    pub channel: Option<QuantumChannel>,
    /// Violation of the min-entropy condition by the measure-and-prepare channel
    /// built from the ensemble witness.
    pub witness_violation: Option<f64>,
}

fn check_bipartite(m: &ComplexMatrix, d_a: usize, d_x: usize, what: &str) -> Result<()> {
    if m.rows() != d_a * d_x {
        return Err(Error::Dimension(format!("{what} has dimension {} but expected {d_a} x {d_x}", m.rows())));
    }
    validate_state(m)
}

/// `(id_A (x) E_J)(rho)` for a Choi matrix `J` on `B (x) C`.
fn apply_second_choi(j: &ComplexMatrix, d_b: usize, d_c: usize, rho: &ComplexMatrix, d_a: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(d_a * d_c, d_a * d_c);
    for a in 0..d_a {
        for a2 in 0..d_a {
            let blk = rho.sub_block(a * d_b, a2 * d_b, d_b, d_b);
            let img = apply_choi(j, d_b, d_c, &blk);
            for c in 0..d_c {
                for c2 in 0..d_c {
                    out[(a * d_c + c, a2 * d_c + c2)] = img[(c, c2)];
                }
            }
        }
    }
    out
}

fn direct_bipartite(
    rho_ab: &ComplexMatrix,
    sigma_ac: &ComplexMatrix,
    d_a: usize,
    d_b: usize,
    d_c: usize,
    settings: &SdpSettings,
) -> Result<(f64, ComplexMatrix)> {
    let mut b = SdpBuilder::new();
    let j = b.block(d_b * d_c);
    let sp = b.block(d_a * d_c);
    let sm = b.block(d_a * d_c);
    b.objective(sp, ComplexMatrix::identity(d_a * d_c));
    b.objective(sm, ComplexMatrix::identity(d_a * d_c));
    let tp = move |m: &ComplexMatrix| trace_second(m, d_b, d_c);
    b.equality(d_b, &[(j, &tp)], &ComplexMatrix::identity(d_b));
    let rho = rho_ab.clone();
    let act = move |m: &ComplexMatrix| apply_second_choi(m, d_b, d_c, &rho, d_a);
    let neg = |m: &ComplexMatrix| m.scale(-1.0);
    let pos = |m: &ComplexMatrix| m.clone();
    b.equality(d_a * d_c, &[(j, &act), (sp, &neg), (sm, &pos)], sigma_ac);
    let sol = solve(&b.build(Sense::Minimize), settings)?.require_optimal("bipartite feasibility")?;
    Ok((sol.primal_objective.max(0.0), sol.primal[j.0].clone()))
}

/// IC-POVM for the A side, perturbed when some outcome is nearly impossible on `rho_a`.
fn povm_for(rho_a: &ComplexMatrix) -> Result<(PovmBasis, bool)> {
    let povm = ic_povm(rho_a.rows())?;
    if povm.probabilities(rho_a).iter().any(|p| *p < POVM_MIN_PROB) {
        Ok((povm.perturbed(POVM_DELTA)?, true))
    } else {
        Ok((povm, false))
    }
}

/// `sum_j omega_j (x) Tr_A[(M_j (x) I) rho]`, the image of `rho` under a measure-and-prepare
/// channel on A.
fn measure_prepare(rho: &ComplexMatrix, d_a: usize, d_x: usize, povm: &PovmBasis, omegas: &[ComplexMatrix]) -> ComplexMatrix {
    let d = omegas[0].rows() * d_x;
    let mut out = ComplexMatrix::zeros(d, d);
    for (m, w) in povm.elements.iter().zip(omegas) {
        let branch = trace_first(&kron(m, &ComplexMatrix::identity(d_x)).matmul(rho), d_a, d_x).hermitian_part();
        out += &kron(w, &branch);
    }
    out.hermitian_part()
}

/// `H_min(A'|B) - H_min(A'|C)` after a measure-and-prepare channel on A; positive
/// values rule out the conversion.
#[allow(clippy::too_many_arguments)]
pub fn measure_prepare_violation(
    rho_ab: &ComplexMatrix,
    sigma_ac: &ComplexMatrix,
    d_a: usize,
    d_b: usize,
    d_c: usize,
    povm: &PovmBasis,
    omegas: &[ComplexMatrix],
    settings: &SdpSettings,
) -> Result<f64> {
    if omegas.len() != povm.elements.len() || povm.dim() != d_a {
        return Err(Error::Dimension("one prepared state per POVM outcome is required".into()));
    }
    let d_p = omegas[0].rows();
    let hb = min_entropy(&measure_prepare(rho_ab, d_a, d_b, povm, omegas), d_p, d_b, settings)?.value;
    let hc = min_entropy(&measure_prepare(sigma_ac, d_a, d_c, povm, omegas), d_p, d_c, settings)?.value;
    Ok(hb - hc)
}

/// Decides `rho^{AB} -> sigma^{AC}` by a channel on B, via the direct channel search and,
/// independently, the IC-POVM ensemble reduction.
pub fn decide_bipartite_qmaj(
    rho_ab: &ComplexMatrix,
    sigma_ac: &ComplexMatrix,
    d_a: usize,
    d_b: usize,
    d_c: usize,
    settings: &SdpSettings,
) -> Result<BipartiteReport> {
    check_bipartite(rho_ab, d_a, d_b, "rho_AB")?;
    check_bipartite(sigma_ac, d_a, d_c, "sigma_AC")?;
    let rho_a = trace_second(rho_ab, d_a, d_b);
    let sigma_a = trace_second(sigma_ac, d_a, d_c);
    let dist = trace_norm(&(&rho_a - &sigma_a))?;
    let mut report = BipartiteReport {
        feasible: false,
        marginal: false,
        reason: None,
        marginal_distance: dist,
        direct_slack: None,
        ensemble: None,
        povm_perturbed: false,
        channel: None,
        witness_violation: None,
    };
    if dist > MARGINAL_TOL {
        report.reason = Some("incompatible marginals".into());
        return Ok(report);
    }

    let (slack, choi) = direct_bipartite(rho_ab, sigma_ac, d_a, d_b, d_c, settings)?;
    report.direct_slack = Some(slack);
    let direct_ok = slack <= EPS_FEAS;

    let (povm, perturbed) = povm_for(&rho_a)?;
    report.povm_perturbed = perturbed;
    let from = reduce_bipartite_to_ensemble(rho_ab, d_a, d_b, &povm)?;
    let to = reduce_bipartite_to_ensemble(sigma_ac, d_a, d_c, &povm)?;
    let problem = ConversionProblem::new(
        from.ensemble.states().to_vec(),
        to.ensemble.states().to_vec(),
        Some(from.ensemble.weights().to_vec()),
    )?;
    let ens = decide_ensemble_conversion(&problem, settings)?;
    let slack_near = slack > EPS_FEAS && slack < MARGINAL_BAND;
    report.marginal = ens.marginal || slack_near;
    if direct_ok != ens.feasible && !report.marginal {
        return Err(Error::RouteDisagreement(format!(
            "direct slack {slack:.3e} vs ensemble alpha {:.9} (feasible = {})",
            ens.alpha, ens.feasible
        )));
    }
    report.feasible = direct_ok;
    if direct_ok {
        report.channel = Some(QuantumChannel::normalized_from(d_b, d_c, &choi)?);
    } else if ens.alpha < 1.0 - EPS_FEAS {
        let alpha = compute_alpha(&problem, None, settings)?;
        let omegas = witness_states_for_weights(&alpha.x, from.ensemble.weights());
        report.witness_violation = Some(measure_prepare_violation(rho_ab, sigma_ac, d_a, d_b, d_c, &povm, &omegas, settings)?);
    }
    report.ensemble = Some(ens);
    Ok(report)
}

/// Largest min-entropy violation over `trials` random measure-and-prepare channels
/// (fixed IC-POVM on A, random prepared states on a copy of C).
#[allow(clippy::too_many_arguments)]
pub fn verify_monotone_necessity(
    rho_ab: &ComplexMatrix,
    sigma_ac: &ComplexMatrix,
    d_a: usize,
    d_b: usize,
    d_c: usize,
    trials: usize,
    seed: u64,
    settings: &SdpSettings,
) -> Result<f64> {
    check_bipartite(rho_ab, d_a, d_b, "rho_AB")?;
    check_bipartite(sigma_ac, d_a, d_c, "sigma_AC")?;
    let (povm, _) = povm_for(&trace_second(rho_ab, d_a, d_b))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let omegas: Vec<ComplexMatrix> = (0..povm.elements.len())
            .map(|_| if rng.random_bool(0.5) { random_pure_state_rng(d_c, &mut rng) } else { random_state_rng(d_c, &mut rng) })
            .collect();
        worst = worst.max(measure_prepare_violation(rho_ab, sigma_ac, d_a, d_b, d_c, &povm, &omegas, settings)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{max_entangled, maximally_mixed, random_channel_rng};

    fn s() -> SdpSettings {
        SdpSettings::default()
    }

    #[test]
    fn self_conversion_is_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_state_rng(4, &mut rng);
        let r = decide_bipartite_qmaj(&rho, &rho, 2, 2, 2, &s()).unwrap();
        assert!(r.feasible);
        let v = verify_monotone_necessity(&rho, &rho, 2, 2, 2, 20, 3, &s()).unwrap();
        assert!(v.abs() < 1e-6, "{v}");
    }

    #[test]
    fn trace_and_replace_is_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_state_rng(4, &mut rng);
        let tau = random_state_rng(3, &mut rng);
        let sigma = kron(&trace_second(&rho, 2, 2), &tau);
        assert!(decide_bipartite_qmaj(&rho, &sigma, 2, 2, 3, &s()).unwrap().feasible);
    }

    #[test]
    fn local_channel_cannot_create_entanglement() {
        let rho = maximally_mixed(4);
        let r = decide_bipartite_qmaj(&rho, &max_entangled(2), 2, 2, 2, &s()).unwrap();
        assert!(!r.feasible && r.reason.is_none());
        assert!(r.witness_violation.unwrap() > 1e-6);
    }

    #[test]
    fn incompatible_marginals_short_circuit() {
        let rho = kron(&ComplexMatrix::diag_real(&[1.0, 0.0]), &maximally_mixed(2));
        let sigma = maximally_mixed(4);
        let r = decide_bipartite_qmaj(&rho, &sigma, 2, 2, 2, &s()).unwrap();
        assert_eq!(r.reason.as_deref(), Some("incompatible marginals"));
    }

    #[test]
    fn local_channel_images_pass_sampled_monotones() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_state_rng(6, &mut rng);
        let ch = random_channel_rng(3, 2, &mut rng);
        let sigma = ch.apply_second(&rho, 2);
        let r = decide_bipartite_qmaj(&rho, &sigma, 2, 3, 2, &s()).unwrap();
        assert!(r.feasible);
        let out = r.channel.unwrap().apply_second(&rho, 2);
        assert!(trace_norm(&(&out - &sigma)).unwrap() < 1e-5);
        assert!(verify_monotone_necessity(&rho, &sigma, 2, 3, 2, 30, 5, &s()).unwrap() < 1e-6);
    }
}
