//! Ensemble and bipartite quantum majorization.
//!
//! An ensemble `{rho_i}` on B converts to `{sigma_i}` on C when one channel maps every
//! `rho_i` to `sigma_i`. Two independent routes decide this:
//!
//! * a direct search over Choi matrices minimizing the total trace-norm slack;
//! * the threshold `alpha = min Tr Z` s.t. `I (x) Z >= sum_i X_i (x) rho_i`,
//!   `sum_i Tr(sigma_i^T X_i) = 1`, `X_i >= 0`, which equals 1 exactly when the
//!   conversion is possible and otherwise yields a min-entropy witness.
//!
//! The dual program `beta` is solved separately as a consistency check.

mod bipartite;
mod classical;

pub use bipartite::{decide_bipartite_qmaj, MARGINAL_TOL, measure_prepare_violation, verify_monotone_necessity, BipartiteReport};
pub use classical::{
    matrix_majorization, sublinear_criterion, thermo_curve_breakpoints, thermo_functionals, thermo_majorization_check,
    thermo_majorizes, thermo_margin, MatrixMajorization, MATRIX_MAJORIZATION_TOL, MIN_GIBBS_WEIGHT, THERMO_TOL,
};

use serde::Serialize;

use crate::covariant::{bipartite_twirl, check_covariance, covariance_maps, Representation, Side};
use crate::error::{Error, Result};
use crate::linalg::{kron, trace_first, trace_norm, trace_second, ComplexMatrix};
use crate::minentropy::min_entropy;
use crate::quantum::{apply_choi, validate_state, QuantumChannel};
use crate::sdp::{solve, LinearTermOwned, SdpBuilder, SdpSettings, Sense, EPS_FEAS};

/// |alpha - 1| below this (but above the feasibility tolerance) flags a marginal instance.
pub const MARGINAL_BAND: f64 = 1e-4;
/// Required agreement between alpha and beta.
pub const ALPHA_BETA_TOL: f64 = 1e-5;
/// Witness components with smaller trace are dropped.
pub const WITNESS_DROP: f64 = 1e-10;
/// Minimum min-entropy violation for an accepted witness.
pub const WITNESS_MIN_VIOLATION: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ConversionProblem {
    pub inputs: Vec<ComplexMatrix>,
    pub targets: Vec<ComplexMatrix>,
    /// Positive weights summing to one; used for witnesses only.
    pub weights: Vec<f64>,
}

impl ConversionProblem {
    pub fn new(inputs: Vec<ComplexMatrix>, targets: Vec<ComplexMatrix>, weights: Option<Vec<f64>>) -> Result<Self> {
        let n = inputs.len();
        if n == 0 || targets.len() != n {
            return Err(Error::Validation(format!("need equally many inputs and targets, got {n} and {}", targets.len())));
        }
        let weights = weights.unwrap_or_else(|| vec![1.0 / n as f64; n]);
        if weights.len() != n || weights.iter().any(|w| !(*w > 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Validation("weights must be positive and sum to one".into()));
        }
        let (db, dc) = (inputs[0].rows(), targets[0].rows());
        for s in &inputs {
            if s.rows() != db {
                return Err(Error::Dimension("input states differ in dimension".into()));
            }
            validate_state(s)?;
        }
        for s in &targets {
            if s.rows() != dc {
                return Err(Error::Dimension("target states differ in dimension".into()));
            }
            validate_state(s)?;
        }
        Ok(Self {
            inputs: inputs.into_iter().map(|m| m.hermitian_part()).collect(),
            targets: targets.into_iter().map(|m| m.hermitian_part()).collect(),
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn d_in(&self) -> usize {
        self.inputs[0].rows()
    }

    pub fn d_out(&self) -> usize {
        self.targets[0].rows()
    }
}

#[derive(Debug, Clone)]
pub struct AlphaResult {
    pub value: f64,
    /// Optimal X_i on A' (dimension of the targets).
    pub x: Vec<ComplexMatrix>,
    pub z: ComplexMatrix,
}

#[derive(Debug, Clone)]
pub struct DirectResult {
    /// Minimal total trace norm sum_i ||E(rho_i) - sigma_i||_1 (upper bound from slacks).
    pub slack: f64,
    pub choi: ComplexMatrix,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub weights: Vec<f64>,
    pub states: Vec<ComplexMatrix>,
    /// Indices of the ensemble members kept in the witness.
    pub members: Vec<usize>,
    pub h_min_b: f64,
    pub h_min_c: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Margins {
    /// 1 - alpha.
    pub alpha_gap: f64,
    /// Optimal slack of the direct search.
    pub slack: f64,
    /// Largest trace distance ||E(rho_i) - sigma_i||_1 of the recovered channel.
    pub channel_residual: Option<f64>,
    /// Covariance residual of the recovered channel when a symmetry was imposed.
    pub covariance_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConversionReport {
    pub feasible: bool,
    pub marginal: bool,
    pub alpha: f64,
    pub beta: f64,
    pub channel: Option<QuantumChannel>,
    pub witness: Option<Witness>,
    pub margins: Margins,
}

fn twirl_or_id(rep: Option<&Representation>, m: &ComplexMatrix, left: Side, right: Side) -> ComplexMatrix {
    match rep {
        Some(r) if !r.is_trivial() => bipartite_twirl(m, r, left, right).expect("representation dimensions checked"),
        _ => m.clone(),
    }
}

/// Solves the alpha program, optionally restricted to a symmetry group.
pub fn compute_alpha(problem: &ConversionProblem, rep: Option<&Representation>, settings: &SdpSettings) -> Result<AlphaResult> {
    let (db, dc) = (problem.d_in(), problem.d_out());
    if let Some(r) = rep {
        r.check_dims(db, dc)?;
    }
    let mut b = SdpBuilder::new();
    let z = b.block(db);
    b.objective(z, ComplexMatrix::identity(db));
    let xs: Vec<_> = (0..problem.len()).map(|_| b.block(dc)).collect();
    let slack = b.block(dc * db);

    let id_c = ComplexMatrix::identity(dc);
    let lift = move |m: &ComplexMatrix| kron(&id_c, m);
    let neg = |m: &ComplexMatrix| m.scale(-1.0);
    let maps: Vec<LinearTermOwned> = problem
        .inputs
        .iter()
        .map(|rho| {
            let rho = rho.clone();
            let rep = rep.cloned();
            Box::new(move |x: &ComplexMatrix| twirl_or_id(rep.as_ref(), &kron(x, &rho), Side::Output, Side::Input).scale(-1.0))
                as LinearTermOwned
        })
        .collect();
    let mut terms: Vec<(crate::sdp::BlockId, &dyn Fn(&ComplexMatrix) -> ComplexMatrix)> = vec![(z, &lift), (slack, &neg)];
    for (x, m) in xs.iter().zip(&maps) {
        terms.push((*x, m.as_ref()));
    }
    b.equality(dc * db, &terms, &ComplexMatrix::zeros(dc * db, dc * db));
    b.scalar_equality(xs.iter().zip(&problem.targets).map(|(x, s)| (*x, s.transpose())).collect(), 1.0);

    let sol = solve(&b.build(Sense::Minimize), settings)?.require_optimal("alpha program")?;
    Ok(AlphaResult {
        value: 0.5 * (sol.primal_objective + sol.dual_objective),
        x: xs.iter().map(|x| sol.primal[x.0].clone()).collect(),
        z: sol.primal[z.0].clone(),
    })
}

/// Solves the beta program (max y s.t. tau >= 0, Tr_A' tau <= I, y sigma_i^T <= Tr_B[tau (I (x) rho_i)]).
pub fn compute_beta(problem: &ConversionProblem, rep: Option<&Representation>, settings: &SdpSettings) -> Result<f64> {
    let (db, dc) = (problem.d_in(), problem.d_out());
    if let Some(r) = rep {
        r.check_dims(db, dc)?;
    }
    let mut b = SdpBuilder::new();
    let tau = b.block(dc * db);
    let w = b.block(db);
    let y = b.block(1);
    b.objective(y, ComplexMatrix::identity(1));

    let marg = move |t: &ComplexMatrix| trace_first(t, dc, db);
    let ident = |m: &ComplexMatrix| m.clone();
    b.equality(db, &[(tau, &marg), (w, &ident)], &ComplexMatrix::identity(db));

    for (rho, sigma) in problem.inputs.iter().zip(&problem.targets) {
        let s = b.block(dc);
        let rho = rho.clone();
        let rep_c = rep.cloned();
        let id_c = ComplexMatrix::identity(dc);
        let contract = move |t: &ComplexMatrix| {
            let tw = twirl_or_id(rep_c.as_ref(), t, Side::Output, Side::Input);
            trace_second(&tw.matmul(&kron(&id_c, &rho)), dc, db).hermitian_part()
        };
        let st = sigma.transpose();
        let ymap = move |m: &ComplexMatrix| st.scale_c(-m[(0, 0)]);
        let neg = |m: &ComplexMatrix| m.scale(-1.0);
        b.equality(dc, &[(tau, &contract), (y, &ymap), (s, &neg)], &ComplexMatrix::zeros(dc, dc));
    }
    let sol = solve(&b.build(Sense::Maximize), settings)?.require_optimal("beta program")?;
    Ok(0.5 * (sol.primal_objective + sol.dual_objective))
}

/// Direct channel search: minimize sum_i Tr(S+_i + S-_i) subject to
/// `E(rho_i) - sigma_i = S+_i - S-_i`, `Tr_out J = I`, and covariance constraints.
pub fn direct_feasibility(problem: &ConversionProblem, rep: Option<&Representation>, settings: &SdpSettings) -> Result<DirectResult> {
    let (db, dc) = (problem.d_in(), problem.d_out());
    let mut b = SdpBuilder::new();
    let j = b.block(db * dc);
    let tp = move |m: &ComplexMatrix| trace_second(m, db, dc);
    b.equality(db, &[(j, &tp)], &ComplexMatrix::identity(db));
    for (rho, sigma) in problem.inputs.iter().zip(&problem.targets) {
        let sp = b.block(dc);
        let sm = b.block(dc);
        b.objective(sp, ComplexMatrix::identity(dc));
        b.objective(sm, ComplexMatrix::identity(dc));
        let rho = rho.clone();
        let act = move |m: &ComplexMatrix| apply_choi(m, db, dc, &rho);
        let neg = |m: &ComplexMatrix| m.scale(-1.0);
        let pos = |m: &ComplexMatrix| m.clone();
        b.equality(dc, &[(j, &act), (sp, &neg), (sm, &pos)], sigma);
    }
    if let Some(r) = rep {
        r.check_dims(db, dc)?;
        for map in covariance_maps(r) {
            b.equality(db * dc, &[(j, map.as_ref())], &ComplexMatrix::zeros(db * dc, db * dc));
        }
    }
    let sol = solve(&b.build(Sense::Minimize), settings)?.require_optimal("direct feasibility")?;
    Ok(DirectResult { slack: sol.primal_objective.max(0.0), choi: sol.primal[j.0].clone() })
}

/// Witness states for fixed weights `q`: `omega_i = (X_i + c_i I) / (kappa q_i)`.
///
/// Adding multiples of the identity shifts both sides of the min-entropy comparison
/// equally (all channels are trace preserving), so the violation sign is kept.
pub fn witness_states_for_weights(x: &[ComplexMatrix], q: &[f64]) -> Vec<ComplexMatrix> {
    let d = x[0].rows();
    let traces: Vec<f64> = x.iter().map(|m| m.trace().re.max(0.0)).collect();
    let kappa = traces.iter().zip(q).map(|(t, qi)| t / qi).fold(0.0, f64::max).max(1e-300);
    x.iter()
        .zip(&traces)
        .zip(q)
        .map(|((m, t), qi)| {
            let c = (kappa * qi - t) / d as f64;
            (m + &ComplexMatrix::identity(d).scale(c.max(0.0))).scale(1.0 / (kappa * qi)).hermitian_part()
        })
        .collect()
}

/// `sum_i w_i omega_i (x) states_i`, twirled when a representation is given.
pub fn witness_operator(
    weights: &[f64],
    omegas: &[ComplexMatrix],
    states: &[ComplexMatrix],
    rep: Option<&Representation>,
    side: Side,
) -> ComplexMatrix {
    let d = omegas[0].rows() * states[0].rows();
    let mut out = ComplexMatrix::zeros(d, d);
    for ((w, o), s) in weights.iter().zip(omegas).zip(states) {
        out += &kron(o, s).scale(*w);
    }
    twirl_or_id(rep, &out, Side::Output, side).hermitian_part()
}

/// Extracts and verifies the min-entropy witness encoded in an optimal alpha solution.
pub fn extract_witness(
    problem: &ConversionProblem,
    alpha: &AlphaResult,
    rep: Option<&Representation>,
    settings: &SdpSettings,
) -> Result<Witness> {
    if alpha.value >= 1.0 - EPS_FEAS {
        return Err(Error::Validation(format!("no witness exists: alpha = {:.9} is feasible", alpha.value)));
    }
    let traces: Vec<f64> = alpha.x.iter().map(|m| m.trace().re).collect();
    let members: Vec<usize> = (0..traces.len()).filter(|&i| traces[i] >= WITNESS_DROP).collect();
    if members.is_empty() {
        return Err(Error::NonConvergence("alpha solution has no usable witness component".into()));
    }
    let total: f64 = members.iter().map(|&i| traces[i]).sum();
    let weights: Vec<f64> = members.iter().map(|&i| traces[i] / total).collect();
    let states: Vec<ComplexMatrix> = members.iter().map(|&i| alpha.x[i].scale(1.0 / traces[i]).hermitian_part()).collect();
    let ins: Vec<ComplexMatrix> = members.iter().map(|&i| problem.inputs[i].clone()).collect();
    let outs: Vec<ComplexMatrix> = members.iter().map(|&i| problem.targets[i].clone()).collect();
    let dc = problem.d_out();
    let ob = witness_operator(&weights, &states, &ins, rep, Side::Input);
    let oc = witness_operator(&weights, &states, &outs, rep, Side::Output);
    let h_b = min_entropy(&ob, dc, problem.d_in(), settings)?.value;
    let h_c = min_entropy(&oc, dc, dc, settings)?.value;
    let violation = h_b - h_c;
    if violation < WITNESS_MIN_VIOLATION {
        return Err(Error::NonConvergence(format!("witness rejected: min-entropy violation {violation:.3e}")));
    }
    Ok(Witness { weights, states, members, h_min_b: h_b, h_min_c: h_c, violation })
}

/// Decides an ensemble conversion with both routes.
pub fn decide_ensemble_conversion(problem: &ConversionProblem, settings: &SdpSettings) -> Result<ConversionReport> {
    decide_with_symmetry(problem, None, settings)
}

/// Decision with an optional symmetry constraint on the channel.
pub fn decide_with_symmetry(
    problem: &ConversionProblem,
    rep: Option<&Representation>,
    settings: &SdpSettings,
) -> Result<ConversionReport> {
    if let Some(r) = rep {
        r.check_dims(problem.d_in(), problem.d_out())?;
    }
    let direct = direct_feasibility(problem, rep, settings)?;
    let alpha = compute_alpha(problem, rep, settings)?;
    let beta = compute_beta(problem, rep, settings)?;
    if (alpha.value - beta).abs() > ALPHA_BETA_TOL {
        return Err(Error::RouteDisagreement(format!("alpha = {:.9} but beta = {beta:.9}", alpha.value)));
    }
    let alpha_gap = 1.0 - alpha.value;
    let direct_ok = direct.slack <= EPS_FEAS;
    let alpha_ok = alpha_gap <= EPS_FEAS;
    let near = alpha_gap.abs() < MARGINAL_BAND;
    let marginal = near && !(direct_ok && alpha_ok);
    if direct_ok != alpha_ok && !near {
        return Err(Error::RouteDisagreement(format!(
            "direct slack {:.3e} ({}) but alpha = {:.9} ({})",
            direct.slack,
            if direct_ok { "feasible" } else { "infeasible" },
            alpha.value,
            if alpha_ok { "feasible" } else { "infeasible" },
        )));
    }
    let feasible = direct_ok;
    let mut margins = Margins { alpha_gap, slack: direct.slack, channel_residual: None, covariance_residual: None };
    let mut channel = None;
    let mut witness = None;
    if feasible {
        let ch = QuantumChannel::normalized_from(problem.d_in(), problem.d_out(), &direct.choi)?;
        let mut worst = 0.0f64;
        for (rho, sigma) in problem.inputs.iter().zip(&problem.targets) {
            worst = worst.max(trace_norm(&(&ch.apply(rho) - sigma))?);
        }
        margins.channel_residual = Some(worst);
        if let Some(r) = rep {
            margins.covariance_residual = Some(check_covariance(&ch, r)?);
        }
        channel = Some(ch);
    } else if alpha_gap > EPS_FEAS {
        witness = match extract_witness(problem, &alpha, rep, settings) {
            Ok(w) => Some(w),
            Err(_) if marginal => None,
            Err(e) => return Err(e),
        };
    }
    Ok(ConversionReport { feasible, marginal, alpha: alpha.value, beta, channel, witness, margins })
}
