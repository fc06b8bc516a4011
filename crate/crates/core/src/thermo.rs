//! Generalized thermal processes: Gibbs-preserving covariant channels.
//!
//! Thermal operations with Hamiltonians `H_in`, `H_out` and optional commuting charges
//! coincide with channels that are covariant under the joint time/charge translations
//! and map `gamma_in` to `gamma_out`. Conversions are decided as covariant ensemble
//! conversions `{rho, gamma_in} -> {sigma, gamma_out}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::covariant::{check_covariance, covariance_maps, pinch, Representation, Side, SPECTRUM_GROUPING_TOL};
use crate::error::{Error, Result};
use crate::linalg::{cluster_sorted, eig_hermitian, eigvals_hermitian, kron, trace_norm, trace_second, unitary_evolution, ComplexMatrix, C64};
use crate::majorization::{decide_with_symmetry, thermo_majorizes, witness_states_for_weights, ConversionProblem, ConversionReport};
use crate::minentropy::{guessing_probability, min_entropy};
use crate::quantum::{apply_choi, validate_state, Ensemble, QuantumChannel};
use crate::sdp::{solve, SdpBuilder, SdpSettings, Sense};

/// Allowed commutator norm between a Hamiltonian and its charges.
pub const CHARGE_COMMUTATOR_TOL: f64 = 1e-9;
/// Commutator norm below which a state counts as incoherent.
pub const INCOHERENCE_TOL: f64 = 1e-9;
/// Periodicity tolerance for clock configurations.
pub const PERIODICITY_TOL: f64 = 1e-8;
/// Largest group order produced by [`zn_from_hamiltonian`].
pub const ZN_MAX_ORDER: usize = 4096;
/// Agreement required between the clock guessing probability and the cq min-entropy.
pub const CLOCK_IDENTITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct ThermoContext {
    pub h_in: ComplexMatrix,
    pub h_out: ComplexMatrix,
    pub charges_in: Vec<ComplexMatrix>,
    pub charges_out: Vec<ComplexMatrix>,
    pub beta: f64,
    pub mus: Vec<f64>,
}

fn check_hamiltonian(h: &ComplexMatrix, what: &str) -> Result<()> {
    if !h.is_square() || h.rows() == 0 {
        return Err(Error::Dimension(format!("{what} must be a nonempty square matrix")));
    }
    if !h.is_hermitian(1e-10) {
        return Err(Error::NotHermitian(h.hermiticity_defect()));
    }
    Ok(())
}

impl ThermoContext {
    pub fn new(h_in: ComplexMatrix, h_out: ComplexMatrix, beta: f64) -> Result<Self> {
        check_hamiltonian(&h_in, "H_in")?;
        check_hamiltonian(&h_out, "H_out")?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Validation(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { h_in, h_out, charges_in: Vec::new(), charges_out: Vec::new(), beta, mus: Vec::new() })
    }

    /// Same Hamiltonian on input and output.
    pub fn same(h: ComplexMatrix, beta: f64) -> Result<Self> {
        Self::new(h.clone(), h, beta)
    }

    /// Adds a conserved charge with chemical potential `mu`.
    pub fn with_charge(mut self, x_in: ComplexMatrix, x_out: ComplexMatrix, mu: f64) -> Result<Self> {
        for (x, h, prev, what) in
            [(&x_in, &self.h_in, &self.charges_in, "input charge"), (&x_out, &self.h_out, &self.charges_out, "output charge")]
        {
            check_hamiltonian(x, what)?;
            if x.rows() != h.rows() {
                return Err(Error::Dimension(format!("{what} does not match its Hamiltonian")));
            }
            let c = x.commutator(h).max_abs();
            if c > CHARGE_COMMUTATOR_TOL {
                return Err(Error::Validation(format!("{what} does not commute with the Hamiltonian (residual {c:.3e})")));
            }
            for y in prev {
                if x.commutator(y).max_abs() > CHARGE_COMMUTATOR_TOL {
                    return Err(Error::Validation(format!("{what} does not commute with an earlier charge")));
                }
            }
        }
        if !mu.is_finite() {
            return Err(Error::Validation("chemical potential must be finite".into()));
        }
        self.charges_in.push(x_in);
        self.charges_out.push(x_out);
        self.mus.push(mu);
        Ok(self)
    }

    pub fn d_in(&self) -> usize {
        self.h_in.rows()
    }

    pub fn d_out(&self) -> usize {
        self.h_out.rows()
    }

    /// Hamiltonian followed by the charges of one side.
    pub fn generators(&self, side: Side) -> Vec<&ComplexMatrix> {
        let (h, xs) = match side {
            Side::Input => (&self.h_in, &self.charges_in),
            Side::Output => (&self.h_out, &self.charges_out),
        };
        std::iter::once(h).chain(xs.iter()).collect()
    }

    /// One-parameter factors for time translation and every charge.
    pub fn representation(&self) -> Result<Representation> {
        let mut rep = Representation::one_parameter(self.h_in.clone(), self.h_out.clone())?;
        for (xi, xo) in self.charges_in.iter().zip(&self.charges_out) {
            rep = rep.with_one_parameter(xi.clone(), xo.clone())?;
        }
        Ok(rep)
    }

    fn dim(&self, side: Side) -> usize {
        match side {
            Side::Input => self.d_in(),
            Side::Output => self.d_out(),
        }
    }
}

/// `exp[-beta (H - sum_k mu_k X_k)] / Z`, computed with a spectral shift.
pub fn gibbs_state(ctx: &ThermoContext, side: Side) -> Result<ComplexMatrix> {
    let gens = ctx.generators(side);
    let mut k = gens[0].clone();
    for (x, mu) in gens[1..].iter().zip(&ctx.mus) {
        k -= &x.scale(*mu);
    }
    let e = eig_hermitian(&k.hermitian_part())?;
    let lo = e.values[0];
    let z: f64 = e.values.iter().map(|v| (-ctx.beta * (v - lo)).exp()).sum();
    Ok(e.map(|v| (-ctx.beta * (v - lo)).exp() / z).hermitian_part())
}

/// Infinite-time average: pinching in the eigenspaces of `h_total`.
pub fn time_average(x: &ComplexMatrix, h_total: &ComplexMatrix) -> Result<ComplexMatrix> {
    if x.rows() != h_total.rows() {
        return Err(Error::Dimension("time average: operator and Hamiltonian differ in dimension".into()));
    }
    pinch(x, h_total)
}

/// Average over the group generated by commuting generators (joint eigenspace pinching).
pub fn group_average(x: &ComplexMatrix, generators: &[&ComplexMatrix]) -> Result<ComplexMatrix> {
    let mut out = x.clone();
    for g in generators {
        out = time_average(&out, g)?;
    }
    Ok(out)
}

/// Orthonormal bases (as isometries) of the joint eigenspaces of commuting generators.
pub fn joint_eigenspaces(generators: &[&ComplexMatrix]) -> Result<Vec<ComplexMatrix>> {
    let d = generators.first().map(|g| g.rows()).ok_or_else(|| Error::Validation("no generators".into()))?;
    let mut spaces = vec![ComplexMatrix::identity(d)];
    for g in generators {
        let vals = eigvals_hermitian(g)?;
        let tol = SPECTRUM_GROUPING_TOL * (1.0 + vals[vals.len() - 1] - vals[0]);
        let mut next = Vec::new();
        for v in &spaces {
            let e = eig_hermitian(&g.conjugate_by(&v.adjoint()).hermitian_part())?;
            for r in cluster_sorted(&e.values, tol) {
                let w = ComplexMatrix::from_fn(v.cols(), r.len(), |i, j| e.vectors[(i, r.start + j)]);
                next.push(v.matmul(&w));
            }
        }
        spaces = next;
    }
    Ok(spaces)
}

/// `(H_R, charges_R)` with `H_R = -H_out^T` and likewise for the charges.
pub fn build_reference(ctx: &ThermoContext) -> (ComplexMatrix, Vec<ComplexMatrix>) {
    (ctx.h_out.transpose().scale(-1.0), ctx.charges_out.iter().map(|x| x.transpose().scale(-1.0)).collect())
}

fn total_generators(ctx: &ThermoContext, side: Side) -> Vec<ComplexMatrix> {
    let (h_r, x_r) = build_reference(ctx);
    let d_r = ctx.d_out();
    let d = ctx.dim(side);
    std::iter::once(&h_r)
        .chain(x_r.iter())
        .zip(ctx.generators(side))
        .map(|(r, a)| &kron(r, &ComplexMatrix::identity(d)) + &kron(&ComplexMatrix::identity(d_r), a))
        .collect()
}

/// `S_eta(state) = H_min(R|A)` of `< q eta1 (x) state + (1-q) eta2 (x) gamma >`, where the
/// reference R carries `-H_out^T` and A is the input or output system.
pub fn thermal_monotone(
    state: &ComplexMatrix,
    eta1: &ComplexMatrix,
    eta2: &ComplexMatrix,
    q: f64,
    ctx: &ThermoContext,
    side: Side,
    settings: &SdpSettings,
) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Validation(format!("q must lie in (0, 1), got {q}")));
    }
    let d = ctx.dim(side);
    if state.rows() != d || eta1.rows() != ctx.d_out() || eta2.rows() != ctx.d_out() {
        return Err(Error::Dimension("thermal monotone: state or reference dimensions do not match the context".into()));
    }
    validate_state(state)?;
    validate_state(eta1)?;
    validate_state(eta2)?;
    let gamma = gibbs_state(ctx, side)?;
    let mix = &kron(eta1, state).scale(q) + &kron(eta2, &gamma).scale(1.0 - q);
    let gens = total_generators(ctx, side);
    let omega = group_average(&mix, &gens.iter().collect::<Vec<_>>())?;
    Ok(min_entropy(&omega, ctx.d_out(), d, settings)?.value)
}

/// `S_eta(rho) - S_eta(sigma)`; positive values rule out the conversion.
pub fn thermal_monotone_violation(
    rho: &ComplexMatrix,
    sigma: &ComplexMatrix,
    eta1: &ComplexMatrix,
    eta2: &ComplexMatrix,
    q: f64,
    ctx: &ThermoContext,
    settings: &SdpSettings,
) -> Result<f64> {
    Ok(thermal_monotone(rho, eta1, eta2, q, ctx, Side::Input, settings)?
        - thermal_monotone(sigma, eta1, eta2, q, ctx, Side::Output, settings)?)
}

fn commutes_with_all(x: &ComplexMatrix, gens: &[&ComplexMatrix]) -> bool {
    gens.iter().all(|g| x.commutator(g).max_abs() <= INCOHERENCE_TOL * (1.0 + g.max_abs()))
}

/// Populations of `x` on the joint eigenspaces (eigenvalues within each block) together
/// with the matching Gibbs populations, spread uniformly over each block.
fn populations(x: &ComplexMatrix, gamma: &ComplexMatrix, spaces: &[ComplexMatrix]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut p = Vec::new();
    let mut g = Vec::new();
    for v in spaces {
        let r = v.cols();
        let block = x.conjugate_by(&v.adjoint()).hermitian_part();
        p.extend(eigvals_hermitian(&block)?.into_iter().map(|e| e.max(0.0)));
        let gw = gamma.conjugate_by(&v.adjoint()).trace().re / r as f64;
        g.extend(std::iter::repeat_n(gw, r));
    }
    Ok((p, g))
}

/// Incoherent route: `<rho>` must thermo-majorize `sigma` (relative to the input and output
/// Gibbs populations). Requires `rho` or `sigma` to commute with the conserved quantities.
pub fn decide_thermal_incoherent(rho: &ComplexMatrix, sigma: &ComplexMatrix, ctx: &ThermoContext) -> Result<bool> {
    check_states(rho, sigma, ctx)?;
    let gin = ctx.generators(Side::Input);
    let gout = ctx.generators(Side::Output);
    let rho_inc = commutes_with_all(rho, &gin);
    let sigma_inc = commutes_with_all(sigma, &gout);
    if !rho_inc && !sigma_inc {
        return Err(Error::Validation("neither state commutes with its Hamiltonian and charges".into()));
    }
    if !sigma_inc {
        return Ok(false);
    }
    let avg = group_average(rho, &gin)?;
    let (p, gp) = populations(&avg, &gibbs_state(ctx, Side::Input)?, &joint_eigenspaces(&gin)?)?;
    let (q, gq) = populations(sigma, &gibbs_state(ctx, Side::Output)?, &joint_eigenspaces(&gout)?)?;
    thermo_majorizes(&p, &gp, &q, &gq)
}

fn check_states(rho: &ComplexMatrix, sigma: &ComplexMatrix, ctx: &ThermoContext) -> Result<()> {
    if rho.rows() != ctx.d_in() {
        return Err(Error::Dimension(format!("rho has dimension {} but H_in has {}", rho.rows(), ctx.d_in())));
    }
    if sigma.rows() != ctx.d_out() {
        return Err(Error::Dimension(format!("sigma has dimension {} but H_out has {}", sigma.rows(), ctx.d_out())));
    }
    validate_state(rho)?;
    validate_state(sigma)
}

#[derive(Debug, Clone, Serialize)]
pub struct ThermalReport {
    #[serde(flatten)]
    pub conversion: ConversionReport,
    /// Verdict of the incoherent route when its precondition holds.
    pub incoherent_verdict: Option<bool>,
    /// `S_eta(rho) - S_eta(sigma)` at `q = 1/2` for the witness-derived references.
    pub monotone_violation: Option<f64>,
}

/// Decides `rho -> sigma` under Gibbs-preserving covariant channels. With a clock
/// configuration the time-translation symmetry is restricted to the generated Z_N.
pub fn decide_thermal_conversion(
    rho: &ComplexMatrix,
    sigma: &ComplexMatrix,
    ctx: &ThermoContext,
    clock: Option<&ClockConfig>,
    settings: &SdpSettings,
) -> Result<ThermalReport> {
    check_states(rho, sigma, ctx)?;
    let g_in = gibbs_state(ctx, Side::Input)?;
    let g_out = gibbs_state(ctx, Side::Output)?;
    let problem = ConversionProblem::new(vec![rho.clone(), g_in], vec![sigma.clone(), g_out], None)?;
    let rep = match clock {
        None => ctx.representation()?,
        Some(cfg) => {
            let mut rep = Representation::cyclic(cfg.n, cfg.generator(&ctx.h_in)?, cfg.generator(&ctx.h_out)?)?;
            for (xi, xo) in ctx.charges_in.iter().zip(&ctx.charges_out) {
                rep = rep.with_one_parameter(xi.clone(), xo.clone())?;
            }
            rep
        }
    };
    let conversion = decide_with_symmetry(&problem, Some(&rep), settings)?;

    let mut incoherent_verdict = None;
    if clock.is_none()
        && (commutes_with_all(rho, &ctx.generators(Side::Input)) || commutes_with_all(sigma, &ctx.generators(Side::Output)))
    {
        let v = decide_thermal_incoherent(rho, sigma, ctx)?;
        if v != conversion.feasible && !conversion.marginal {
            return Err(Error::RouteDisagreement(format!(
                "thermal SDP says {} (alpha = {:.9}) but the incoherent route says {v}",
                conversion.feasible, conversion.alpha
            )));
        }
        incoherent_verdict = Some(v);
    }

    let mut monotone_violation = None;
    if let (Some(w), None) = (&conversion.witness, clock) {
        let mut x = vec![ComplexMatrix::zeros(ctx.d_out(), ctx.d_out()); 2];
        for ((&i, wi), s) in w.members.iter().zip(&w.weights).zip(&w.states) {
            x[i] = s.scale(*wi);
        }
        let etas = witness_states_for_weights(&x, &[0.5, 0.5]);
        monotone_violation = Some(thermal_monotone_violation(rho, sigma, &etas[0], &etas[1], 0.5, ctx, settings)?);
    }
    Ok(ThermalReport { conversion, incoherent_verdict, monotone_violation })
}

/// Largest `S_eta(rho) - S_eta(sigma)` over random reference pairs at `q = 1/2`.
pub fn thermal_monotone_search(
    rho: &ComplexMatrix,
    sigma: &ComplexMatrix,
    ctx: &ThermoContext,
    trials: usize,
    seed: u64,
    settings: &SdpSettings,
) -> Result<f64> {
    check_states(rho, sigma, ctx)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = ctx.d_out();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let draw = |rng: &mut ChaCha8Rng| {
            if rng.random_bool(0.5) {
                crate::quantum::random_pure_state_rng(d, rng)
            } else {
                crate::quantum::random_state_rng(d, rng)
            }
        };
        let (e1, e2) = (draw(&mut rng), draw(&mut rng));
        worst = worst.max(thermal_monotone_violation(rho, sigma, &e1, &e2, 0.5, ctx, settings)?);
    }
    Ok(worst)
}

/// Random channel that preserves the Gibbs state and commutes with time/charge
/// translations, obtained from a random linear objective over that set and mixed with
/// the Gibbs replacement channel. Both properties are re-verified.
pub fn random_gpc_channel(ctx: &ThermoContext, seed: u64, settings: &SdpSettings) -> Result<QuantumChannel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (di, dout) = (ctx.d_in(), ctx.d_out());
    let d = di * dout;
    let g_in = gibbs_state(ctx, Side::Input)?;
    let g_out = gibbs_state(ctx, Side::Output)?;
    let rep = ctx.representation()?;

    let mut b = SdpBuilder::new();
    let j = b.block(d);
    let c = ComplexMatrix::from_fn(d, d, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    b.objective(j, c.hermitian_part());
    let tp = move |m: &ComplexMatrix| trace_second(m, di, dout);
    b.equality(di, &[(j, &tp)], &ComplexMatrix::identity(di));
    let gi = g_in.clone();
    let gp = move |m: &ComplexMatrix| apply_choi(m, di, dout, &gi);
    b.equality(dout, &[(j, &gp)], &g_out);
    for map in covariance_maps(&rep) {
        b.equality(d, &[(j, map.as_ref())], &ComplexMatrix::zeros(d, d));
    }
    let sol = solve(&b.build(Sense::Maximize), settings)?.require_optimal("random Gibbs-preserving channel")?;
    let lambda = rng.random_range(0.05..0.5);
    let replace = kron(&ComplexMatrix::identity(di), &g_out);
    let mixed = &sol.primal[j.0].scale(1.0 - lambda) + &replace.scale(lambda);
    let ch = QuantumChannel::normalized_from(di, dout, &mixed)?;

    let cov = check_covariance(&ch, &rep)?;
    let gibbs = trace_norm(&(&ch.apply(&g_in) - &g_out))?;
    if cov > 1e-7 || gibbs > 1e-7 {
        return Err(Error::NonConvergence(format!("random channel residuals: covariance {cov:.3e}, Gibbs {gibbs:.3e}")));
    }
    Ok(ch)
}

/// Z_N time discretization `t = n epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct ClockConfig {
    pub n: usize,
    pub epsilon: f64,
}

impl ClockConfig {
    pub fn new(n: usize, epsilon: f64) -> Result<Self> {
        if n == 0 || !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Validation(format!("clock needs N >= 1 and epsilon > 0, got N = {n}, epsilon = {epsilon}")));
        }
        Ok(Self { n, epsilon })
    }

    /// Checks `exp(-i N epsilon H) = phase * I`.
    pub fn check_periodic(&self, h: &ComplexMatrix) -> Result<C64> {
        let u = unitary_evolution(h, self.n as f64 * self.epsilon)?;
        let phase = u[(0, 0)];
        let defect = (&u - &ComplexMatrix::identity(u.rows()).scale_c(phase)).max_abs();
        if defect > PERIODICITY_TOL {
            return Err(Error::Validation(format!(
                "exp(-i N epsilon H) is not proportional to the identity (defect {defect:.3e}, N = {}, epsilon = {})",
                self.n, self.epsilon
            )));
        }
        Ok(phase)
    }

    /// `exp(-i epsilon H)` rephased so that its N-th power is exactly the identity.
    pub fn generator(&self, h: &ComplexMatrix) -> Result<ComplexMatrix> {
        let phase = self.check_periodic(h)?;
        let fix = C64::from_polar(1.0, -phase.arg() / self.n as f64);
        Ok(unitary_evolution(h, self.epsilon)?.scale_c(fix))
    }
}

#[derive(Debug, Clone)]
pub struct ClockStates {
    /// Reference Hamiltonian, diagonal in the energy basis.
    pub h_r: ComplexMatrix,
    /// `|n> = N^{-1/2} sum_k omega^{nk} |E_k>` in the energy basis.
    pub states: Vec<Vec<C64>>,
}

/// Clock states with `exp(-i n epsilon H_R)|0> = |n>`.
pub fn clock_states(cfg: &ClockConfig) -> ClockStates {
    let n = cfg.n;
    let energies: Vec<f64> = (0..n).map(|k| -2.0 * std::f64::consts::PI * k as f64 / (n as f64 * cfg.epsilon)).collect();
    let amp = 1.0 / (n as f64).sqrt();
    let states = (0..n)
        .map(|m| (0..n).map(|k| C64::from_polar(amp, 2.0 * std::f64::consts::PI * ((m * k) % n) as f64 / n as f64)).collect())
        .collect();
    ClockStates { h_r: ComplexMatrix::diag_real(&energies), states }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClockGuess {
    pub p_guess: f64,
    /// `H_min(R|A)` of the clock cq state.
    pub h_min: f64,
}

/// Optimal probability of guessing the clock time `n` from `U(n epsilon) rho U^dagger`,
/// checked against the min-entropy of the clock-register cq state.
pub fn clock_guess(rho: &ComplexMatrix, h: &ComplexMatrix, cfg: &ClockConfig, settings: &SdpSettings) -> Result<ClockGuess> {
    validate_state(rho)?;
    if h.rows() != rho.rows() {
        return Err(Error::Dimension("clock: state and Hamiltonian differ in dimension".into()));
    }
    cfg.check_periodic(h)?;
    let n = cfg.n;
    let orbit: Vec<ComplexMatrix> =
        (0..n).map(|k| unitary_evolution(h, k as f64 * cfg.epsilon).map(|u| rho.conjugate_by(&u).hermitian_part())).collect::<Result<_>>()?;
    let p_guess = guessing_probability(&Ensemble::uniform(orbit.clone())?, settings)?.probability;

    let clock = clock_states(cfg);
    let d = rho.rows();
    let mut omega = ComplexMatrix::zeros(n * d, n * d);
    for (ket, state) in clock.states.iter().zip(&orbit) {
        omega += &kron(&ComplexMatrix::outer(ket), state).scale(1.0 / n as f64);
    }
    let h_min = min_entropy(&omega.hermitian_part(), n, d, settings)?.value;
    if (h_min + p_guess.log2()).abs() > CLOCK_IDENTITY_TOL {
        return Err(Error::RouteDisagreement(format!("clock: H_min = {h_min:.10} but -log2 p_guess = {:.10}", -p_guess.log2())));
    }
    Ok(ClockGuess { p_guess, h_min })
}

/// Continued-fraction approximation with the smallest denominator within `tol`.
fn rationalize(x: f64, tol: f64, max_den: u64) -> Option<(u64, u64)> {
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = a as u64;
        let (h2, k2) = (ai.checked_mul(h1)?.checked_add(h0)?, ai.checked_mul(k1)?.checked_add(k0)?);
        if k2 > max_den {
            return None;
        }
        if (x - h2 as f64 / k2 as f64).abs() <= tol {
            return Some((h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a;
        if frac.abs() < 1e-300 {
            return Some((h2, k2));
        }
        r = 1.0 / frac;
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone)]
pub struct ZnFit {
    pub config: ClockConfig,
    /// Hamiltonian with rationalized spectrum, exactly periodic under the clock.
    pub hamiltonian: ComplexMatrix,
}

/// Smallest N such that `exp(-i N epsilon H')` is a phase, for `H'` obtained by
/// rationalizing `epsilon (E_k - E_0) / 2 pi` within `tolerance`.
pub fn zn_from_hamiltonian(h: &ComplexMatrix, epsilon: f64, tolerance: f64) -> Result<ZnFit> {
    check_hamiltonian(h, "H")?;
    if !(epsilon > 0.0) || !(tolerance > 0.0) {
        return Err(Error::Validation("epsilon and tolerance must be positive".into()));
    }
    let e = eig_hermitian(h)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let lo = e.values[0];
    let mut n: u64 = 1;
    let mut fracs = Vec::with_capacity(e.values.len());
    for v in &e.values {
        let r = epsilon * (v - lo) / two_pi;
        let (p, q) = rationalize(r, tolerance, ZN_MAX_ORDER as u64).ok_or_else(|| {
            Error::Validation(format!("spectrum needs a period above {ZN_MAX_ORDER}; use a coarser tolerance than {tolerance:e}"))
        })?;
        n = n / gcd(n, q) * q;
        if n > ZN_MAX_ORDER as u64 {
            return Err(Error::Validation(format!("period exceeds {ZN_MAX_ORDER}; use a coarser tolerance than {tolerance:e}")));
        }
        fracs.push(p as f64 / q as f64);
    }
    let rational: Vec<f64> = fracs.iter().map(|f| lo + two_pi * f / epsilon).collect();
    let d = ComplexMatrix::diag_real(&rational);
    let hamiltonian = e.vectors.matmul(&d).matmul(&e.vectors.adjoint()).hermitian_part();
    Ok(ZnFit { config: ClockConfig::new(n as usize, epsilon)?, hamiltonian })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use crate::quantum::pure_state;

    fn qubit(beta: f64) -> ThermoContext {
        ThermoContext::same(ComplexMatrix::diag_real(&[0.0, 1.0]), beta).unwrap()
    }

    #[test]
    fn gibbs_qubit_at_ln2() {
        let g = gibbs_state(&qubit(2f64.ln()), Side::Input).unwrap();
        assert!((g[(0, 0)].re - 2.0 / 3.0).abs() < 1e-12);
        assert!((g[(1, 1)].re - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gibbs_low_temperature_and_zero_hamiltonian() {
        let g = gibbs_state(&qubit(40.0), Side::Input).unwrap();
        assert!(g[(0, 0)].re >= 1.0 - 1e-6);
        let flat = ThermoContext::same(ComplexMatrix::zeros(3, 3), 1.0).unwrap();
        let g = gibbs_state(&flat, Side::Input).unwrap();
        assert!((&g - &ComplexMatrix::identity(3).scale(1.0 / 3.0)).max_abs() < 1e-12);
    }

    #[test]
    fn time_average_dephases() {
        let plus = pure_state(&[ONE, ONE]);
        let avg = time_average(&plus, &ComplexMatrix::diag_real(&[0.0, 1.0])).unwrap();
        assert!((&avg - &ComplexMatrix::identity(2).scale(0.5)).max_abs() < 1e-12);
        let same = time_average(&plus, &ComplexMatrix::identity(2)).unwrap();
        assert!((&same - &plus).max_abs() < 1e-12);
    }

    #[test]
    fn reference_generator_annihilates_phi_plus() {
        let h = ComplexMatrix::diag_real(&[0.0, 0.3, 1.1]);
        let ctx = ThermoContext::same(h.clone(), 1.0).unwrap();
        let (h_r, _) = build_reference(&ctx);
        let total = &kron(&h_r, &ComplexMatrix::identity(3)) + &kron(&ComplexMatrix::identity(3), &h);
        let phi = crate::quantum::max_entangled(3);
        assert!(total.matmul(&phi).max_abs() < 1e-12);
    }

    #[test]
    fn gibbs_fixed_point_and_replacement_are_feasible() {
        let ctx = qubit(1.0);
        let g = gibbs_state(&ctx, Side::Input).unwrap();
        assert!(decide_thermal_conversion(&g, &g, &ctx, None, &SdpSettings::default()).unwrap().conversion.feasible);
        let plus = pure_state(&[ONE, ONE]);
        assert!(decide_thermal_conversion(&plus, &g, &ctx, None, &SdpSettings::default()).unwrap().conversion.feasible);
    }

    #[test]
    fn coherence_cannot_be_created() {
        let ctx = qubit(1.0);
        let rho = ComplexMatrix::diag_real(&[0.0, 1.0]);
        let plus = pure_state(&[ONE, ONE]);
        let r = decide_thermal_conversion(&rho, &plus, &ctx, None, &SdpSettings::default()).unwrap();
        assert!(!r.conversion.feasible);
        assert_eq!(r.incoherent_verdict, Some(false));
        assert!(r.monotone_violation.unwrap() > 1e-6);
    }

    #[test]
    fn incoherent_examples() {
        let ctx = qubit(1.0);
        let g = gibbs_state(&ctx, Side::Input).unwrap();
        let excited = ComplexMatrix::diag_real(&[0.0, 1.0]);
        assert!(decide_thermal_incoherent(&excited, &g, &ctx).unwrap());
        assert!(!decide_thermal_incoherent(&g, &excited, &ctx).unwrap());
    }

    #[test]
    fn clock_states_shift() {
        let cfg = ClockConfig::new(4, 0.7).unwrap();
        let c = clock_states(&cfg);
        for n in 0..4 {
            let u = unitary_evolution(&c.h_r, n as f64 * cfg.epsilon).unwrap();
            let shifted = u.mul_vec(&c.states[0]);
            let diff: f64 = shifted.iter().zip(&c.states[n]).map(|(a, b)| (a - b).norm()).sum();
            assert!(diff < 1e-10);
            for m in 0..4 {
                let ip: C64 = c.states[n].iter().zip(&c.states[m]).map(|(a, b)| a.conj() * b).sum();
                assert!((ip.norm() - if n == m { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn clock_guess_orthogonal_orbit_and_invariant_state() {
        let s = SdpSettings::default();
        let h = ComplexMatrix::diag_real(&[0.0, 1.0]);
        let cfg = ClockConfig::new(2, std::f64::consts::PI).unwrap();
        let g = clock_guess(&pure_state(&[ONE, ONE]), &h, &cfg, &s).unwrap();
        assert!((g.p_guess - 1.0).abs() < 1e-9, "{}", g.p_guess);
        let g = clock_guess(&ComplexMatrix::diag_real(&[1.0, 0.0]), &h, &cfg, &s).unwrap();
        assert!((g.p_guess - 0.5).abs() < 1e-8);
    }

    #[test]
    fn zn_periods() {
        let pi = std::f64::consts::PI;
        assert_eq!(zn_from_hamiltonian(&ComplexMatrix::diag_real(&[0.0, 1.0]), pi, 1e-9).unwrap().config.n, 2);
        assert_eq!(zn_from_hamiltonian(&ComplexMatrix::diag_real(&[0.0, 1.0, 2.0]), 2.0 * pi / 3.0, 1e-9).unwrap().config.n, 3);
        assert_eq!(zn_from_hamiltonian(&ComplexMatrix::zeros(2, 2), 1.0, 1e-9).unwrap().config.n, 1);
        assert!(zn_from_hamiltonian(&ComplexMatrix::diag_real(&[0.0, 2f64.sqrt()]), 1.0, 1e-12).is_err());
    }

    #[test]
    fn random_gpc_channel_preserves_gibbs() {
        let ctx = ThermoContext::same(ComplexMatrix::diag_real(&[0.0, 0.5, 1.5]), 0.8).unwrap();
        let ch = random_gpc_channel(&ctx, 7, &SdpSettings::default()).unwrap();
        let g = gibbs_state(&ctx, Side::Input).unwrap();
        assert!(trace_norm(&(&ch.apply(&g) - &g)).unwrap() < 1e-7);
    }
}
