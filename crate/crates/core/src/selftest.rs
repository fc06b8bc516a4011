//! Randomized invariant suites shared by the `selftest` command and the acceptance gate.
//!
//! Suites 1-13 check the quantitative acceptance properties; the remaining suites
//! cover further invariants (group monotonicity, the Z_N/U(1) equivalence, transitivity,
//! clock monotonicity, the qubit coherence sweep and bipartite witnesses). Instances are
//! generated from per-instance seeds and evaluated in parallel.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::covariant::{check_covariance, clock_unitary, decide_covariant_conversion, project_choi_covariant, Representation};
use crate::error::{Error, Result};
use crate::linalg::{kron, trace_second, ComplexMatrix, ONE};
use crate::majorization::{
    compute_alpha, compute_beta, decide_bipartite_qmaj, decide_ensemble_conversion, matrix_majorization,
    thermo_majorization_check, verify_monotone_necessity, ConversionProblem, ConversionReport, MARGINAL_BAND,
};
use crate::minentropy::{guessing_probability, helstrom_pair, min_entropy};
use crate::quantum::{
    max_entangled, maximally_mixed, pure_state, random_channel_rng, random_distribution_rng, random_pure_state_rng,
    random_state_rng, Ensemble, QuantumChannel,
};
use crate::sdp::{SdpSettings, EPS_FEAS};
use crate::thermo::{
    clock_guess, decide_thermal_conversion, decide_thermal_incoherent, gibbs_state, random_gpc_channel,
    thermal_monotone_search, ClockConfig, ThermoContext,
};
use crate::covariant::Side;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
    /// Instances reported as marginal (near the feasibility threshold).
    pub flagged: usize,
    pub ok: bool,
    pub detail: String,
    pub seconds: f64,
}

pub const SUITES: &[(u32, &str)] = &[
    (1, "strong duality |alpha - beta| <= 1e-5"),
    (2, "alpha <= 1 + 1e-6"),
    (3, "alpha threshold agrees with direct search"),
    (4, "measure-and-prepare necessity"),
    (5, "witness soundness"),
    (6, "classical dichotomies vs thermo-majorization"),
    (7, "min-entropy anchors"),
    (8, "cq identity and Helstrom"),
    (9, "data processing"),
    (10, "incoherent thermal equivalence"),
    (11, "coherence no-go and Gibbs fixed point"),
    (12, "clock identity"),
    (13, "thermal monotone necessity"),
    (15, "covariant feasibility monotone in the group"),
    (16, "Z_N and U(1) covariance equivalence"),
    (17, "transitivity"),
    (18, "clock monotonicity under thermal channels"),
    (19, "qubit coherence sweep: SDP vs closed form and monotones"),
    (20, "bipartite witnesses"),
];

/// Solver tolerance for guessing probabilities compared against the closed form at 1e-9.
pub const HELSTROM_TOLERANCE: f64 = 1e-11;

/// Number of random instances per suite.
pub const POOL_SIZE: usize = 200;

struct Tally {
    passed: usize,
    total: usize,
    flagged: usize,
    first_failure: Option<String>,
    extra: String,
}

impl Tally {
    fn new() -> Self {
        Self { passed: 0, total: 0, flagged: 0, first_failure: None, extra: String::new() }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.total += 1;
        if ok {
            self.passed += 1;
        } else if self.first_failure.is_none() {
            self.first_failure = Some(what());
        }
    }

    fn error(&mut self, e: &Error, idx: usize) {
        self.record(false, || format!("instance {idx}: {e}"));
    }

    fn finish(self, id: u32, start: Instant) -> SuiteResult {
        let name = SUITES.iter().find(|s| s.0 == id).map_or("", |s| s.1);
        let mut detail = self.extra;
        if let Some(f) = self.first_failure {
            if !detail.is_empty() {
                detail.push_str("; ");
            }
            detail.push_str(&f);
        }
        SuiteResult {
            id,
            name,
            passed: self.passed,
            total: self.total,
            flagged: self.flagged,
            ok: self.passed == self.total && self.total > 0,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

fn rng_for(seed: u64, suite: u32, idx: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ ((suite as u64) << 40) ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn par_map<T: Send>(n: usize, seed: u64, suite: u32, f: impl Fn(&mut ChaCha8Rng, usize) -> Result<T> + Sync) -> Vec<Result<T>> {
    (0..n).into_par_iter().map(|i| f(&mut rng_for(seed, suite, i), i)).collect()
}

/// Random ensemble conversion problem from one of four families: channel images,
/// unrelated targets, depolarized targets and perturbed channel images.
pub fn random_conversion_problem(rng: &mut impl Rng, family: usize) -> Result<ConversionProblem> {
    let db = rng.random_range(2..=3);
    let dc = rng.random_range(2..=3);
    let n = rng.random_range(2..=4);
    let inputs: Vec<ComplexMatrix> = (0..n).map(|_| random_state_rng(db, rng)).collect();
    let ch = random_channel_rng(db, dc, rng);
    let targets = match family % 4 {
        0 => inputs.iter().map(|r| ch.apply(r)).collect(),
        1 => (0..n).map(|_| random_state_rng(dc, rng)).collect(),
        2 => {
            let t: f64 = rng.random_range(0.0..1.0);
            (0..n).map(|_| &random_state_rng(dc, rng).scale(1.0 - t) + &maximally_mixed(dc).scale(t)).collect()
        }
        _ => {
            let t: f64 = rng.random_range(0.0..0.2);
            inputs.iter().map(|r| &ch.apply(r).scale(1.0 - t) + &random_state_rng(dc, rng).scale(t)).collect()
        }
    };
    ConversionProblem::new(inputs, targets, None)
}

struct PoolRecord {
    problem: ConversionProblem,
    alpha: f64,
    beta: f64,
    report: Option<ConversionReport>,
    error: Option<Error>,
}

fn ensemble_pool(seed: u64, settings: &SdpSettings) -> Vec<Result<PoolRecord>> {
    par_map(POOL_SIZE, seed, 1, |rng, i| {
        let problem = random_conversion_problem(rng, i)?;
        let alpha = compute_alpha(&problem, None, settings)?.value;
        let beta = compute_beta(&problem, None, settings)?;
        let (report, error) = match decide_ensemble_conversion(&problem, settings) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e)),
        };
        Ok(PoolRecord { problem, alpha, beta, report, error })
    })
}

fn suite_duality(pool: &[Result<PoolRecord>], start: Instant) -> SuiteResult {
    let mut t = Tally::new();
    let mut worst = 0.0f64;
    for (i, r) in pool.iter().enumerate() {
        match r {
            Ok(r) => {
                worst = worst.max((r.alpha - r.beta).abs());
                t.record((r.alpha - r.beta).abs() <= 1e-5, || format!("instance {i}: alpha {} beta {}", r.alpha, r.beta));
            }
            Err(e) => t.error(e, i),
        }
    }
    t.extra = format!("max |alpha - beta| = {worst:.2e}");
    t.finish(1, start)
}

fn suite_alpha_bound(pool: &[Result<PoolRecord>], start: Instant) -> SuiteResult {
    let mut t = Tally::new();
    let mut worst = f64::NEG_INFINITY;
    for (i, r) in pool.iter().enumerate() {
        match r {
            Ok(r) => {
                let a = r.alpha.max(r.report.as_ref().map_or(r.alpha, |rep| rep.alpha));
                worst = worst.max(a);
                t.record(a <= 1.0 + 1e-6, || format!("instance {i}: alpha {a}"));
            }
            Err(e) => t.error(e, i),
        }
    }
    t.extra = format!("max alpha = {worst:.9}");
    t.finish(2, start)
}

fn suite_agreement(pool: &[Result<PoolRecord>], start: Instant) -> SuiteResult {
    let mut t = Tally::new();
    let (mut feasible, mut infeasible) = (0, 0);
    for (i, r) in pool.iter().enumerate() {
        let r = match r {
            Ok(r) => r,
            Err(e) => {
                t.error(e, i);
                continue;
            }
        };
        match (&r.report, &r.error) {
            (Some(rep), _) => {
                if rep.marginal {
                    t.flagged += 1;
                }
                let clear = (rep.alpha - 1.0).abs() > MARGINAL_BAND;
                let alpha_verdict = rep.alpha >= 1.0 - EPS_FEAS;
                let direct_verdict = rep.margins.slack <= EPS_FEAS;
                if rep.feasible {
                    feasible += 1;
                } else {
                    infeasible += 1;
                }
                // Near-threshold instances only need to be flagged.
                let ok = if clear { alpha_verdict == direct_verdict && !rep.marginal } else { alpha_verdict == direct_verdict || rep.marginal };
                t.record(ok, || format!("instance {i}: alpha {} slack {:.3e}", rep.alpha, rep.margins.slack));
            }
            (None, Some(e)) => t.error(e, i),
            _ => unreachable!(),
        }
    }
    t.extra = format!("{feasible} feasible, {infeasible} infeasible");
    t.finish(3, start)
}

fn suite_witness(pool: &[Result<PoolRecord>], settings: &SdpSettings, start: Instant) -> SuiteResult {
    let checks: Vec<Option<Result<(f64, usize)>>> = pool
        .par_iter()
        .map(|r| {
            let r = match r {
                Ok(r) => r,
                Err(e) => return Some(Err(Error::NonConvergence(e.to_string()))),
            };
            let rep = match (&r.report, &r.error) {
                (Some(rep), _) => rep,
                (None, Some(e)) => return Some(Err(Error::NonConvergence(e.to_string()))),
                _ => unreachable!(),
            };
            if rep.feasible || 1.0 - rep.alpha <= MARGINAL_BAND {
                return None;
            }
            Some((|| {
                let w = rep.witness.as_ref().ok_or_else(|| Error::Validation("infeasible instance without witness".into()))?;
                let dc = r.problem.d_out();
                let mut ob = ComplexMatrix::zeros(dc * r.problem.d_in(), dc * r.problem.d_in());
                let mut oc = ComplexMatrix::zeros(dc * dc, dc * dc);
                for ((&k, wk), s) in w.members.iter().zip(&w.weights).zip(&w.states) {
                    ob += &kron(s, &r.problem.inputs[k]).scale(*wk);
                    oc += &kron(s, &r.problem.targets[k]).scale(*wk);
                }
                let hb = min_entropy(&ob, dc, r.problem.d_in(), settings)?.value;
                let hc = min_entropy(&oc, dc, dc, settings)?.value;
                Ok((hb - hc, w.members.len()))
            })())
        })
        .collect();
    let mut t = Tally::new();
    let mut smallest = f64::INFINITY;
    for (i, c) in checks.into_iter().enumerate() {
        match c {
            None => {}
            Some(Ok((v, _))) => {
                smallest = smallest.min(v);
                t.record(v >= 1e-6, || format!("instance {i}: violation {v:.3e}"));
            }
            Some(Err(e)) => t.error(&e, i),
        }
    }
    t.extra = format!("smallest violation = {smallest:.3e}");
    t.finish(5, start)
}

fn suite_necessity(seed: u64, settings: &SdpSettings) -> SuiteResult {
    let start = Instant::now();
    let results = par_map(20, seed, 4, |rng, _| {
        let (da, db, dc) = (2, rng.random_range(2..=3), rng.random_range(2..=3));
        let rho = random_state_rng(da * db, rng);
        let sigma = random_channel_rng(db, dc, rng).apply_second(&rho, da);
        let rep = decide_bipartite_qmaj(&rho, &sigma, da, db, dc, settings)?;
        if !rep.feasible {
            return Err(Error::Validation(format!("channel image reported infeasible (slack {:?})", rep.direct_slack)));
        }
        verify_monotone_necessity(&rho, &sigma, da, db, dc, 200, rng.random(), settings)
    });
    let mut t = Tally::new();
    let mut worst = f64::NEG_INFINITY;
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(v) => {
                worst = worst.max(*v);
                t.record(*v <= 1e-6, || format!("instance {i}: violation {v:.3e}"));
            }
            Err(e) => t.error(e, i),
        }
    }
    t.extra = format!("200 channels per instance, max violation = {worst:.2e}");
    t.finish(4, start)
}

fn suite_classical(seed: u64, settings: &SdpSettings) -> SuiteResult {
    let start = Instant::now();
    let results = par_map(100, seed, 6, |rng, _| {
        let n = rng.random_range(2..=4);
        let g = random_distribution_rng(n, rng);
        let p = random_distribution_rng(n, rng);
        // Mixing q toward g balances feasible and infeasible cases.
        let t: f64 = rng.random_range(0.0..1.0);
        let q: Vec<f64> = random_distribution_rng(n, rng).iter().zip(&g).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        let curve = thermo_majorization_check(&p, &q, &g)?;
        let problem = ConversionProblem::new(
            vec![ComplexMatrix::diag_real(&p), ComplexMatrix::diag_real(&g)],
            vec![ComplexMatrix::diag_real(&q), ComplexMatrix::diag_real(&g)],
            None,
        )?;
        let sdp = decide_ensemble_conversion(&problem, settings)?;
        let lp = matrix_majorization(&[p.clone(), g.clone()], &[q.clone(), g.clone()], settings)?;
        Ok((curve, sdp.feasible, sdp.marginal, lp.holds))
    });
    let mut t = Tally::new();
    let mut feasible = 0;
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok((curve, sdp, marginal, lp)) => {
                feasible += *curve as usize;
                if *marginal {
                    t.flagged += 1;
                }
                t.record((curve == sdp || *marginal) && curve == lp, || format!("instance {i}: curve {curve}, SDP {sdp}, LP {lp}"));
            }
            Err(e) => t.error(e, i),
        }
    }
    t.extra = format!("{feasible} thermo-majorizing pairs");
    t.finish(6, start)
}

fn suite_anchors(seed: u64, settings: &SdpSettings) -> SuiteResult {
    let start = Instant::now();
    let mut rng = rng_for(seed, 7, 0);
    let mut t = Tally::new();
    for d in 2..=4 {
        match min_entropy(&max_entangled(d), d, d, settings) {
            Ok(r) => {
                let want = -(d as f64).log2();
                t.record((r.value - want).abs() <= 1e-7, || format!("phi+ d={d}: {} vs {want}", r.value));
            }
            Err(e) => t.error(&e, d),
        }
        let sigma = random_state_rng(rng.random_range(2..=3), &mut rng);
        let omega = kron(&maximally_mixed(d), &sigma);
        match min_entropy(&omega, d, sigma.rows(), settings) {
            Ok(r) => {
                let want = (d as f64).log2();
                t.record((r.value - want).abs() <= 1e-7, || format!("I/d x sigma d={d}: {} vs {want}", r.value));
            }
            Err(e) => t.error(&e, d),
        }
    }
    t.finish(7, start)
}

fn suite_cq(seed: u64, settings: &SdpSettings) -> SuiteResult {
    let start = Instant::now();
    let tight = settings.with_tolerance(settings.tolerance.min(HELSTROM_TOLERANCE));
    let results = par_map(100, seed, 8, |rng, i| {
        let n = if i % 2 == 0 { 2 } else { rng.random_range(2..=5) };
        let d = rng.random_range(2..=4);
        let states: Vec<_> = (0..n).map(|_| if rng.random_bool(0.3) { random_pure_state_rng(d, rng) } else { random_state_rng(d, rng) }).collect();
        let ens = Ensemble::new(random_distribution_rng(n, rng), states)?;
        let p = guessing_probability(&ens, &tight)?.probability;
        let h = min_entropy(&ens.cq_state(), n, d, settings)?.value;
        let identity = (h + p.log2()).abs();
        let helstrom = if n == 2 {
            let closed = helstrom_pair(ens.weights(), &[1.0, 0.0], &[0.0, 1.0], ens.states())?;
            Some((p - closed).abs())
        } else {
            None
        };
        Ok((identity, helstrom))
    });
    let mut t = Tally::new();
    let (mut worst_id, mut worst_h) = (0.0f64, 0.0f64);
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok((id, h)) => {
                worst_id = worst_id.max(*id);
                t.record(*id <= 1e-7, || format!("instance {i}: |H + log p| = {id:.3e}"));
                if let Some(h) = h {
                    worst_h = worst_h.max(*h);
                    t.record(*h <= 1e-9, || format!("instance {i}: Helstrom gap {h:.3e}"));
                }
            }
            Err(e) => t.error(e, i),
        }
    }
    t.extra = format!("max identity gap {worst_id:.2e}, max Helstrom gap {worst_h:.2e}");
    t.finish(8, start)
}

fn suite_data_processing(seed: u64, settings: &SdpSettings) -> SuiteResult {
    let start = Instant::now();
    let results = par_map(500, seed, 9, |rng, _| {
        let (da, db, dc) = (rng.random_range(2..=3), rng.random_range(2..=3), rng.random_range(2..=3));
        let omega = if rng.random_bool(0.3) { random_pure_state_rng(da * db, rng) } else { random_state_rng(da * db, rng) };
        let out = random_channel_rng(db, dc, rng).apply_second(&omega, da);
        Ok(min_entropy(&omega, da, db, settings)?.value - min_entropy(&out, da, dc, settings)?.value)
    });
    let mut t = Tally::new();
    let mut worst = f64::NEG_INFINITY;
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(v) => {
                worst = worst.max(*v);
                t.record(*v <= 1e-6, || format!("instance {i}: H(A|B) - H(A|C) = {v:.3e}"));
            }
            Err(e) => t.error(e, i),
        }
    }
    t.extra = format!("max H(A|B) - H(A|C) = {worst:.2e}");
    t.finish(9, start)
}

fn random_energies(rng: &mut impl Rng, d: usize, allow_degenerate: bool) -> Vec<f64> {
    let mut e: Vec<f64> = (0..d).map(|k| if k == 0 { 0.0 } else { rng.random_range(0.2..2.0) }).collect();
    if allow_degenerate && d == 3 && rng.random_bool(0.25) {
        e[2] = e[1];
    }
    e.sort_by(|a, b| a.total_cmp(b));
    e
}

fn suite_incoherent(seed: u64, settings: &SdpSettings) -> SuiteResult {
    let start = Instant::now();
    let results = par_map(100, seed, 10, |rng, i| {
        let d = if i % 2 == 0 { 2 } else { 3 };
        let beta = [0.1, 1.0, 5.0][i % 3];
        let ctx = ThermoContext::same(ComplexMatrix::diag_real(&random_energies(rng, d, true)), beta)?;
        let g = gibbs_state(&ctx, Side::Input)?;
        let rho = ComplexMatrix::diag_real(&random_distribution_rng(d, rng));
        let t: f64 = rng.random_range(0.0..1.0);
        let sigma = &ComplexMatrix::diag_real(&random_distribution_rng(d, rng)).scale(1.0 - t) + &g.scale(t);
        let sdp = decide_thermal_conversion(&rho, &sigma, &ctx, None, settings)?;
        let inc = decide_thermal_incoherent(&rho, &sigma, &ctx)?;
        Ok((sdp.conversion.feasible, sdp.conversion.marginal, inc))
    });
    let mut t = Tally::new();
    let mut feasible = 0;
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok((sdp, marginal, inc)) => {
                feasible += *inc as usize;
                if *marginal {
                    t.flagged += 1;
                }
                t.record(sdp == inc, || format!("instance {i}: SDP {sdp}, thermo-majorization {inc}"));
            }
            Err(e) => t.error(e, i),
        }
    }
    t.extra = format!("{feasible} feasible");
    t.finish(10, start)
}

fn suite_nogo(seed: u64, settings: &SdpSettings) -> SuiteResult {
    let start = Instant::now();
    let results = par_map(60, seed, 11, |rng, i| {
        let d = rng.random_range(2..=3);
        let beta = rng.random_range(0.1..5.0);
        let mut ctx = ThermoContext::same(ComplexMatrix::diag_real(&random_energies(rng, d, false)), beta)?;
        match i % 3 {
            0 => {
                let rho = ComplexMatrix::diag_real(&random_distribution_rng(d, rng));
                let sigma = random_state_rng(d, rng);
                Ok(!decide_thermal_conversion(&rho, &sigma, &ctx, None, settings)?.conversion.feasible)
            }
            1 => {
                let g = gibbs_state(&ctx, Side::Input)?;
                Ok(decide_thermal_conversion(&g, &g, &ctx, None, settings)?.conversion.feasible)
            }
            _ => {
                // Two-level charge on a degenerate four-level system.
                let e = rng.random_range(0.3..1.5);
                ctx = ThermoContext::same(ComplexMatrix::diag_real(&[0.0, e, e, 2.0 * e]), beta)?
                    .with_charge(ComplexMatrix::diag_real(&[0.0, 1.0, 0.0, 1.0]), ComplexMatrix::diag_real(&[0.0, 1.0, 0.0, 1.0]), rng.random_range(-1.0..1.0))?;
                let g = gibbs_state(&ctx, Side::Input)?;
                Ok(decide_thermal_conversion(&g, &g, &ctx, None, settings)?.conversion.feasible)
            }
        }
    });
    let mut t = Tally::new();
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(ok) => t.record(*ok, || format!("instance {i} misclassified")),
            Err(e) => t.error(e, i),
        }
    }
    t.finish(11, start)
}

fn suite_clock(seed: u64, settings: &SdpSettings) -> SuiteResult {
    let start = Instant::now();
    let results = par_map(150, seed, 12, |rng, i| {
        let n = 2 + i % 3;
        let d = rng.random_range(2..=3);
        let h = ComplexMatrix::diag_real(&(0..d).map(|k| k as f64).collect::<Vec<_>>());
        let cfg = ClockConfig::new(n, 2.0 * std::f64::consts::PI / n as f64)?;
        let rho = if rng.random_bool(0.3) { random_pure_state_rng(d, rng) } else { random_state_rng(d, rng) };
        let g = clock_guess(&rho, &h, &cfg, settings)?;
        Ok((g.h_min + g.p_guess.log2()).abs())
    });
    let mut t = Tally::new();
    let mut worst = 0.0f64;
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(v) => {
                worst = worst.max(*v);
                t.record(*v <= 1e-7, || format!("instance {i}: gap {v:.3e}"));
            }
            Err(e) => t.error(e, i),
        }
    }
    let plus = pure_state(&[ONE, ONE]);
    let cfg = ClockConfig { n: 2, epsilon: std::f64::consts::PI };
    match clock_guess(&plus, &ComplexMatrix::diag_real(&[0.0, 1.0]), &cfg, settings) {
        Ok(g) => t.record((g.p_guess - 1.0).abs() <= 1e-9, || format!("orthogonal orbit p_guess = {}", g.p_guess)),
        Err(e) => t.error(&e, usize::MAX),
    }
    t.extra = format!("max |H + log p| = {worst:.2e}");
    t.finish(12, start)
}

fn suite_thermal_necessity(seed: u64, settings: &SdpSettings) -> SuiteResult {
    let start = Instant::now();
    let results = par_map(12, seed, 13, |rng, _| {
        let d = rng.random_range(2..=3);
        let ctx = ThermoContext::same(ComplexMatrix::diag_real(&random_energies(rng, d, true)), rng.random_range(0.1..3.0))?;
        let rho = random_state_rng(d, rng);
        let sigma = random_gpc_channel(&ctx, rng.random(), settings)?.apply(&rho);
        if !decide_thermal_conversion(&rho, &sigma, &ctx, None, settings)?.conversion.feasible {
            return Err(Error::Validation("image of a thermal channel reported infeasible".into()));
        }
        thermal_monotone_search(&rho, &sigma, &ctx, 100, rng.random(), settings)
    });
    let mut t = Tally::new();
    let mut worst = f64::NEG_INFINITY;
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(v) => {
                worst = worst.max(*v);
                t.record(*v <= 1e-6, || format!("instance {i}: violation {v:.3e}"));
            }
            Err(e) => t.error(e, i),
        }
    }
    t.extra = format!("100 reference pairs per instance, max violation = {worst:.2e}");
    t.finish(13, start)
}

fn suite_group_monotone(seed: u64, settings: &SdpSettings) -> SuiteResult {
    let start = Instant::now();
    let results = par_map(20, seed, 15, |rng, _| {
        let u = clock_unitary(4, &[0, 1, 3]);
        let z4 = Representation::cyclic(4, u.clone(), u.clone())?;
        let u2 = u.matmul(&u);
        let z2 = Representation::cyclic(2, u2.clone(), u2)?;
        let ch = crate::covariant::random_covariant_channel_rng(3, 3, &z2, rng)?;
        let inputs: Vec<_> = (0..2).map(|_| random_state_rng(3, rng)).collect();
        let targets = inputs.iter().map(|r| ch.apply(r)).collect();
        let p = ConversionProblem::new(inputs, targets, None)?;
        let f4 = decide_covariant_conversion(&p, &z4, settings)?;
        let f2 = decide_covariant_conversion(&p, &z2, settings)?;
        let f1 = decide_ensemble_conversion(&p, settings)?;
        Ok((f4.feasible, f2.feasible, f1.feasible, f4.marginal || f2.marginal))
    });
    let mut t = Tally::new();
    let mut strict = 0;
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok((f4, f2, f1, marginal)) => {
                strict += (!f4 && *f2) as usize;
                t.record((!f4 || *f2) && (!f2 || *f1) && *f2 || *marginal, || format!("instance {i}: Z4 {f4}, Z2 {f2}, trivial {f1}"));
            }
            Err(e) => t.error(e, i),
        }
    }
    t.extra = format!("{strict} instances feasible under Z2 only");
    t.finish(15, start)
}

fn suite_zn_equivalence(seed: u64, settings: &SdpSettings) -> SuiteResult {
    let start = Instant::now();
    let _ = settings;
    let two_pi = 2.0 * std::f64::consts::PI;
    let results = par_map(20, seed, 16, |rng, i| {
        // N = 3 exceeds twice the integer spectral range of diag(0, 1), so Z_3 and U(1)
        // covariance coincide; diag(0, 1, 2) has range 2 and they differ.
        let (h, expect_equal) = if i % 2 == 0 {
            (ComplexMatrix::diag_real(&[0.0, 1.0]), true)
        } else {
            (ComplexMatrix::diag_real(&[0.0, 1.0, 2.0]), false)
        };
        let d = h.rows();
        let cfg = ClockConfig::new(3, two_pi / 3.0)?;
        let w = cfg.generator(&h)?;
        let zn = Representation::cyclic(3, w.clone(), w)?;
        let u1 = Representation::one_parameter(h.clone(), h)?;
        let ch = random_channel_rng(d, d, rng);
        let j_zn = QuantumChannel::normalized_from(d, d, &project_choi_covariant(ch.choi(), &zn)?)?;
        let j_u1 = QuantumChannel::normalized_from(d, d, &project_choi_covariant(ch.choi(), &u1)?)?;
        let zn_then_u1 = check_covariance(&j_zn, &u1)?;
        let u1_then_zn = check_covariance(&j_u1, &zn)?;
        Ok((expect_equal, zn_then_u1, u1_then_zn))
    });
    let mut t = Tally::new();
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok((eq, a, b)) => {
                let ok = *b <= 1e-8 && if *eq { *a <= 1e-8 } else { *a > 1e-4 };
                t.record(ok, || format!("instance {i}: residuals {a:.3e}, {b:.3e} (expected equal: {eq})"));
            }
            Err(e) => t.error(e, i),
        }
    }
    t.finish(16, start)
}

fn suite_transitivity(seed: u64, settings: &SdpSettings) -> SuiteResult {
    let start = Instant::now();
    let results = par_map(10, seed, 17, |rng, _| {
        let (d1, d2, d3) = (rng.random_range(2..=3), rng.random_range(2..=3), rng.random_range(2..=3));
        let e1 = random_channel_rng(d1, d2, rng);
        let e2 = random_channel_rng(d2, d3, rng);
        let p: Vec<_> = (0..3).map(|_| random_state_rng(d1, rng)).collect();
        let q: Vec<_> = p.iter().map(|r| e1.apply(r)).collect();
        let r: Vec<_> = q.iter().map(|x| e2.apply(x)).collect();
        let pq = decide_ensemble_conversion(&ConversionProblem::new(p.clone(), q.clone(), None)?, settings)?;
        let qr = decide_ensemble_conversion(&ConversionProblem::new(q, r.clone(), None)?, settings)?;
        let pr = decide_ensemble_conversion(&ConversionProblem::new(p, r, None)?, settings)?;
        Ok(pq.feasible && qr.feasible && pr.feasible)
    });
    let mut t = Tally::new();
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(ok) => t.record(*ok, || format!("instance {i}: composition not reported feasible")),
            Err(e) => t.error(e, i),
        }
    }
    t.finish(17, start)
}

fn suite_clock_monotone(seed: u64, settings: &SdpSettings) -> SuiteResult {
    let start = Instant::now();
    let results = par_map(12, seed, 18, |rng, i| {
        let d = 2 + i % 2;
        let n = 2 + i % 3;
        let h = ComplexMatrix::diag_real(&(0..d).map(|k| k as f64).collect::<Vec<_>>());
        let ctx = ThermoContext::same(h.clone(), rng.random_range(0.1..3.0))?;
        let cfg = ClockConfig::new(n, 2.0 * std::f64::consts::PI / n as f64)?;
        let rho = random_pure_state_rng(d, rng);
        let ch = random_gpc_channel(&ctx, rng.random(), settings)?;
        let before = clock_guess(&rho, &h, &cfg, settings)?.p_guess;
        let after = clock_guess(&ch.apply(&rho), &h, &cfg, settings)?.p_guess;
        Ok(after - before)
    });
    let mut t = Tally::new();
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(v) => t.record(*v <= 1e-6, || format!("instance {i}: p_guess increased by {v:.3e}")),
            Err(e) => t.error(e, i),
        }
    }
    t.finish(18, start)
}

/// Target of the qubit sweep: `lambda |+><+| + (1 - lambda) |0><0|`.
pub fn coherence_sweep_target(lambda: f64) -> ComplexMatrix {
    &pure_state(&[ONE, ONE]).scale(lambda) + &ComplexMatrix::diag_real(&[1.0 - lambda, 0.0])
}

/// Inverse temperature of the sweep; below `ln 3` only `lambda = 1` is reachable.
pub const SWEEP_BETA: f64 = 2.0;

/// Closed-form answer for `|+> -> coherence_sweep_target(lambda)` with `H = diag(0, 1)`.
///
/// A qubit map that is time-covariant and Gibbs preserving relaxes the excited level with
/// probability `a`, excites with `a e^{-beta}` and scales coherences by `c` with
/// `|c|^2 <= (1 - a)(1 - a e^{-beta})`. The target population fixes `a`.
pub fn coherence_sweep_oracle(lambda: f64, beta: f64) -> bool {
    let r = (-beta).exp();
    let a = (1.0 - lambda) / (1.0 - r);
    (0.0..=1.0).contains(&a) && lambda * lambda <= (1.0 - a) * (1.0 - a * r)
}

/// Margin of the oracle inequality, used to skip grid points on the boundary.
fn sweep_oracle_margin(lambda: f64, beta: f64) -> f64 {
    let r = (-beta).exp();
    let a = (1.0 - lambda) / (1.0 - r);
    ((1.0 - a) * (1.0 - a * r) - lambda * lambda).min(1.0 - a)
}

fn suite_sweep(seed: u64, settings: &SdpSettings) -> SuiteResult {
    let start = Instant::now();
    let ctx = match ThermoContext::same(ComplexMatrix::diag_real(&[0.0, 1.0]), SWEEP_BETA) {
        Ok(c) => c,
        Err(e) => {
            let mut t = Tally::new();
            t.error(&e, 0);
            return t.finish(19, start);
        }
    };
    let plus = pure_state(&[ONE, ONE]);
    let results = par_map(41, seed, 19, |rng, i| {
        let lambda = i as f64 / 40.0;
        let sigma = coherence_sweep_target(lambda);
        let r = decide_thermal_conversion(&plus, &sigma, &ctx, None, settings)?;
        let monotone = if r.conversion.feasible {
            thermal_monotone_search(&plus, &sigma, &ctx, 40, rng.random(), settings)?
        } else {
            r.monotone_violation.unwrap_or(f64::NAN)
        };
        Ok((lambda, r.conversion.feasible, r.conversion.marginal, monotone))
    });
    let mut t = Tally::new();
    let mut range: Option<(f64, f64)> = None;
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok((lambda, feasible, marginal, m)) => {
                if *feasible {
                    range = Some(range.map_or((*lambda, *lambda), |(lo, hi)| (lo.min(*lambda), hi.max(*lambda))));
                }
                if *marginal {
                    t.flagged += 1;
                }
                let oracle = coherence_sweep_oracle(*lambda, SWEEP_BETA);
                let clear = sweep_oracle_margin(*lambda, SWEEP_BETA).abs() > 1e-4;
                let monotone_ok = if *feasible { *m <= 1e-6 } else { *m > 1e-6 || *marginal };
                let ok = monotone_ok && (!clear || oracle == *feasible);
                t.record(ok, || format!("lambda {lambda}: SDP {feasible}, closed form {oracle}, monotone {m:.3e}"));
            }
            Err(e) => t.error(e, i),
        }
    }
    t.extra = match range {
        Some((lo, hi)) => format!("feasible for lambda in [{lo}, {hi}]"),
        None => "no feasible lambda".into(),
    };
    t.finish(19, start)
}

fn suite_bipartite_witness(seed: u64, settings: &SdpSettings) -> SuiteResult {
    let start = Instant::now();
    let results = par_map(10, seed, 20, |rng, i| {
        let (rho, sigma, dc) = if i == 0 {
            (maximally_mixed(4), max_entangled(2), 2)
        } else {
            let dc = rng.random_range(2..=3);
            let sigma = random_pure_state_rng(2 * dc, rng);
            let rho = kron(&trace_second(&sigma, 2, dc), &random_state_rng(2, rng));
            (rho, sigma, dc)
        };
        let r = decide_bipartite_qmaj(&rho, &sigma, 2, 2, dc, settings)?;
        Ok((r.feasible, r.marginal, r.witness_violation))
    });
    let mut t = Tally::new();
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok((feasible, marginal, v)) => {
                let ok = *marginal || (!feasible && v.is_some_and(|v| v > 1e-6));
                t.record(ok, || format!("instance {i}: feasible {feasible}, violation {v:?}"));
            }
            Err(e) => t.error(e, i),
        }
    }
    t.finish(20, start)
}

/// Runs one suite by id.
pub fn run_suite(id: u32, seed: u64, settings: &SdpSettings) -> Result<SuiteResult> {
    Ok(match id {
        1..=3 | 5 => {
            let start = Instant::now();
            let pool = ensemble_pool(seed, settings);
            match id {
                1 => suite_duality(&pool, start),
                2 => suite_alpha_bound(&pool, start),
                3 => suite_agreement(&pool, start),
                _ => suite_witness(&pool, settings, start),
            }
        }
        4 => suite_necessity(seed, settings),
        6 => suite_classical(seed, settings),
        7 => suite_anchors(seed, settings),
        8 => suite_cq(seed, settings),
        9 => suite_data_processing(seed, settings),
        10 => suite_incoherent(seed, settings),
        11 => suite_nogo(seed, settings),
        12 => suite_clock(seed, settings),
        13 => suite_thermal_necessity(seed, settings),
        15 => suite_group_monotone(seed, settings),
        16 => suite_zn_equivalence(seed, settings),
        17 => suite_transitivity(seed, settings),
        18 => suite_clock_monotone(seed, settings),
        19 => suite_sweep(seed, settings),
        20 => suite_bipartite_witness(seed, settings),
        _ => return Err(Error::Validation(format!("unknown suite {id}"))),
    })
}

/// Runs every suite, sharing the ensemble pool between suites 1, 2, 3 and 5.
/// Suite 1 reports the time to build the pool.
pub fn run_all(seed: u64, settings: &SdpSettings) -> Vec<SuiteResult> {
    let start = Instant::now();
    let pool = ensemble_pool(seed, settings);
    let pool_time = start.elapsed().as_secs_f64();
    let mut out = vec![
        SuiteResult { seconds: pool_time, ..suite_duality(&pool, start) },
        SuiteResult { seconds: 0.0, ..suite_alpha_bound(&pool, start) },
        SuiteResult { seconds: 0.0, ..suite_agreement(&pool, start) },
    ];
    out.push(suite_necessity(seed, settings));
    let wstart = Instant::now();
    out.push(suite_witness(&pool, settings, wstart));
    for id in [6, 7, 8, 9, 10, 11, 12, 13, 15, 16, 17, 18, 19, 20] {
        out.push(run_suite(id, seed, settings).expect("known suite id"));
    }
    out
}
