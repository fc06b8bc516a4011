//! Jobs: a command, its input documents and its options, executed into a report.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use qmajor::covariant::{asymmetry_monotone, Side};
use qmajor::io::{ContextDoc, MatrixDoc, ProblemDoc, RepresentationDoc};
use qmajor::majorization::{
    decide_bipartite_qmaj, decide_ensemble_conversion, decide_with_symmetry, thermo_curve_breakpoints,
    thermo_majorizes, thermo_margin,
};
use qmajor::minentropy::{guessing_probability, min_entropy};
use qmajor::quantum::Ensemble;
use qmajor::sdp::{SdpSettings, TraceSink};
use qmajor::selftest::{self, HELSTROM_TOLERANCE};
use qmajor::thermo::{
    clock_guess, decide_thermal_conversion, decide_thermal_incoherent, thermal_monotone_search,
    thermal_monotone_violation, zn_from_hamiltonian, ClockConfig,
};
use qmajor::{ComplexMatrix, Error};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

pub const COMMANDS: &[&str] = &[
    "qmaj",
    "convert",
    "covariant",
    "thermal",
    "thermal-incoherent",
    "min-entropy",
    "guess",
    "thermo-major",
    "clock",
    "asymmetry",
    "selftest",
];

/// Default seed for sampled checks and the selftest.
pub const DEFAULT_SEED: u64 = 20_240_917;

/// Numeric options. Flags given on the command line replace values embedded in input
/// documents (the context's beta, charge multipliers and clock).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<u32>,
}

impl Options {
    fn validate(&self) -> Result<(), Error> {
        let positive = |v: Option<f64>, name: &str| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::Validation(format!("option {name} must be positive, got {x}"))),
            _ => Ok(()),
        };
        positive(self.tolerance, "tolerance")?;
        positive(self.epsilon, "epsilon")?;
        positive(self.fit_tolerance, "fit_tolerance")?;
        positive(self.beta, "beta")?;
        if let Some(q) = self.q {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::Validation(format!("option q must lie in (0, 1), got {q}")));
            }
        }
        if self.max_iterations == Some(0) {
            return Err(Error::Validation("option max_iterations must be at least 1".into()));
        }
        if self.n == Some(0) {
            return Err(Error::Validation("option n must be at least 1".into()));
        }
        Ok(())
    }
}

/// A command with its inputs held as parsed JSON documents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Job {
    pub command: String,
    #[serde(default)]
    pub inputs: BTreeMap<String, Value>,
    #[serde(default)]
    pub options: Options,
}

impl Job {
    pub fn new(command: &str) -> Self {
        Self { command: command.to_string(), inputs: BTreeMap::new(), options: Options::default() }
    }

    /// Adds an input read from `path`. A report document supplies the input of the same
    /// name from its `problem` section.
    pub fn input_file(&mut self, name: &str, path: &Path) -> Result<(), Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{name}: {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{name}: {}: {e}", path.display())))?;
        self.inputs.insert(name.to_string(), unwrap_report(name, value, path)?);
        Ok(())
    }

    pub fn input_value(&mut self, name: &str, value: Value) {
        self.inputs.insert(name.to_string(), value);
    }

    fn get<T: serde::de::DeserializeOwned>(&self, name: &str) -> Result<T, Error> {
        let v = self.inputs.get(name).ok_or_else(|| Error::Validation(format!("{}: missing input {name}", self.command)))?;
        serde_json::from_value(v.clone()).map_err(|e| Error::Parse(format!("{name}: {e}")))
    }

    fn get_opt<T: serde::de::DeserializeOwned>(&self, name: &str) -> Result<Option<T>, Error> {
        if self.inputs.contains_key(name) {
            self.get(name).map(Some)
        } else {
            Ok(None)
        }
    }

    fn matrix(&self, name: &str) -> Result<ComplexMatrix, Error> {
        self.get::<MatrixDoc>(name)?.square(name)
    }

    fn bipartite(&self, name: &str) -> Result<(ComplexMatrix, usize, usize), Error> {
        let (m, dims) = self.get::<MatrixDoc>(name)?.checked(name)?;
        match dims[..] {
            [a, b] => Ok((m, a, b)),
            _ => Err(Error::Parse(format!("{name}: dims must list two factors, got {dims:?}"))),
        }
    }

    fn settings(&self, trace: Option<&TraceSink>) -> SdpSettings {
        let mut s = SdpSettings::default();
        if let Some(t) = self.options.tolerance {
            s.tolerance = t;
        }
        if let Some(m) = self.options.max_iterations {
            s.max_iterations = m;
        }
        s.trace = trace.cloned();
        s
    }
}

fn unwrap_report(name: &str, value: Value, path: &Path) -> Result<Value, Error> {
    match value {
        Value::Object(mut map) if map.contains_key("command") && map.contains_key("problem") => {
            let problem = map.remove("problem").unwrap_or(Value::Null);
            problem
                .get(name)
                .cloned()
                .ok_or_else(|| Error::Parse(format!("{name}: report {} has no problem.{name}", path.display())))
        }
        v => Ok(v),
    }
}

/// Result of a successful job: an optional yes/no verdict, a payload and a one-line summary.
pub struct Outcome {
    pub verdict: Option<bool>,
    pub result: Value,
    pub summary: String,
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::NonConvergence(_) | Error::RouteDisagreement(_) | Error::Singular(_) => EXIT_SOLVER,
        _ => EXIT_INPUT,
    }
}

/// Runs a job and wraps the outcome in a self-contained report.
pub fn run(job: &Job, trace: Option<&TraceSink>) -> (i32, Value) {
    let start = Instant::now();
    let outcome = job.options.validate().and_then(|_| execute(job, trace));
    let seconds = start.elapsed().as_secs_f64();
    let settings = job.settings(None);
    let mut report = json!({
        "command": job.command,
        "problem": job.inputs,
        "options": job.options,
        "solver": {"tolerance": settings.tolerance, "max_iterations": settings.max_iterations},
    });
    let code = match outcome {
        Ok(o) => {
            let code = if o.verdict == Some(false) { EXIT_INFEASIBLE } else { EXIT_OK };
            let status = match o.verdict {
                Some(true) => "feasible",
                Some(false) => "infeasible",
                None => "computed",
            };
            report["status"] = json!(status);
            if let Some(v) = o.verdict {
                report["verdict"] = json!(v);
            }
            report["result"] = o.result;
            report["summary"] = json!(o.summary);
            code
        }
        Err(e) => {
            let code = exit_code_for(&e);
            report["status"] = json!(if code == EXIT_SOLVER { "solver_error" } else { "input_error" });
            report["error"] = json!(e.to_string());
            report["summary"] = json!(format!("error: {e}"));
            code
        }
    };
    report["exit_code"] = json!(code);
    report["wall_clock_seconds"] = json!(seconds);
    (code, report)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn verdict_word(f: bool) -> &'static str {
    if f {
        "feasible"
    } else {
        "infeasible"
    }
}

fn execute(job: &Job, trace: Option<&TraceSink>) -> Result<Outcome, Error> {
    let settings = job.settings(trace);
    let opts = &job.options;
    match job.command.as_str() {
        "qmaj" => {
            let (rho, da, db) = job.bipartite("rho")?;
            let (sigma, da2, dc) = job.bipartite("sigma")?;
            if da != da2 {
                return Err(Error::Dimension(format!("sigma: first factor {da2} differs from rho's {da}")));
            }
            let r = decide_bipartite_qmaj(&rho, &sigma, da, db, dc, &settings)?;
            let mut summary = verdict_word(r.feasible).to_string();
            if let Some(e) = &r.ensemble {
                summary.push_str(&format!(", alpha = {:.9}, beta = {:.9}", e.alpha, e.beta));
            }
            if let Some(reason) = &r.reason {
                summary.push_str(&format!(" ({reason})"));
            }
            if r.marginal {
                summary.push_str(", marginal");
            }
            Ok(Outcome { verdict: Some(r.feasible), result: to_value(&r), summary })
        }
        "convert" | "covariant" => {
            let problem = job.get::<ProblemDoc>("problem")?.to_problem()?;
            let r = if job.command == "covariant" {
                let rep = job.get::<RepresentationDoc>("rep")?.to_representation()?;
                decide_with_symmetry(&problem, Some(&rep), &settings)?
            } else {
                decide_ensemble_conversion(&problem, &settings)?
            };
            let summary = format!(
                "{}{}, alpha = {:.9}, beta = {:.9}",
                verdict_word(r.feasible),
                if r.marginal { " (marginal)" } else { "" },
                r.alpha,
                r.beta
            );
            Ok(Outcome { verdict: Some(r.feasible), result: to_value(&r), summary })
        }
        "thermal" | "thermal-incoherent" => {
            let rho = job.matrix("rho")?;
            let sigma = job.matrix("sigma")?;
            let mut ctx_doc = job.get::<ContextDoc>("context")?;
            if let Some(b) = opts.beta {
                ctx_doc.beta = b;
            }
            if let Some(mu) = &opts.mu {
                if mu.len() != ctx_doc.charges.len() {
                    return Err(Error::Validation(format!("option mu: {} values for {} charges", mu.len(), ctx_doc.charges.len())));
                }
                for (c, m) in ctx_doc.charges.iter_mut().zip(mu) {
                    c.mu = *m;
                }
            }
            match (opts.n, opts.epsilon) {
                (Some(n), Some(epsilon)) => ctx_doc.clock = Some(ClockConfig { n, epsilon }),
                (None, None) => {}
                _ => return Err(Error::Validation("options n and epsilon must be given together".into())),
            }
            let (ctx, clock) = ctx_doc.to_context()?;
            if job.command == "thermal-incoherent" {
                let holds = decide_thermal_incoherent(&rho, &sigma, &ctx)?;
                return Ok(Outcome { verdict: Some(holds), result: json!({"feasible": holds}), summary: verdict_word(holds).into() });
            }
            let r = decide_thermal_conversion(&rho, &sigma, &ctx, clock.as_ref(), &settings)?;
            let mut result = to_value(&r);
            let mut summary = format!("{}, alpha = {:.9}", verdict_word(r.conversion.feasible), r.conversion.alpha);
            if let Some(v) = r.monotone_violation {
                summary.push_str(&format!(", monotone violation = {v:.3e}"));
            }
            if let (Some(e1), Some(e2)) = (job.get_opt::<MatrixDoc>("eta1")?, job.get_opt::<MatrixDoc>("eta2")?) {
                let q = opts.q.unwrap_or(0.5);
                let v = thermal_monotone_violation(&rho, &sigma, &e1.square("eta1")?, &e2.square("eta2")?, q, &ctx, &settings)?;
                result["reference_violation"] = json!(v);
                summary.push_str(&format!(", S(rho) - S(sigma) = {v:.3e}"));
            }
            if let Some(trials) = opts.trials {
                let v = thermal_monotone_search(&rho, &sigma, &ctx, trials, opts.seed.unwrap_or(DEFAULT_SEED), &settings)?;
                result["sampled_max_violation"] = json!(v);
                summary.push_str(&format!(", sampled max violation = {v:.3e}"));
            }
            Ok(Outcome { verdict: Some(r.conversion.feasible), result, summary })
        }
        "min-entropy" => {
            let (state, da, db) = job.bipartite("state")?;
            let r = min_entropy(&state, da, db, &settings)?;
            Ok(Outcome {
                verdict: None,
                summary: format!("H_min(A|B) = {:.10}", r.value),
                result: json!({
                    "h_min": r.value,
                    "exp_neg_h_min": r.exp_value,
                    "gap": r.gap,
                    "tau": MatrixDoc::single(r.optimal_tau),
                }),
            })
        }
        "guess" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct EnsembleDoc {
                #[serde(default)]
                weights: Option<Vec<f64>>,
                states: Vec<MatrixDoc>,
            }
            let doc = job.get::<EnsembleDoc>("ensemble")?;
            let states =
                doc.states.into_iter().enumerate().map(|(i, m)| m.square(&format!("states[{i}]"))).collect::<Result<Vec<_>, _>>()?;
            let ens = match doc.weights {
                Some(w) => Ensemble::new(w, states)?,
                None => Ensemble::uniform(states)?,
            };
            let s = if opts.tolerance.is_some() { settings } else { settings.with_tolerance(HELSTROM_TOLERANCE) };
            let r = guessing_probability(&ens, &s)?;
            Ok(Outcome {
                verdict: None,
                summary: format!("p_guess = {:.12}", r.probability),
                result: json!({
                    "p_guess": r.probability,
                    "gap": r.gap,
                    "povm": r.povm.into_iter().map(MatrixDoc::single).collect::<Vec<_>>(),
                }),
            })
        }
        "thermo-major" => {
            let p: Vec<f64> = job.get("p")?;
            let q: Vec<f64> = job.get("q")?;
            let g: Vec<f64> = job.get("gibbs")?;
            let g_out: Vec<f64> = job.get_opt("gibbs_out")?.unwrap_or_else(|| g.clone());
            let holds = thermo_majorizes(&p, &g, &q, &g_out)?;
            let margin = thermo_margin(&p, &g, &q, &g_out)?;
            Ok(Outcome {
                verdict: Some(holds),
                summary: format!("{holds}, margin = {margin:.3e}"),
                result: json!({
                    "thermo_majorizes": holds,
                    "margin": margin,
                    "curve_p": thermo_curve_breakpoints(&p, &g)?,
                    "curve_q": thermo_curve_breakpoints(&q, &g_out)?,
                }),
            })
        }
        "clock" => {
            let rho = job.matrix("rho")?;
            let h = job.matrix("hamiltonian")?;
            let (cfg, h) = match (opts.n, opts.epsilon, opts.fit_tolerance) {
                (Some(n), Some(eps), None) => (ClockConfig::new(n, eps)?, h),
                (None, Some(eps), fit) => {
                    let f = zn_from_hamiltonian(&h, eps, fit.unwrap_or(1e-9))?;
                    (f.config, f.hamiltonian)
                }
                _ => return Err(Error::Validation("clock: give epsilon with n, or epsilon alone to fit n".into())),
            };
            let g = clock_guess(&rho, &h, &cfg, &settings)?;
            Ok(Outcome {
                verdict: None,
                summary: format!("N = {}, p_guess = {:.10}, H_min(R|A) = {:.10}", cfg.n, g.p_guess, g.h_min),
                result: json!({"clock": cfg, "p_guess": g.p_guess, "h_min": g.h_min}),
            })
        }
        "asymmetry" => {
            let eta = job.matrix("eta")?;
            let rho = job.matrix("rho")?;
            let rep = job.get::<RepresentationDoc>("rep")?.to_representation()?;
            let v = asymmetry_monotone(&eta, &rho, &rep, Side::Input, &settings)?;
            let mut result = json!({"h_min_rho": v});
            let mut summary = format!("H_min(A'|rho) = {v:.10}");
            if let Some(sigma) = job.get_opt::<MatrixDoc>("sigma")? {
                let w = asymmetry_monotone(&eta, &sigma.square("sigma")?, &rep, Side::Output, &settings)?;
                result["h_min_sigma"] = json!(w);
                result["difference"] = json!(v - w);
                summary.push_str(&format!(", H_min(A'|sigma) = {w:.10}"));
            }
            Ok(Outcome { verdict: None, result, summary })
        }
        "selftest" => {
            let seed = opts.seed.unwrap_or(DEFAULT_SEED);
            let start = Instant::now();
            let results = match opts.suite {
                Some(id) => vec![selftest::run_suite(id, seed, &settings)?],
                None => selftest::run_all(seed, &settings),
            };
            let total = start.elapsed().as_secs_f64();
            let ok = results.iter().all(|r| r.ok);
            let lines: Vec<String> = results
                .iter()
                .map(|r| {
                    format!(
                        "[{}] {:>2} {}: {}/{}{}",
                        if r.ok { "PASS" } else { "FAIL" },
                        r.id,
                        r.name,
                        r.passed,
                        r.total,
                        if r.flagged > 0 { format!(" ({} marginal)", r.flagged) } else { String::new() }
                    )
                })
                .collect();
            Ok(Outcome {
                verdict: Some(ok),
                summary: format!("{}\ntotal {total:.1}s", lines.join("\n")),
                result: json!({"seed": seed, "suites": results, "total_seconds": total}),
            })
        }
        other => Err(Error::Validation(format!("unknown command {other:?}; expected one of {}", COMMANDS.join(", ")))),
    }
}

/// Re-runs the job recorded in a report and compares the verdict or headline value.
pub fn verify(report: &Value, trace: Option<&TraceSink>) -> Result<(bool, Value), Error> {
    let job: Job = serde_json::from_value(json!({
        "command": report.get("command").cloned().unwrap_or(Value::Null),
        "inputs": report.get("problem").cloned().unwrap_or(json!({})),
        "options": report.get("options").cloned().unwrap_or(json!({})),
    }))
    .map_err(|e| Error::Parse(format!("report: {e}")))?;
    let (_, rerun) = run(&job, trace);
    let same_status = rerun.get("status") == report.get("status");
    let same_verdict = rerun.get("verdict") == report.get("verdict");
    let headline = ["p_guess", "h_min", "h_min_rho"];
    let values_close = headline.iter().all(|k| {
        match (report.pointer(&format!("/result/{k}")).and_then(Value::as_f64), rerun.pointer(&format!("/result/{k}")).and_then(Value::as_f64)) {
            (Some(a), Some(b)) => (a - b).abs() <= 1e-7,
            (None, None) => true,
            _ => false,
        }
    });
    let ok = same_status && same_verdict && values_close;
    Ok((ok, json!({"reproduced": ok, "original_status": report.get("status"), "rerun": rerun})))
}
