//! `qmajor`: decide state conversions and evaluate entropic monotones from JSON documents.

mod batch;
mod job;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qmajor::sdp::TraceSink;
use qmajor::Error;
use serde_json::Value;

use job::{Job, Options};

#[derive(Parser)]
#[command(name = "qmajor", version, about = "Quantum majorization and thermodynamic conversion decisions")]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Stream per-iteration solver residuals to stderr.
    #[arg(long, global = true)]
    trace: bool,
    /// Solver tolerance on residuals and duality gap.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[arg(long, global = true)]
    max_iterations: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Sampling {
    /// Seed for sampled checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of sampled checks.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Bipartite quantum majorization of rho^{AB} over sigma^{AC} (dims [d_A, d_B] in each file).
    Qmaj {
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
    },
    /// Ensemble conversion {rho_i} -> {sigma_i}.
    Convert {
        #[arg(long)]
        problem: PathBuf,
    },
    /// Ensemble conversion by channels covariant under a group representation.
    Covariant {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        rep: PathBuf,
    },
    /// Conversion by thermal processes.
    Thermal {
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        context: PathBuf,
        /// Reference states for an explicit monotone evaluation.
        #[arg(long, requires = "eta2")]
        eta1: Option<PathBuf>,
        #[arg(long, requires = "eta1")]
        eta2: Option<PathBuf>,
        /// Mixing weight of the monotone, in (0, 1).
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        /// Charge multipliers, comma separated, replacing those in the context.
        #[arg(long, value_delimiter = ',')]
        mu: Option<Vec<f64>>,
        /// Clock order N (with --epsilon) to impose Z_N instead of continuous covariance.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Thermo-majorization of energy populations.
    ThermalIncoherent {
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        context: PathBuf,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        mu: Option<Vec<f64>>,
    },
    /// Conditional min-entropy H_min(A|B) of a state with dims [d_A, d_B].
    MinEntropy {
        #[arg(long)]
        state: PathBuf,
    },
    /// Optimal guessing probability of an ensemble {"weights": [...], "states": [...]}.
    Guess {
        #[arg(long)]
        ensemble: PathBuf,
    },
    /// Classical thermo-majorization of p over q.
    ThermoMajor {
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        gibbs: Vec<f64>,
        /// Gibbs populations of the target system, when they differ.
        #[arg(long, value_delimiter = ',')]
        gibbs_out: Option<Vec<f64>>,
    },
    /// Clock-time guessing probability of a state under exp(-i n epsilon H).
    Clock {
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        hamiltonian: PathBuf,
        /// Clock order; omitted, it is fitted from the spectrum.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        epsilon: f64,
        /// Rationalization tolerance used when fitting N.
        #[arg(long)]
        fit_tolerance: Option<f64>,
    },
    /// Asymmetry monotone H_min(A'|S) of the twirled eta (x) rho.
    Asymmetry {
        #[arg(long)]
        eta: PathBuf,
        #[arg(long)]
        rho: PathBuf,
        /// Optional target, evaluated with the output action.
        #[arg(long)]
        sigma: Option<PathBuf>,
        #[arg(long)]
        rep: PathBuf,
    },
    /// Randomized invariant suites.
    Selftest {
        #[arg(long)]
        seed: Option<u64>,
        /// Run a single suite.
        #[arg(long)]
        suite: Option<u32>,
    },
    /// Run the jobs listed in a manifest; paths are relative to the manifest.
    Batch { manifest: PathBuf },
    /// Re-run the job recorded in a report and compare the verdict.
    Verify { report: PathBuf },
}

fn build_job(cmd: Cmd) -> Result<Job, Error> {
    let mut files: Vec<(&str, PathBuf)> = Vec::new();
    let mut opts = Options::default();
    let (name, mut job) = match cmd {
        Cmd::Qmaj { rho, sigma } => {
            files.extend([("rho", rho), ("sigma", sigma)]);
            ("qmaj", None)
        }
        Cmd::Convert { problem } => {
            files.push(("problem", problem));
            ("convert", None)
        }
        Cmd::Covariant { problem, rep } => {
            files.extend([("problem", problem), ("rep", rep)]);
            ("covariant", None)
        }
        Cmd::Thermal { rho, sigma, context, eta1, eta2, q, beta, mu, n, epsilon, sampling } => {
            files.extend([("rho", rho), ("sigma", sigma), ("context", context)]);
            files.extend(eta1.map(|p| ("eta1", p)));
            files.extend(eta2.map(|p| ("eta2", p)));
            opts = Options { q, beta, mu, n, epsilon, seed: sampling.seed, trials: sampling.trials, ..opts };
            ("thermal", None)
        }
        Cmd::ThermalIncoherent { rho, sigma, context, beta, mu } => {
            files.extend([("rho", rho), ("sigma", sigma), ("context", context)]);
            opts = Options { beta, mu, ..opts };
            ("thermal-incoherent", None)
        }
        Cmd::MinEntropy { state } => {
            files.push(("state", state));
            ("min-entropy", None)
        }
        Cmd::Guess { ensemble } => {
            files.push(("ensemble", ensemble));
            ("guess", None)
        }
        Cmd::ThermoMajor { p, q, gibbs, gibbs_out } => {
            let mut j = Job::new("thermo-major");
            j.input_value("p", p.into());
            j.input_value("q", q.into());
            j.input_value("gibbs", gibbs.into());
            if let Some(g) = gibbs_out {
                j.input_value("gibbs_out", g.into());
            }
            ("thermo-major", Some(j))
        }
        Cmd::Clock { rho, hamiltonian, n, epsilon, fit_tolerance } => {
            files.extend([("rho", rho), ("hamiltonian", hamiltonian)]);
            opts = Options { n, epsilon: Some(epsilon), fit_tolerance, ..opts };
            ("clock", None)
        }
        Cmd::Asymmetry { eta, rho, sigma, rep } => {
            files.extend([("eta", eta), ("rho", rho), ("rep", rep)]);
            files.extend(sigma.map(|p| ("sigma", p)));
            ("asymmetry", None)
        }
        Cmd::Selftest { seed, suite } => {
            opts = Options { seed, suite, ..opts };
            ("selftest", None)
        }
        Cmd::Batch { .. } | Cmd::Verify { .. } => unreachable!("handled before job construction"),
    };
    let mut j = job.take().unwrap_or_else(|| Job::new(name));
    for (input, path) in files {
        j.input_file(input, &path)?;
    }
    j.options = opts;
    Ok(j)
}

fn emit(out: Option<&Path>, report: &Value) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(report).map_err(|e| Error::Parse(e.to_string()))? + "\n";
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Parse(format!("--out {}: {e}", p.display()))),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn configure_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("QMAJOR_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            Error::Validation(format!("QMAJOR_THREADS must be a positive integer, got {v:?}"))
        })?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Validation(e.to_string()))?;
    }
    Ok(())
}

fn real_main() -> Result<i32, Error> {
    let cli = Cli::parse();
    configure_threads()?;
    let trace = cli.trace.then(|| TraceSink::new(std::io::stderr()));
    let solver = |o: &mut Options| {
        o.tolerance = o.tolerance.or(cli.tolerance);
        o.max_iterations = o.max_iterations.or(cli.max_iterations);
    };
    let (code, report) = match cli.command {
        Cmd::Batch { manifest } => batch::run_manifest(&manifest, trace.as_ref(), |o| solver(o))?,
        Cmd::Verify { report } => {
            let text = std::fs::read_to_string(&report).map_err(|e| Error::Parse(format!("{}: {e}", report.display())))?;
            let value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", report.display())))?;
            let (ok, out) = job::verify(&value, trace.as_ref())?;
            eprintln!("{}", if ok { "reproduced" } else { "not reproduced" });
            (if ok { job::EXIT_OK } else { job::EXIT_INFEASIBLE }, out)
        }
        cmd => {
            let mut j = build_job(cmd)?;
            solver(&mut j.options);
            let (code, report) = job::run(&j, trace.as_ref());
            if let Some(s) = report.get("summary").and_then(Value::as_str) {
                eprintln!("{s}");
            }
            (code, report)
        }
    };
    emit(cli.out.as_deref(), &report)?;
    Ok(code)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(job::exit_code_for(&e) as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn every_command_is_listed() {
        use clap::CommandFactory;
        let cmd = Cli::command();
        for name in job::COMMANDS {
            assert!(cmd.find_subcommand(name).is_some(), "{name}");
        }
    }

    #[test]
    fn input_errors_map_to_exit_two() {
        assert_eq!(job::exit_code_for(&Error::Parse("x".into())), job::EXIT_INPUT);
        assert_eq!(job::exit_code_for(&Error::NonConvergence("x".into())), job::EXIT_SOLVER);
    }
}
