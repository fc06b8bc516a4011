//! Manifest of jobs run concurrently, reported in manifest order.
//!
//! ```json
//! {"jobs": [{"command": "convert", "inputs": {"problem": "p.json"}, "options": {"tolerance": 1e-9}}]}
//! ```
//! String inputs are file paths relative to the manifest; other JSON values are used inline.
//! List inputs of `thermo-major` (`p`, `q`, `gibbs`, `gibbs_out`) are always inline.

use std::path::Path;
use std::time::Instant;

use qmajor::sdp::TraceSink;
use qmajor::Error;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::job::{self, Job, Options, EXIT_OK};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    #[serde(default)]
    jobs: Vec<Job>,
}

fn resolve(job: &Job, base: &Path) -> Result<Job, Error> {
    let mut out = Job::new(&job.command);
    out.options = job.options.clone();
    for (name, v) in &job.inputs {
        match v {
            Value::String(path) => out.input_file(name, &base.join(path))?,
            other => out.input_value(name, other.clone()),
        }
    }
    Ok(out)
}

pub fn run_manifest(path: &Path, trace: Option<&TraceSink>, defaults: impl Fn(&mut Options) + Sync) -> Result<(i32, Value), Error> {
    let start = Instant::now();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let results: Vec<(i32, Value)> = manifest
        .jobs
        .par_iter()
        .enumerate()
        .map(|(i, j)| match resolve(j, base) {
            Ok(mut j) => {
                defaults(&mut j.options);
                job::run(&j, trace)
            }
            Err(e) => {
                let code = job::exit_code_for(&e);
                (code, json!({"command": j.command, "job": i, "status": "input_error", "error": e.to_string(), "exit_code": code}))
            }
        })
        .collect();
    let worst = results.iter().map(|r| r.0).max().unwrap_or(EXIT_OK);
    for (i, (code, r)) in results.iter().enumerate() {
        let summary = r.get("summary").and_then(Value::as_str).or_else(|| r.get("error").and_then(Value::as_str)).unwrap_or("");
        eprintln!("job {i} ({}): exit {code}: {}", r.get("command").and_then(Value::as_str).unwrap_or("?"), summary.lines().next().unwrap_or(""));
    }
    let report = json!({
        "command": "batch",
        "jobs": results.into_iter().map(|r| r.1).collect::<Vec<_>>(),
        "exit_code": worst,
        "wall_clock_seconds": start.elapsed().as_secs_f64(),
    });
    Ok((worst, report))
}
