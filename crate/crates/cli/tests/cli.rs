use std::path::{Path, PathBuf};
use std::process::Command;

use qmajor::io::{MatrixDoc, ProblemDoc};
use qmajor::linalg::kron;
use qmajor::majorization::ConversionProblem;
use qmajor::quantum::{max_entangled, maximally_mixed, random_state};
use qmajor::ComplexMatrix;
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qmajor"))
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn doc(m: ComplexMatrix, dims: Vec<usize>) -> Value {
    serde_json::to_value(MatrixDoc::new(m, dims)).unwrap()
}

fn run(args: &[&str]) -> (i32, Value, String) {
    let out = bin().args(args).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    let report = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), report, String::from_utf8_lossy(&out.stderr).to_string())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn basis_problem(dir: &Path, feasible: bool) -> PathBuf {
    let z = ComplexMatrix::diag_real(&[1.0, 0.0]);
    let o = ComplexMatrix::diag_real(&[0.0, 1.0]);
    let p = if feasible {
        ConversionProblem::new(vec![z.clone(), o], vec![z.clone(), z], None)
    } else {
        ConversionProblem::new(vec![maximally_mixed(2), maximally_mixed(2)], vec![z, o], None)
    }
    .unwrap();
    write(dir, if feasible { "feasible.json" } else { "infeasible.json" }, &serde_json::to_value(ProblemDoc::from_problem(&p)).unwrap())
}

#[test]
fn qmaj_identity_pair_is_feasible() {
    let dir = TempDir::new().unwrap();
    let rho = write(dir.path(), "rho.json", &doc(random_state(4, 3), vec![2, 2]));
    let (code, report, _) = run(&["qmaj", "--rho", s(&rho), "--sigma", s(&rho)]);
    assert_eq!(code, 0);
    assert_eq!(report["verdict"], json!(true));
    let alpha = report["result"]["ensemble"]["alpha"].as_f64().unwrap();
    assert!((alpha - 1.0).abs() < 1e-6);
    assert!(report["wall_clock_seconds"].as_f64().is_some());
}

#[test]
fn qmaj_cannot_create_entanglement() {
    let dir = TempDir::new().unwrap();
    let rho = write(dir.path(), "rho.json", &doc(maximally_mixed(4), vec![2, 2]));
    let sigma = write(dir.path(), "sigma.json", &doc(max_entangled(2), vec![2, 2]));
    let (code, report, _) = run(&["qmaj", "--rho", s(&rho), "--sigma", s(&sigma)]);
    assert_eq!(code, 1);
    assert_eq!(report["status"], json!("infeasible"));
}

#[test]
fn thermo_major_example() {
    let (code, report, stderr) = run(&["thermo-major", "--p", "1,0", "--q", "0.5,0.5", "--gibbs", "0.5,0.5"]);
    assert_eq!(code, 0);
    assert_eq!(report["result"]["thermo_majorizes"], json!(true));
    assert!(stderr.starts_with("true"));
    let (code, _, _) = run(&["thermo-major", "--p", "0.5,0.5", "--q", "1,0", "--gibbs", "0.5,0.5"]);
    assert_eq!(code, 1);
}

#[test]
fn convert_reports_are_self_contained() {
    let dir = TempDir::new().unwrap();
    let problem = basis_problem(dir.path(), false);
    let out = dir.path().join("report.json");
    let (code, _, _) = run(&["convert", "--problem", s(&problem), "--out", s(&out)]);
    assert_eq!(code, 1);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report["result"]["witness"].is_object());

    let (code, again, _) = run(&["convert", "--problem", s(&out)]);
    assert_eq!(code, 1);
    assert_eq!(again["result"]["alpha"], report["result"]["alpha"]);

    let (code, verified, _) = run(&["verify", s(&out)]);
    assert_eq!(code, 0);
    assert_eq!(verified["reproduced"], json!(true));
}

#[test]
fn written_matrices_round_trip_bit_exact() {
    let dir = TempDir::new().unwrap();
    let problem = basis_problem(dir.path(), true);
    let (code, report, _) = run(&["convert", "--problem", s(&problem)]);
    assert_eq!(code, 0);
    let choi = &report["result"]["channel"]["choi"];
    let parsed: MatrixDoc = serde_json::from_value(choi.clone()).unwrap();
    assert_eq!(&serde_json::to_value(&parsed).unwrap(), choi);
}

#[test]
fn input_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let bad = write(dir.path(), "bad.json", &json!({"inputs": [{"matrix": [[1, 0], [0]]}], "targets": []}));
    let (code, report, _) = run(&["convert", "--problem", s(&bad)]);
    assert_eq!(code, 2);
    assert!(report["error"].as_str().unwrap().contains("problem"), "{report}");

    let missing = dir.path().join("nope.json");
    let (code, _, stderr) = run(&["min-entropy", "--state", s(&missing)]);
    assert_eq!(code, 2);
    assert!(stderr.contains("state"), "{stderr}");

    let ctx = write(dir.path(), "ctx.json", &json!({"h_in": {"matrix": [[0, 0], [0, 1]]}}));
    let rho = write(dir.path(), "rho.json", &doc(maximally_mixed(2), vec![2]));
    let (code, report, _) = run(&["thermal", "--rho", s(&rho), "--sigma", s(&rho), "--context", s(&ctx)]);
    assert_eq!(code, 2);
    assert!(report["error"].as_str().unwrap().contains("beta"));
}

#[test]
fn flags_override_context_values() {
    let dir = TempDir::new().unwrap();
    let ctx = write(dir.path(), "ctx.json", &json!({"h_in": {"matrix": [[0, 0], [0, 1]]}, "beta": 1.0}));
    let excited = write(dir.path(), "excited.json", &doc(ComplexMatrix::diag_real(&[0.0, 1.0]), vec![2]));
    let mixed = write(dir.path(), "mixed.json", &doc(ComplexMatrix::diag_real(&[0.6, 0.4]), vec![2]));
    // Near infinite temperature the excited state reaches (0.6, 0.4); a pure excited state is never
    // reachable from a mixed one.
    let (code, _, _) = run(&["thermal-incoherent", "--rho", s(&excited), "--sigma", s(&mixed), "--context", s(&ctx), "--beta", "0.01"]);
    assert_eq!(code, 0);
    let (code, report, _) = run(&["thermal-incoherent", "--rho", s(&mixed), "--sigma", s(&excited), "--context", s(&ctx), "--beta", "5"]);
    assert_eq!(code, 1);
    assert_eq!(report["options"]["beta"], json!(5.0));
}

#[test]
fn thermal_and_clock_commands() {
    let dir = TempDir::new().unwrap();
    let h = ComplexMatrix::diag_real(&[0.0, 1.0]);
    let ctx = write(dir.path(), "ctx.json", &json!({"h_in": doc(h.clone(), vec![2]), "beta": 1.0}));
    let plus = qmajor::quantum::pure_state(&[qmajor::linalg::ONE, qmajor::linalg::ONE]);
    let plus_f = write(dir.path(), "plus.json", &doc(plus, vec![2]));
    let mixed = write(dir.path(), "mixed.json", &doc(maximally_mixed(2), vec![2]));
    let (code, report, _) =
        run(&["thermal", "--rho", s(&plus_f), "--sigma", s(&mixed), "--context", s(&ctx), "--trials", "5", "--seed", "3"]);
    assert_eq!(code, 0);
    assert!(report["result"]["sampled_max_violation"].as_f64().unwrap() <= 1e-6);
    let (code, _, _) = run(&["thermal", "--rho", s(&mixed), "--sigma", s(&plus_f), "--context", s(&ctx)]);
    assert_eq!(code, 1);

    let hf = write(dir.path(), "h.json", &doc(h, vec![2]));
    let pi = std::f64::consts::PI.to_string();
    let (code, report, _) = run(&["clock", "--rho", s(&plus_f), "--hamiltonian", s(&hf), "--epsilon", &pi]);
    assert_eq!(code, 0);
    assert_eq!(report["result"]["clock"]["n"], json!(2));
    assert!((report["result"]["p_guess"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn min_entropy_and_guess() {
    let dir = TempDir::new().unwrap();
    let phi = write(dir.path(), "phi.json", &doc(max_entangled(2), vec![2, 2]));
    let (code, report, _) = run(&["min-entropy", "--state", s(&phi)]);
    assert_eq!(code, 0);
    assert!((report["result"]["h_min"].as_f64().unwrap() + 1.0).abs() < 1e-7);

    let ens = write(
        dir.path(),
        "ens.json",
        &json!({"states": [doc(ComplexMatrix::diag_real(&[1.0, 0.0]), vec![2]), doc(ComplexMatrix::diag_real(&[0.0, 1.0]), vec![2])]}),
    );
    let (code, report, _) = run(&["guess", "--ensemble", s(&ens)]);
    assert_eq!(code, 0);
    assert!((report["result"]["p_guess"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn asymmetry_and_covariant() {
    let dir = TempDir::new().unwrap();
    let h = doc(ComplexMatrix::diag_real(&[0.0, 1.0]), vec![2]);
    let rep = write(dir.path(), "rep.json", &json!({"factors": [{"kind": "one_parameter", "input": h}]}));
    let eta = write(dir.path(), "eta.json", &doc(random_state(2, 8), vec![2]));
    let rho = write(dir.path(), "rho.json", &doc(random_state(2, 9), vec![2]));
    let sigma = write(dir.path(), "sigma.json", &doc(maximally_mixed(2), vec![2]));
    let (code, report, _) = run(&["asymmetry", "--eta", s(&eta), "--rho", s(&rho), "--sigma", s(&sigma), "--rep", s(&rep)]);
    assert_eq!(code, 0);
    assert!(report["result"]["difference"].as_f64().unwrap() <= 1e-6);

    let problem = basis_problem(dir.path(), true);
    let (code, report, _) = run(&["covariant", "--problem", s(&problem), "--rep", s(&rep)]);
    assert_eq!(code, 0);
    assert_eq!(report["verdict"], json!(true));
}

#[test]
fn batch_orders_results_and_takes_worst_exit() {
    let dir = TempDir::new().unwrap();
    let empty = write(dir.path(), "empty.json", &json!({"jobs": []}));
    let (code, report, _) = run(&["batch", s(&empty)]);
    assert_eq!(code, 0);
    assert_eq!(report["jobs"], json!([]));

    let sub = dir.path().join("inputs");
    std::fs::create_dir(&sub).unwrap();
    basis_problem(&sub, true);
    basis_problem(&sub, false);
    let mixed = write(
        dir.path(),
        "mixed.json",
        &json!({"jobs": [
            {"command": "convert", "inputs": {"problem": "inputs/feasible.json"}},
            {"command": "convert", "inputs": {"problem": "inputs/infeasible.json"}},
            {"command": "thermo-major", "inputs": {"p": [1, 0], "q": [0.5, 0.5], "gibbs": [0.5, 0.5]}},
        ]}),
    );
    let (code, report, _) = run(&["batch", s(&mixed)]);
    assert_eq!(code, 1);
    let codes: Vec<_> = report["jobs"].as_array().unwrap().iter().map(|j| j["exit_code"].as_i64().unwrap()).collect();
    assert_eq!(codes, vec![0, 1, 0]);

    let mut jobs = Vec::new();
    for k in 0..10 {
        let rho = random_state(4, 100 + k);
        let sigma = kron(&qmajor::linalg::trace_second(&rho, 2, 2), &random_state(2, 200 + k));
        write(&sub, &format!("rho{k}.json"), &doc(rho, vec![2, 2]));
        write(&sub, &format!("sigma{k}.json"), &doc(sigma, vec![2, 2]));
        jobs.push(json!({"command": "qmaj", "inputs": {"rho": format!("inputs/rho{k}.json"), "sigma": format!("inputs/sigma{k}.json")}}));
    }
    let ten = write(dir.path(), "ten.json", &json!({ "jobs": jobs }));
    let out = bin().args(["batch", s(&ten)]).env("QMAJOR_THREADS", "2").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["jobs"].as_array().unwrap().len(), 10);
    for (k, j) in report["jobs"].as_array().unwrap().iter().enumerate() {
        assert_eq!(j["problem"]["rho"], serde_json::from_str::<Value>(&std::fs::read_to_string(sub.join(format!("rho{k}.json"))).unwrap()).unwrap());
    }
}

#[test]
fn thread_cap_is_validated() {
    let out = bin().args(["thermo-major", "--p", "1,0", "--q", "1,0", "--gibbs", "0.5,0.5"]).env("QMAJOR_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_single_suite() {
    let (code, report, stderr) = run(&["selftest", "--suite", "7"]);
    assert_eq!(code, 0);
    assert!(stderr.contains("[PASS]  7"), "{stderr}");
    assert_eq!(report["result"]["suites"][0]["passed"], json!(6));
}

#[test]
fn trace_streams_residuals() {
    let dir = TempDir::new().unwrap();
    let phi = write(dir.path(), "phi.json", &doc(max_entangled(2), vec![2, 2]));
    let (code, _, stderr) = run(&["min-entropy", "--state", s(&phi), "--trace"]);
    assert_eq!(code, 0);
    assert!(stderr.lines().filter(|l| l.split_whitespace().count() == 4).count() >= 3, "{stderr}");
}
