//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::process::ExitCode;
use std::time::Instant;

use qmajor::sdp::SdpSettings;
use qmajor::selftest::{run_all, SuiteResult};

const SEED: u64 = 20_240_917;
const DUALITY_BUDGET_S: f64 = 180.0;
const TOTAL_BUDGET_S: f64 = 600.0;

fn line(id: u32, ok: bool, name: &str, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id:>2}: {name} ({detail})");
}

fn main() -> ExitCode {
    let start = Instant::now();
    let results = run_all(SEED, &SdpSettings::default());
    let total = start.elapsed().as_secs_f64();

    let mut failures = 0;
    let mut report = |r: &SuiteResult, extra_ok: bool, extra: String| {
        let ok = r.ok && extra_ok;
        failures += (!ok) as usize;
        let mut detail = format!("{}/{} passed", r.passed, r.total);
        if r.flagged > 0 {
            detail.push_str(&format!(", {} flagged marginal", r.flagged));
        }
        if !r.detail.is_empty() {
            detail.push_str(&format!(", {}", r.detail));
        }
        detail.push_str(&extra);
        line(r.id, ok, r.name, &detail);
    };

    let mut extras = Vec::new();
    for r in &results {
        match r.id {
            1 => report(r, r.seconds < DUALITY_BUDGET_S, format!(", {:.1}s", r.seconds)),
            2..=13 => report(r, true, format!(", {:.1}s", r.seconds)),
            _ => extras.push(r),
        }
    }
    let ok14 = total < TOTAL_BUDGET_S;
    failures += (!ok14) as usize;
    line(14, ok14, "full selftest wall clock < 600 s", &format!("{total:.1}s"));

    for r in extras {
        let tag = if r.ok { "PASS" } else { "FAIL" };
        failures += (!r.ok) as usize;
        println!("[{tag}] extra {:>2}: {} ({}/{} passed{}{})", r.id, r.name, r.passed, r.total,
            if r.detail.is_empty() { "" } else { ", " }, r.detail);
    }

    if failures == 0 {
        println!("acceptance: all checks passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} check(s) failed");
        ExitCode::FAILURE
    }
}
