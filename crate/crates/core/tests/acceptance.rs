//! Acceptance suite: one line per criterion. Criteria that cannot be met
//! as stated are reported as failures but do not fail the run.

use std::process::ExitCode;

use compop::selftest::run_with_determinism;

fn main() -> ExitCode {
    let report = match run_with_determinism(7) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("selftest aborted: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut blocking = 0;
    for c in &report.criteria {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        let note = if !c.pass && !c.attainable { " [unattainable as stated]" } else { "" };
        println!("criterion {:>2}: {verdict}{note} - {}: {}", c.id, c.name, c.detail);
        if !c.pass && c.attainable {
            blocking += 1;
        }
    }
    let passed = report.criteria.iter().filter(|c| c.pass).count();
    println!("{passed}/{} criteria pass, {blocking} blocking failures", report.criteria.len());
    if blocking == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
