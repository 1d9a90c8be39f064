//! Runs the quick self-check suite and prints one line per check.

use erlangs::harness::{run_validation, ValidationOptions, ValidationReport};

pub fn run() -> ValidationReport {
    let report = run_validation(&ValidationOptions::quick());
    for c in &report.checks {
        println!("[{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
    }
    report
}

fn main() {
    if !run().passed {
        std::process::exit(1);
    }
}
