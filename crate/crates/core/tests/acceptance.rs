//! Runs without the libtest harness so every criterion line is printed.

use std::process::ExitCode;

use hadamard_core::acceptance::{run_criterion, AcceptanceConfig, Scale};

fn main() -> ExitCode {
    let cfg = AcceptanceConfig::new(Scale::Full);
    let mut failed = Vec::new();
    for id in 1..=9 {
        let report = run_criterion(id, &cfg);
        println!("{report}");
        if !report.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
