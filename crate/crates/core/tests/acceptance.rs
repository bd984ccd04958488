//! The nine acceptance criteria, one pass/fail line each.
//!
//! Runs without the libtest harness so the report is always printed. Worker
//! count follows `QSAMPLE_THREADS` (default: all cores).

use std::process::ExitCode;

use qsample::sim::Runner;
use qsample::validation::{run_check, ValidationConfig, CHECK_IDS};

fn main() -> ExitCode {
    let config = ValidationConfig::new(Runner::from_env().expect("worker count"));
    let mut failed = Vec::new();
    for id in CHECK_IDS {
        let report = run_check(id, &config);
        println!("{report}");
        for d in &report.details {
            println!("    {d}");
        }
        if !report.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", CHECK_IDS.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
