use std::process::ExitCode;

use collector::Execution;
use collector_verify::{run, Scope};

fn main() -> ExitCode {
    let report = run(Scope::Full, Execution::default(), true);
    println!("acceptance: {} passed, {} failed", report.passed(), report.failed());
    if report.failed() == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
