//! Runs every acceptance criterion, printing one verdict line each, and
//! fails if any criterion fails.

use std::process::ExitCode;

use sradcat::verify::{self, VerifyOptions};

fn main() -> ExitCode {
    let report = match verify::run(VerifyOptions::default()) {
        Ok(r) => r,
        Err(e) => {
            println!("acceptance suite could not run: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    print!("{}", report.render());
    if report.all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
