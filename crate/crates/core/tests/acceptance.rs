//! Runs the numbered acceptance criteria at their stated tolerances and time
//! budgets, printing one PASS/FAIL line per criterion. Uses its own `main`
//! so the table is shown without `--nocapture`.

use std::process::ExitCode;

use bundletc::verify::suites::{run_criterion, ACCEPTANCE_CRITERIA};

const SEED: u64 = 7;

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for id in 1..=ACCEPTANCE_CRITERIA {
        let r = run_criterion(id, SEED).expect("criterion exists");
        println!("{}", r.summary());
        if !r.passed() {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: {ACCEPTANCE_CRITERIA}/{ACCEPTANCE_CRITERIA} criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
