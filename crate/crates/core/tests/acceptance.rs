//! Acceptance suite: runs the nine end-to-end criteria at their stated
//! tolerances and time budgets, printing one PASS/FAIL line per criterion.
//! Built without the libtest harness so the lines are always shown.

use std::process::ExitCode;

use hyperrv::checks;

fn main() -> ExitCode {
    let results = checks::run_suite(&[1, 2, 3, 4, 5, 6, 7, 8, 9], 7);
    println!("\nacceptance criteria");
    for c in &results {
        println!("{}", c.line());
    }
    let failed: Vec<usize> = results.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    println!("{} of {} criteria passed\n", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {failed:?}");
        ExitCode::FAILURE
    }
}
