//! Runs the ten acceptance criteria and prints one line per criterion.

use fracmems::verify::{run_criterion, VerifyConfig, CRITERIA};

fn main() {
    let cfg = VerifyConfig::full();
    let mut failed = Vec::new();
    for id in 1..=CRITERIA {
        let report = run_criterion(id, &cfg);
        println!("{}", report.summary_line());
        if !report.passed() {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {CRITERIA} criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
