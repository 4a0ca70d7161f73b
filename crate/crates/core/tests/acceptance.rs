//! Full-size acceptance run: every criterion at its stated tolerance.
//! Prints one line per criterion and fails if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use polymer_lab::experiments::{verify_all, Profile, DEFAULT_SEED};

fn main() -> ExitCode {
    let out = tempfile::tempdir().expect("temporary output directory");
    let start = Instant::now();
    println!("acceptance: full profile, seed {DEFAULT_SEED}");
    let outcome = match verify_all(Profile::Full, DEFAULT_SEED, Some(out.path()), |c| println!("{}", c.line())) {
        Ok(o) => o,
        Err(e) => {
            println!("acceptance: error: {e}");
            return ExitCode::FAILURE;
        }
    };
    for r in &outcome.reports {
        println!("  {} finished in {:.1} s", r.experiment, r.wall_time.as_secs_f64());
    }
    let summary = out.path().join("summary.txt");
    assert!(summary.is_file(), "summary.txt not written");
    for r in &outcome.reports {
        assert!(out.path().join(format!("{}.csv", r.experiment)).is_file());
    }
    let failed: Vec<u8> = outcome.criteria.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    println!(
        "acceptance: {}/{} criteria passed in {:.0} s",
        outcome.criteria.len() - failed.len(),
        outcome.criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if outcome.criteria.len() != 10 || !failed.is_empty() {
        println!("acceptance: FAIL (criteria {failed:?})");
        return ExitCode::FAILURE;
    }
    if !outcome.passed() {
        println!("acceptance: FAIL (a checked report row outside the criteria failed)");
        return ExitCode::FAILURE;
    }
    println!("acceptance: PASS");
    ExitCode::SUCCESS
}
