//! Runs every acceptance criterion at full size, one after another so the
//! timing checks do not compete with each other.

use epst::verify::{run_criterion, Mode, CRITERIA};

#[test]
fn acceptance_criteria() {
    let mut failed = Vec::new();
    for id in CRITERIA {
        let report = run_criterion(id, Mode::Full).expect("criterion runs");
        println!("{report}");
        if !report.passed() {
            failed.push(id);
        }
    }
    println!(
        "{} of {} criteria passed",
        CRITERIA.len() - failed.len(),
        CRITERIA.len()
    );
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
