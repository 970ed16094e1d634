//! Acceptance criteria 1–12, one status line each.
//!
//! Criteria 5 and 7 cannot be met as stated (see the README). The main
//! test asserts what is actually derivable for them; the ignored
//! `literal_*` tests assert the stated targets and fail.

use std::io::Write;

use specband_cli::verify::{compare_dirs, criterion, run_suite, Criterion, Lab, Suite};

/// Goes straight to the process stderr so the lines survive output capture.
fn emit(line: &str) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn f(c: &Criterion, key: &str) -> f64 {
    c.measured[key].as_f64().unwrap_or(f64::NAN)
}

#[test]
fn acceptance_criteria() {
    let mut lab = Lab::new();
    let mut unexpected = Vec::new();
    for id in 1..=11 {
        let c = criterion(id, &mut lab).expect("criterion runs");
        emit(&c.line());
        match id {
            5 => {
                // A = B = 1 holds; the Gram of 32 points on a 31-mode band is singular.
                let frame_ok = c.measured["frame_holds"] == true;
                let singular = f(&c, "gram_lambda_min").abs() < 1e-8;
                if !(frame_ok && singular) {
                    unexpected.push(id);
                }
            }
            7 => {
                // Strict decrease holds; the 10x reduction does not at L = 64.
                let strict = c.measured["strictly_decreasing"] == true;
                if !(strict && f(&c, "final_over_initial") > 0.1) {
                    unexpected.push(id);
                }
            }
            _ => {
                if !c.passed {
                    unexpected.push(id);
                }
            }
        }
    }

    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_suite(Suite::All, a.path()).unwrap();
    run_suite(Suite::All, b.path()).unwrap();
    let diff = compare_dirs(a.path(), b.path()).unwrap();
    let files = std::fs::read_dir(a.path()).unwrap().count();
    let ok = diff.is_empty() && files >= 2;
    emit(&format!(
        "[{}] criterion 12 (determinism) byte-identical verify reports: {} files compared, {} differ (excluding metadata.json)",
        if ok { "PASS" } else { "FAIL" },
        files - 1,
        diff.len()
    ));
    if !ok {
        unexpected.push(12);
    }
    assert!(unexpected.is_empty(), "criteria with unexpected outcomes: {unexpected:?}");
}

#[test]
#[ignore = "unattainable: a 32x32 Gram on a 31-mode band has rank 31"]
fn literal_criterion_5() {
    let c = criterion(5, &mut Lab::new()).unwrap();
    emit(&c.line());
    assert!(c.passed);
}

#[test]
#[ignore = "unattainable at L = 64: the far-field distance decays like 1/d"]
fn literal_criterion_7() {
    let c = criterion(7, &mut Lab::new()).unwrap();
    emit(&c.line());
    assert!(c.passed);
}
