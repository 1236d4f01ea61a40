//! One line per acceptance criterion; exits non-zero if any fails.

use su3ff_cli::verify::{run, VerifyOptions};

fn main() {
    let records = run(&VerifyOptions::default(), |r| {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {} {status}: {} ({:.2} s)",
            r.id, r.title, r.elapsed_s
        );
        for c in r.checks.iter().filter(|c| !c.passed) {
            println!(
                "    failed check: {} = {:e} (tol {:e})",
                c.label, c.value, c.tol
            );
        }
    });
    let failed: Vec<usize> = records.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    assert_eq!(records.len(), 9);
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", records.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
