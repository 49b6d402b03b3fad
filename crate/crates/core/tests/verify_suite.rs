//! The full regression suite, including Monte Carlo and chain routes.

use bpl_core::verify::{run_suite, CheckKind, Level, VerifyOptions};

#[test]
fn full_suite_passes() {
    let r = run_suite(&VerifyOptions::new(Level::Full)).unwrap();
    let bad: Vec<_> = r.failures().collect();
    assert!(bad.is_empty(), "{bad:#?}");
    assert!(r.checks.iter().filter(|c| c.route == "quadrature/monte-carlo").count() >= 20);
    assert!(r
        .checks
        .iter()
        .any(|c| c.kind == CheckKind::Sigmas && c.name.starts_with("rj-")));
}

#[test]
fn full_suite_catches_corrupted_constant() {
    let opts = VerifyOptions {
        corrupt_constant: Some(1.0 + 1e-3),
        ..VerifyOptions::new(Level::Full)
    };
    let r = run_suite(&opts).unwrap();
    assert!(!r.passed);
}
