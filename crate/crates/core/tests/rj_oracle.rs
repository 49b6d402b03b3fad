//! Reversible-jump frequencies against closed-form model probabilities.

use bpl_core::transdim::gaussian::{self, GaussianExampleConfig};
use bpl_core::transdim::uniform::{self, UniformExampleConfig, Variant};

const STEPS: usize = 1_000_000;

fn within_three_se(freq: f64, se: f64, want: f64) -> bool {
    (freq - want).abs() <= 3.0 * se
}

#[test]
fn gaussian_chain_matches_closed_form() {
    let cfg = GaussianExampleConfig::default();
    let b = cfg.bayes_factor();
    let want = b / (1.0 + b);
    let s = gaussian::rj_summary(&cfg, STEPS, 11).unwrap();
    let f = s.frequency(2).unwrap();
    assert!(within_three_se(f.frequency, f.standard_error, want), "{f:?} vs {want}");
}

#[test]
fn uniform_chain_matches_graph_support() {
    let cfg = UniformExampleConfig::default();
    let b = cfg.analytic_bayes_factor(Variant::Correct).unwrap();
    let want = b / (1.0 + b);
    let s = uniform::rj_summary(&cfg, STEPS, 12).unwrap();
    let f = s.frequency(2).unwrap();
    assert!(within_three_se(f.frequency, f.standard_error, want), "{f:?} vs {want}");
}

#[test]
fn nested_data_chain_follows_graph_not_literal() {
    let cfg = UniformExampleConfig::nested_data();
    let correct = cfg.analytic_bayes_factor(Variant::Correct).unwrap();
    let literal = cfg.analytic_bayes_factor(Variant::Literal).unwrap();
    let s = uniform::rj_summary(&cfg, STEPS, 13).unwrap();
    let f = s.frequency(2).unwrap();
    assert!(
        within_three_se(f.frequency, f.standard_error, correct / (1.0 + correct)),
        "{f:?}"
    );
    assert!(
        !within_three_se(f.frequency, f.standard_error, literal / (1.0 + literal)),
        "{f:?}"
    );
}
