//! Regression suite: closed forms against quadrature, and in the full level
//! quadrature against Monte Carlo and closed-form model probabilities
//! against reversible-jump frequencies.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::density::Density;
use crate::diffeo::Diffeomorphism;
use crate::domain::BoxSupport;
use crate::error::Result;
use crate::forward::{graph_restrict, ForwardModel};
use crate::hierarchical::{self, HierConfig};
use crate::oracle::{integrate_1d, mc_integrate_with, quad_integrate_with, QuadOptions};
use crate::transdim::gaussian::{self, GaussianExampleConfig, BF_CONSTANTS};
use crate::transdim::uniform::{self, UniformExampleConfig, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub level: Level,
    pub seed: u64,
    pub mc_points: usize,
    pub chain_steps: usize,
    /// Multiplies the first constant of the Gaussian-example Bayes factor.
    /// Only for exercising the failure path.
    pub corrupt_constant: Option<f64>,
}

impl VerifyOptions {
    pub fn new(level: Level) -> Self {
        Self {
            level,
            seed: 2024,
            mc_points: 1_000_000,
            chain_steps: 1_000_000,
            corrupt_constant: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// `|computed − reference| ≤ tol · |reference|`.
    Relative,
    /// `|computed − reference| ≤ tol · standard error`.
    Sigmas,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub route: String,
    pub reference: f64,
    pub computed: f64,
    pub kind: CheckKind,
    pub tolerance: f64,
    /// Standard error or error bound entering a `Sigmas` check.
    pub spread: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn relative(name: &str, route: &str, reference: f64, computed: f64, tol: f64) -> Self {
        let passed = (computed - reference).abs() <= tol * reference.abs() && computed.is_finite();
        Self {
            name: name.into(),
            route: route.into(),
            reference,
            computed,
            kind: CheckKind::Relative,
            tolerance: tol,
            spread: 0.0,
            passed,
        }
    }

    fn sigmas(name: &str, route: &str, reference: f64, computed: f64, spread: f64, n: f64) -> Self {
        let passed = (computed - reference).abs() <= n * spread && computed.is_finite();
        Self {
            name: name.into(),
            route: route.into(),
            reference,
            computed,
            kind: CheckKind::Sigmas,
            tolerance: n,
            spread,
            passed,
        }
    }
}

/// Quadrature and Monte Carlo must agree within this many combined
/// standard errors. With two dozen comparisons a 3σ band would fail by
/// chance a few percent of the time.
pub const MC_SIGMAS: f64 = 4.0;
/// Chain frequencies are judged at 3 batch-means standard errors.
pub const CHAIN_SIGMAS: f64 = 3.0;

type Integrand = Box<dyn Fn(&[f64]) -> f64>;

/// One named integral with a closed-form value, a quadrature route and a
/// Monte Carlo route.
struct Named {
    name: &'static str,
    reference: f64,
    tol: f64,
    quad: Box<dyn Fn() -> f64>,
    f: Integrand,
    sampler: Density,
}

fn named(
    name: &'static str,
    reference: f64,
    tol: f64,
    quad: impl Fn() -> f64 + 'static,
    f: impl Fn(&[f64]) -> f64 + 'static,
    sampler: Density,
) -> Named {
    Named {
        name,
        reference,
        tol,
        quad: Box::new(quad),
        f: Box::new(f),
        sampler,
    }
}

fn uniform_on(bounds: &[(f64, f64)]) -> Density {
    Density::uniform_box(BoxSupport::from_bounds(bounds).expect("finite bounds")).expect("finite box")
}

fn gauss(mean: Vec<f64>, sigma: f64) -> Density {
    Density::gaussian_iid(mean, sigma).expect("positive sigma")
}

fn npdf(x: f64, s: f64) -> f64 {
    (-0.5 * (x / s) * (x / s)).exp() / ((2.0 * PI).sqrt() * s)
}

fn quad_box(f: impl Fn(&[f64]) -> f64, bounds: &[(f64, f64)], opts: QuadOptions) -> f64 {
    let domain = BoxSupport::from_bounds(bounds).expect("valid bounds");
    quad_integrate_with(f, &domain, &opts).value
}

fn integrals() -> Result<Vec<Named>> {
    let mut out = Vec::new();
    let inf = f64::INFINITY;

    out.push(named(
        "linear-unit-interval",
        0.5,
        1e-12,
        || integrate_1d(|x| x, 0.0, 1.0, &QuadOptions::with_rel_tol(1e-12)).value,
        |x| x[0],
        uniform_on(&[(0.0, 1.0)]),
    ));
    out.push(named(
        "gaussian-one-block-kernel",
        (2.0 * PI).sqrt() / 3.0,
        1e-10,
        move || integrate_1d(|s| (-4.5 * s * s).exp(), -inf, inf, &QuadOptions::with_rel_tol(1e-12)).value,
        |x| (-4.5 * x[0] * x[0]).exp(),
        gauss(vec![0.0], 0.5),
    ));

    for (name1, name2, sd, ss) in [
        ("gaussian-evidence-k1-unit", "gaussian-evidence-k2-unit", 1.0, 1.0),
        (
            "gaussian-evidence-k1-narrow-noise",
            "gaussian-evidence-k2-narrow-noise",
            0.5,
            2.0,
        ),
        (
            "gaussian-evidence-k1-wide-noise",
            "gaussian-evidence-k2-wide-noise",
            3.0,
            0.4,
        ),
    ] {
        let cfg = GaussianExampleConfig::new(sd, ss)?;
        let p = cfg.problem()?;
        let post1 = p.model_posterior(1)?;
        let post2 = p.model_posterior(2)?;
        let (q1, q2) = (post1.clone(), post2.clone());
        // Widest posterior standard deviation, so the importance weights
        // have finite variance.
        let sampler_scale = 1.0 / ((3.0 - 5.0f64.sqrt()) / (sd * sd) + 1.0 / (ss * ss)).sqrt();
        out.push(named(
            name1,
            cfg.evidence_k1(),
            1e-8,
            move || q1.integrate(1e-12).value,
            move |x| post1.value(x),
            gauss(vec![0.0], sampler_scale),
        ));
        out.push(named(
            name2,
            cfg.evidence_k2(),
            1e-8,
            move || q2.integrate(1e-12).value,
            move |x| post2.value(x),
            gauss(vec![0.0, 0.0], sampler_scale),
        ));
    }

    for (name, cfg) in [
        (
            "uniform-literal-support-area-nested",
            UniformExampleConfig::nested_data(),
        ),
        ("uniform-literal-support-area-default", UniformExampleConfig::default()),
    ] {
        let c = cfg.clone();
        let bbox = vec![
            (cfg.s1_range(Variant::Literal).lo, cfg.s1_range(Variant::Literal).hi),
            (cfg.s2_range(Variant::Literal).lo, cfg.s2_range(Variant::Literal).hi),
        ];
        let c2 = cfg.clone();
        out.push(named(
            name,
            cfg.l2_area(Variant::Literal),
            1e-10,
            move || c.quadrature_area_literal(),
            move |x| f64::from(u8::from(c2.in_l2(Variant::Literal, x[0], x[1]))),
            uniform_on(&bbox),
        ));
    }
    {
        let cfg = UniformExampleConfig::nested_data();
        let c = cfg.clone();
        let post = cfg.problem()?.model_posterior(2)?;
        let scale = cfg.prior_interval().width().powi(2) * cfg.data_area();
        let r1 = cfg.s1_range(Variant::Correct);
        let r2 = cfg.s2_range(Variant::Correct);
        out.push(named(
            "uniform-graph-support-area-nested",
            cfg.l2_area(Variant::Correct),
            1e-10,
            move || c.quadrature_area_correct().unwrap_or(f64::NAN),
            move |x| post.value(x) * scale,
            uniform_on(&[(r1.lo, r1.hi), (r2.lo, r2.hi)]),
        ));
        let c = cfg.clone();
        let k1 = cfg.k1_support().expect("overlapping data");
        let c3 = cfg.clone();
        out.push(named(
            "uniform-one-block-support-length",
            k1.width(),
            1e-10,
            move || c.quadrature_length_k1(),
            move |x| {
                let l2 = 2.0 * c3.length;
                let d = l2 * x[0];
                f64::from(u8::from(c3.d1[0] < d && d < c3.d1[1] && c3.d2[0] < d && d < c3.d2[1]))
            },
            uniform_on(&[(0.5, 0.6)]),
        ));
    }

    let sym = HierConfig::default();
    for (name, l, d) in [
        ("hierarchical-cell-1-1", 1.0, 1.0),
        ("hierarchical-cell-2-1", 2.0, 1.0),
        ("hierarchical-cell-1-2", 1.0, 2.0),
        ("hierarchical-cell-2-2", 2.0, 2.0),
    ] {
        let reference = 0.25 / (2.0 * PI * l * d) * (2.0 * PI / (1.0 / (l * l) + 1.0 / (d * d))).sqrt();
        let (c1, c2) = (sym.clone(), sym.clone());
        out.push(named(
            name,
            reference,
            1e-8,
            move || hierarchical::cell_quadrature(&c1, l, d, 1e-12),
            move |x| hierarchical::posterior_unnormalized(&c2, x[0], l, d),
            gauss(vec![0.0], 1.0),
        ));
    }
    {
        let cfg = HierConfig::symmetric(0.3, 3.0);
        let reference = 0.7 * 0.3 / (2.0 * PI * 2.0) * (2.0 * PI / (9.0 / 4.0 + 1.0)).sqrt();
        let (c1, c2) = (cfg.clone(), cfg);
        out.push(named(
            "hierarchical-cell-steep-forward",
            reference,
            1e-8,
            move || hierarchical::cell_quadrature(&c1, 2.0, 1.0, 1e-12),
            move |x| hierarchical::posterior_unnormalized(&c2, x[0], 2.0, 1.0),
            gauss(vec![0.0], 0.6),
        ));
    }

    {
        // Data-prior evidence at the optimal noise level for d = 5.
        let lambda = 24.0f64.sqrt();
        let reference = npdf(5.0, 5.0);
        let data = Density::gaussian_iid(vec![5.0], lambda)?;
        let prior = Density::gaussian_iid(vec![0.0], 1.0)?;
        let post = graph_restrict(&data, &prior, &ForwardModel::identity(1)?)?;
        let p2 = post.clone();
        out.push(named(
            "misfit-evidence-optimal-noise",
            reference,
            1e-10,
            move || post.integrate(1e-12).value,
            move |x| p2.value(x),
            gauss(vec![0.0], 1.0),
        ));
    }

    {
        let v = uniform_on(&[(1.0, 5.0)]);
        let s = v.pushforward(&Diffeomorphism::reciprocal(1))?;
        let s2 = s.clone();
        out.push(named(
            "reciprocal-pushforward-mass",
            1.0,
            1e-10,
            move || s.integrate(1e-12).value,
            move |x| s2.value(x),
            uniform_on(&[(0.2, 1.0)]),
        ));
    }
    out.push(named(
        "inverse-square-jacobian",
        0.8,
        1e-12,
        || integrate_1d(|v| 1.0 / (v * v), 1.0, 5.0, &QuadOptions::with_rel_tol(1e-13)).value,
        |x| 1.0 / (x[0] * x[0]),
        uniform_on(&[(1.0, 5.0)]),
    ));
    out.push(named(
        "gaussian-on-diagonal",
        1.0 / (2.0 * PI.sqrt()),
        1e-10,
        move || {
            integrate_1d(
                |t| (-t * t).exp() / (2.0 * PI),
                -inf,
                inf,
                &QuadOptions::with_rel_tol(1e-12),
            )
            .value
        },
        |x| (-x[0] * x[0]).exp() / (2.0 * PI),
        gauss(vec![0.0], 0.8),
    ));
    out.push(named(
        "correlated-gaussian-mass",
        2.0 * PI / (1.0f64 - 0.25).sqrt(),
        1e-9,
        || {
            let opts = QuadOptions::with_rel_tol(1e-12).infinite_scales(vec![(0.0, 1.0), (0.0, 1.0)]);
            quad_box(
                |x| (-0.5 * (x[0] * x[0] - x[0] * x[1] + x[1] * x[1])).exp(),
                &[(-f64::INFINITY, f64::INFINITY), (-f64::INFINITY, f64::INFINITY)],
                opts,
            )
        },
        |x| (-(x[0] * x[0] - x[0] * x[1] + x[1] * x[1]) * 0.5).exp(),
        gauss(vec![0.0, 0.0], 1.2),
    ));
    {
        let cfg = GaussianExampleConfig::default();
        let p = cfg.problem()?;
        let reference = 1.0 / (2.0 * PI) * (2.0 * PI / 8.0).sqrt();
        out.push(named(
            "likelihood-evidence-one-block",
            reference,
            1e-8,
            move || p.likelihood_evidence(1, 1e-12).map(|q| q.value).unwrap_or(f64::NAN),
            |x| npdf(2.0 * x[0], 1.0) * npdf(2.0 * x[0], 1.0),
            gauss(vec![0.0], 0.5),
        ));
    }
    Ok(out)
}

/// Closed-form Bayes factors against ratios of quadrature evidences.
fn bayes_factor_checks(corrupt: Option<f64>) -> Result<Vec<CheckOutcome>> {
    let mut c = BF_CONSTANTS;
    if let Some(f) = corrupt {
        c[0] *= f;
    }
    let mut out = Vec::new();
    for (sd, ss) in [(1.0, 1.0), (2.0, 1.0), (0.3, 2.5), (2.0f64.sqrt(), 1.0)] {
        let cfg = GaussianExampleConfig::new(sd, ss)?;
        let p = cfg.problem()?;
        let q = p.bayes_factor(2, 1, 1e-12)?;
        out.push(CheckOutcome::relative(
            &format!("gaussian-bayes-factor-{sd:.3}-{ss:.3}"),
            "closed-form/quadrature",
            q,
            gaussian::bayes_factor_with(sd, ss, c),
            gaussian::QUAD_AGREEMENT,
        ));
    }
    for (name, cfg) in [
        ("uniform-bayes-factor-default", UniformExampleConfig::default()),
        ("uniform-bayes-factor-nested", UniformExampleConfig::nested_data()),
    ] {
        for v in [Variant::Literal, Variant::Correct] {
            let (e1, e2) = cfg.quadrature_evidences(v)?;
            let tag = match v {
                Variant::Literal => "literal",
                Variant::Correct => "graph",
            };
            out.push(CheckOutcome::relative(
                &format!("{name}-{tag}"),
                "closed-form/quadrature",
                e2 / e1,
                cfg.analytic_bayes_factor(v).unwrap_or(f64::NAN),
                uniform::QUAD_AGREEMENT,
            ));
        }
    }
    Ok(out)
}

fn chain_checks(opts: &VerifyOptions) -> Result<Vec<CheckOutcome>> {
    let g = GaussianExampleConfig::default();
    let b = g.bayes_factor();
    let s = gaussian::rj_summary(&g, opts.chain_steps, opts.seed)?;
    let f = s.frequency(2).expect("k = 2 registered");
    let u = UniformExampleConfig::default();
    let bu = u.analytic_bayes_factor(Variant::Correct).unwrap_or(f64::NAN);
    let su = uniform::rj_summary(&u, opts.chain_steps, opts.seed ^ 0x5555)?;
    let fu = su.frequency(2).expect("k = 2 registered");
    Ok(vec![
        CheckOutcome::sigmas(
            "rj-gaussian-model-two",
            "closed-form/reversible-jump",
            b / (1.0 + b),
            f.frequency,
            f.standard_error,
            CHAIN_SIGMAS,
        ),
        CheckOutcome::sigmas(
            "rj-uniform-model-two",
            "closed-form/reversible-jump",
            bu / (1.0 + bu),
            fu.frequency,
            fu.standard_error,
            CHAIN_SIGMAS,
        ),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub options: VerifyOptions,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Number of named integrals in the suite.
pub fn integral_count() -> usize {
    integrals().map(|v| v.len()).unwrap_or(0)
}

pub fn run_suite(opts: &VerifyOptions) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    for (i, item) in integrals()?.into_iter().enumerate() {
        let q = (item.quad)();
        checks.push(CheckOutcome::relative(
            item.name,
            "closed-form/quadrature",
            item.reference,
            q,
            item.tol,
        ));
        if opts.level == Level::Full {
            let mc = mc_integrate_with(&item.f, &item.sampler, opts.mc_points, opts.seed.wrapping_add(i as u64))?;
            checks.push(CheckOutcome::sigmas(
                item.name,
                "quadrature/monte-carlo",
                q,
                mc.value,
                mc.error + (q * item.tol).abs(),
                MC_SIGMAS,
            ));
        }
    }
    checks.extend(bayes_factor_checks(opts.corrupt_constant)?);
    if opts.level == Level::Full {
        checks.extend(chain_checks(opts)?);
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport {
        options: *opts,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_least_twenty_integrals() {
        assert!(integral_count() >= 20, "{}", integral_count());
    }

    #[test]
    fn fast_suite_passes() {
        let r = run_suite(&VerifyOptions::new(Level::Fast)).unwrap();
        let bad: Vec<_> = r.failures().collect();
        assert!(bad.is_empty(), "{bad:#?}");
    }

    #[test]
    fn corrupted_constant_is_caught() {
        let opts = VerifyOptions {
            corrupt_constant: Some(1.001),
            ..VerifyOptions::new(Level::Fast)
        };
        let r = run_suite(&opts).unwrap();
        assert!(!r.passed);
        assert!(r.failures().all(|c| c.name.starts_with("gaussian-bayes-factor")));
    }
}
