//! Two rays through one or two slowness blocks, with uniform priors on the
//! slowness box and on a data box `𝓓 = I1 × I2`.
//!
//! `k = 1`: `d = (2Ls, 2Ls)`. `k = 2`: `d = (L(s1 + s2), 2L s1)`.
//!
//! The commonly quoted support of the `k = 2` posterior bounds `2L s1` by the
//! first data interval although `d2 = 2L s1` belongs to the second. Both
//! readings are carried: [`Variant::Literal`] uses `I1` for that bound and
//! [`Variant::Correct`] uses `I2`, which is what the graph of the forward
//! relation gives. When `I1 = I2` they coincide.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{Evidence, EvidenceRatio, EvidenceReport, ModelSpec, RjSummary, TransDimProblem};
use crate::density::Density;
use crate::domain::{BoxSupport, Interval};
use crate::error::{Error, Result};
use crate::forward::ForwardModel;
use crate::oracle::{integrate_1d, mc_integrate, IntegralResult, Method, QuadOptions};
use crate::units::{Quantity, UnitSignature};

/// Relative agreement required between analytic and quadrature evidences.
pub const QUAD_AGREEMENT: f64 = 1e-6;
/// Monte Carlo estimates must fall within this many standard errors.
pub const MC_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Literal,
    Correct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UniformExampleConfig {
    /// Ray length in meters.
    pub length: f64,
    /// Slowness bounds in s/m.
    pub s_min: f64,
    pub s_max: f64,
    /// Data intervals in seconds.
    pub d1: [f64; 2],
    pub d2: [f64; 2],
}

impl Default for UniformExampleConfig {
    fn default() -> Self {
        Self {
            length: 1.0,
            s_min: 0.0,
            s_max: 10.0,
            d1: [1.0, 1.2],
            d2: [1.1, 1.3],
        }
    }
}

fn interval(b: [f64; 2]) -> Result<Interval> {
    Interval::new(b[0], b[1])
}

fn covers(outer: &Interval, inner: &Interval) -> bool {
    outer.lo <= inner.lo && inner.hi <= outer.hi
}

impl UniformExampleConfig {
    /// The data box where the second interval sits inside the first, so
    /// that the two readings of the `k = 2` support differ.
    pub fn nested_data() -> Self {
        Self {
            d2: [1.05, 1.15],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::InvalidParameter(format!("ray length {}", self.length)));
        }
        Interval::new(self.s_min, self.s_max)?;
        if !(self.s_min.is_finite() && self.s_max.is_finite()) {
            return Err(Error::InvalidParameter("slowness bounds must be finite".into()));
        }
        let i1 = interval(self.d1)?;
        let i2 = interval(self.d2)?;
        if !(i1.is_finite() && i2.is_finite()) {
            return Err(Error::InvalidParameter("data intervals must be finite".into()));
        }
        Ok(())
    }

    pub fn with_slowness_range(&self, s_min: f64, s_max: f64) -> Self {
        Self {
            s_min,
            s_max,
            ..self.clone()
        }
    }

    /// Slowness expressed in a unit `c` times smaller: the numbers scale by
    /// `c` and the forward coefficient by `1/c`.
    pub fn rescaled_slowness(&self, c: f64) -> Self {
        Self {
            length: self.length / c,
            s_min: self.s_min * c,
            s_max: self.s_max * c,
            ..self.clone()
        }
    }

    pub fn prior_interval(&self) -> Interval {
        Interval {
            lo: self.s_min,
            hi: self.s_max,
        }
    }

    fn i1(&self) -> Interval {
        Interval {
            lo: self.d1[0],
            hi: self.d1[1],
        }
    }

    fn i2(&self) -> Interval {
        Interval {
            lo: self.d2[0],
            hi: self.d2[1],
        }
    }

    pub fn data_area(&self) -> f64 {
        self.i1().width() * self.i2().width()
    }

    /// `[max(d_min), min(d_max)]`, the data values both rays can share.
    pub fn d_hat(&self) -> Option<Interval> {
        self.i1().intersect(&self.i2())
    }

    /// Support of the `k = 1` likelihood in `s`.
    pub fn k1_support(&self) -> Option<Interval> {
        let l2 = 2.0 * self.length;
        self.d_hat().map(|d| Interval {
            lo: d.lo / l2,
            hi: d.hi / l2,
        })
    }

    fn k1_length(&self) -> f64 {
        self.k1_support().map_or(0.0, |i| i.width())
    }

    /// Range of `s1` on the `k = 2` likelihood support.
    pub fn s1_range(&self, v: Variant) -> Interval {
        let src = match v {
            Variant::Literal => self.i1(),
            Variant::Correct => self.i2(),
        };
        Interval {
            lo: src.lo / (2.0 * self.length),
            hi: src.hi / (2.0 * self.length),
        }
    }

    /// Range of `s1 + s2` on the `k = 2` likelihood support.
    pub fn sum_range(&self) -> Interval {
        Interval {
            lo: self.d1[0] / self.length,
            hi: self.d1[1] / self.length,
        }
    }

    pub fn s2_range(&self, v: Variant) -> Interval {
        let s1 = self.s1_range(v);
        let sum = self.sum_range();
        Interval {
            lo: sum.lo - s1.hi,
            hi: sum.hi - s1.lo,
        }
    }

    /// Whether `(s1, s2)` lies in the `k = 2` likelihood support.
    pub fn in_l2(&self, v: Variant, s1: f64, s2: f64) -> bool {
        let a = self.s1_range(v);
        let b = self.sum_range();
        a.lo < s1 && s1 < a.hi && b.lo < s1 + s2 && s1 + s2 < b.hi
    }

    /// Area of the `k = 2` likelihood support: a parallelogram with unit
    /// shear, so width of the `s1` range times width of the sum range.
    pub fn l2_area(&self, v: Variant) -> f64 {
        self.s1_range(v).width() * self.sum_range().width()
    }

    /// Whether the prior box covers the likelihood support of both models.
    pub fn regime_valid(&self, v: Variant) -> bool {
        let p = self.prior_interval();
        let k1 = self.k1_support().is_none_or(|i| covers(&p, &i));
        k1 && covers(&p, &self.s1_range(v)) && covers(&p, &self.s2_range(v))
    }

    /// Smallest interval holding every likelihood support of both variants.
    pub fn support_hull(&self) -> Interval {
        let mut parts = vec![
            self.s1_range(Variant::Literal),
            self.s2_range(Variant::Literal),
            self.s1_range(Variant::Correct),
            self.s2_range(Variant::Correct),
        ];
        parts.extend(self.k1_support());
        Interval {
            lo: parts.iter().map(|i| i.lo).fold(f64::INFINITY, f64::min),
            hi: parts.iter().map(|i| i.hi).fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// `p(d | 1)` when the prior covers the likelihood support.
    pub fn analytic_evidence_k1(&self) -> f64 {
        self.k1_length() / (self.prior_interval().width() * self.data_area())
    }

    pub fn analytic_evidence_k2(&self, v: Variant) -> f64 {
        self.l2_area(v) / (self.prior_interval().width().powi(2) * self.data_area())
    }

    /// `p(d | 2) / p(d | 1)` in closed form, valid inside the regime.
    pub fn analytic_bayes_factor(&self, v: Variant) -> Option<f64> {
        let dh = self.d_hat()?.width();
        if dh == 0.0 {
            return None;
        }
        let num = match v {
            Variant::Literal => self.i1().width().powi(2),
            Variant::Correct => self.i1().width() * self.i2().width(),
        };
        Some(num / (self.length * self.prior_interval().width() * dh))
    }

    /// Measure of the `k = 1` likelihood support inside the prior interval.
    pub fn quadrature_length_k1(&self) -> f64 {
        let l2 = 2.0 * self.length;
        let (i1, i2) = (self.i1(), self.i2());
        let p = self.prior_interval();
        let f = |s: &[f64]| f64::from(u8::from(i1.contains(l2 * s[0]) && i2.contains(l2 * s[0])));
        let opts =
            QuadOptions::with_rel_tol(1e-12).breakpoints(vec![vec![i1.lo / l2, i1.hi / l2, i2.lo / l2, i2.hi / l2]]);
        integrate_1d(|s| f(&[s]), p.lo, p.hi, &opts).value
    }

    /// Measure of `{(s1, s2) ∈ prior box : indicator}` by nested quadrature,
    /// with breakpoints at the edges of the indicator.
    fn nested_area<F: Fn(f64, f64) -> bool>(&self, indicator: F) -> f64 {
        let p = self.prior_interval();
        let sum = self.sum_range();
        let mut outer_bp: Vec<f64> = [Variant::Literal, Variant::Correct]
            .iter()
            .flat_map(|v| {
                let r = self.s1_range(*v);
                [r.lo, r.hi]
            })
            .collect();
        for edge in [sum.lo, sum.hi] {
            outer_bp.push(edge - p.hi);
            outer_bp.push(edge - p.lo);
        }
        let outer = QuadOptions::with_rel_tol(1e-12).breakpoints(vec![outer_bp]);
        let inner_len = |s1: f64| {
            let opts = QuadOptions::with_rel_tol(1e-12).breakpoints(vec![vec![sum.lo - s1, sum.hi - s1]]);
            integrate_1d(|s2| f64::from(u8::from(indicator(s1, s2))), p.lo, p.hi, &opts).value
        };
        integrate_1d(inner_len, p.lo, p.hi, &outer).value
    }

    /// Area of the literal `k = 2` support inside the prior box.
    pub fn quadrature_area_literal(&self) -> f64 {
        self.nested_area(|s1, s2| self.in_l2(Variant::Literal, s1, s2))
    }

    /// Area where the graph-restricted joint `p_d(g_2(s)) p_s(s)` is positive.
    /// Evaluates the joint density itself, not the support formula.
    pub fn quadrature_area_correct(&self) -> Result<f64> {
        let post = self.problem()?.model_posterior(2)?;
        Ok(self.nested_area(|s1, s2| post.value(&[s1, s2]) > 0.0))
    }

    /// Conditional evidences `(p(d|1), p(d|2))` by quadrature.
    pub fn quadrature_evidences(&self, v: Variant) -> Result<(f64, f64)> {
        let w = self.prior_interval().width();
        let e1 = self.quadrature_length_k1() / (w * self.data_area());
        let area = match v {
            Variant::Literal => self.quadrature_area_literal(),
            Variant::Correct => self.quadrature_area_correct()?,
        };
        Ok((e1, area / (w * w * self.data_area())))
    }

    /// The example as a generic problem; its `k = 2` posterior is the graph
    /// restriction, so it follows [`Variant::Correct`].
    pub fn problem(&self) -> Result<TransDimProblem> {
        self.validate()?;
        let slow = UnitSignature::slowness();
        let data = Density::uniform_box(BoxSupport::new(vec![self.i1(), self.i2()])?)?
            .with_units(vec![UnitSignature::second(); 2])?;
        let prior = |k: usize| -> Result<Density> {
            Density::uniform_box(BoxSupport::cube(k, self.s_min, self.s_max)?)?.with_units(vec![slow.clone(); k])
        };
        TransDimProblem::new(
            vec![
                ModelSpec {
                    k: 1,
                    forward: ForwardModel::one_block_slowness(self.length)?,
                    prior: prior(1)?,
                },
                ModelSpec {
                    k: 2,
                    forward: ForwardModel::two_block_transdim(self.length)?,
                    prior: prior(2)?,
                },
            ],
            data,
            vec![0.5, 0.5],
        )
    }

    /// Likelihood evidences `∫ p_d(g_k(s)) ds` over the prior box, with their
    /// units, and their `k = 2 : k = 1` ratio.
    pub fn likelihood_evidence(&self, v: Variant) -> Result<(Quantity, Quantity, EvidenceRatio)> {
        let data_unit = UnitSignature::second().powi(-2);
        let slow = UnitSignature::slowness();
        let (e1, e2) = self.quadrature_evidences(v)?;
        let w = self.prior_interval().width();
        let q1 = Quantity::new(e1 * w, &data_unit * &slow);
        let q2 = Quantity::new(e2 * w * w, &data_unit * &slow.powi(2));
        if q1.value == 0.0 {
            return Err(Error::HypothesisExcluded(1));
        }
        let ratio = EvidenceRatio::from_quantity(q2.ratio(&q1));
        Ok((q1, q2, ratio))
    }

    /// Closed form of [`Self::likelihood_evidence`] inside the regime:
    /// support measure over data area.
    pub fn analytic_likelihood_evidence(&self, v: Variant) -> Result<(Quantity, Quantity, EvidenceRatio)> {
        let data_unit = UnitSignature::second().powi(-2);
        let slow = UnitSignature::slowness();
        let q1 = Quantity::new(self.k1_length() / self.data_area(), &data_unit * &slow);
        let q2 = Quantity::new(self.l2_area(v) / self.data_area(), &data_unit * &slow.powi(2));
        if q1.value == 0.0 {
            return Err(Error::HypothesisExcluded(1));
        }
        let ratio = EvidenceRatio::from_quantity(q2.ratio(&q1));
        Ok((q1, q2, ratio))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformGeometry {
    pub data_area: f64,
    pub d_hat: Option<Interval>,
    pub k1_support: Option<Interval>,
    pub l2_area_literal: f64,
    pub l2_area_correct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantReport {
    pub variant: Variant,
    pub regime_valid: bool,
    /// `Analytic` inside the regime, `Quadrature` otherwise.
    pub method: Method,
    pub evidence: EvidenceReport,
    /// `p(d|2) / p(d|1)` from the method above.
    pub bayes_factor: Option<f64>,
    pub analytic_bayes_factor: Option<f64>,
    pub quadrature_bayes_factor: Option<f64>,
    /// Monte Carlo area of the `k = 2` likelihood support over its bounding box.
    pub l2_area_mc: IntegralResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformExampleReport {
    pub config: UniformExampleConfig,
    pub warnings: Vec<String>,
    pub geometry: UniformGeometry,
    pub literal: VariantReport,
    pub correct: VariantReport,
    /// Monte Carlo length of the `k = 1` support.
    pub k1_length_mc: Option<IntegralResult>,
    pub mc_points: usize,
    pub seed: u64,
    /// Analytic values agree with quadrature and Monte Carlo.
    pub verified: bool,
}

impl UniformExampleReport {
    pub fn variant(&self, v: Variant) -> &VariantReport {
        match v {
            Variant::Literal => &self.literal,
            Variant::Correct => &self.correct,
        }
    }
}

fn within_sigmas(r: &IntegralResult, truth: f64) -> bool {
    (r.value - truth).abs() <= MC_SIGMAS * r.error + 1e-15
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

pub fn uniform_example_report(cfg: &UniformExampleConfig, mc_points: usize, seed: u64) -> Result<UniformExampleReport> {
    cfg.validate()?;
    let mut warnings = Vec::new();
    if cfg.d_hat().is_none_or(|d| d.width() == 0.0) {
        warnings.push(String::from(
            "data intervals do not overlap: the one-block model is excluded by the data",
        ));
    }
    let k1_length_mc = match cfg.k1_support() {
        Some(s) if s.width() > 0.0 => {
            let l2 = 2.0 * cfg.length;
            let hull = Interval {
                lo: cfg.d1[0].min(cfg.d2[0]) / l2,
                hi: cfg.d1[1].max(cfg.d2[1]) / l2,
            };
            let (i1, i2) = (cfg.i1(), cfg.i2());
            Some(mc_integrate(
                |s| f64::from(u8::from(i1.contains(l2 * s[0]) && i2.contains(l2 * s[0]))),
                &BoxSupport::new(vec![hull])?,
                mc_points,
                seed,
            )?)
        }
        _ => None,
    };
    let mut verified = k1_length_mc.as_ref().is_none_or(|r| within_sigmas(r, cfg.k1_length()));
    let unit = UnitSignature::second().powi(-2);
    let mut variant_report = |v: Variant, stream: u64| -> Result<VariantReport> {
        let regime_valid = cfg.regime_valid(v);
        let (q1, q2) = cfg.quadrature_evidences(v)?;
        let tag = match v {
            Variant::Literal => "uniform-literal-support",
            Variant::Correct => "uniform-graph-support",
        };
        let (method, e1, e2) = if regime_valid {
            (
                Method::Analytic,
                cfg.analytic_evidence_k1(),
                cfg.analytic_evidence_k2(v),
            )
        } else {
            (Method::Quadrature, q1, q2)
        };
        let evidences = vec![
            Evidence {
                method,
                ..Evidence::analytic(1, 0.5, e1, unit.clone())
            },
            Evidence {
                method,
                ..Evidence::analytic(2, 0.5, e2, unit.clone())
            },
        ];
        let formulas = vec![
            String::from("joint-prior-uniform"),
            format!("{tag}-{}", if regime_valid { "closed-form" } else { "quadrature" }),
        ];
        let evidence = EvidenceReport::from_evidences(evidences, formulas)?;
        let bayes_factor = evidence.bayes_factor(2, 1);
        let analytic_bayes_factor = if regime_valid {
            cfg.analytic_bayes_factor(v)
        } else {
            None
        };
        let quadrature_bayes_factor = (q1 > 0.0).then(|| q2 / q1);
        let bbox = BoxSupport::new(vec![cfg.s1_range(v), cfg.s2_range(v)])?;
        let l2_area_mc = mc_integrate(
            |s| f64::from(u8::from(cfg.in_l2(v, s[0], s[1]))),
            &bbox,
            mc_points,
            seed ^ stream,
        )?;
        if regime_valid {
            if !within_sigmas(&l2_area_mc, cfg.l2_area(v)) {
                verified = false;
            }
            let pairs = [(q1, e1), (q2, e2)];
            if pairs.iter().any(|(q, e)| !rel_close(*q, *e, QUAD_AGREEMENT)) {
                verified = false;
            }
        } else {
            warnings.push(format!(
                "{tag}: truncated regime, prior does not cover the likelihood support; analytic formulas invalid, using quadrature"
            ));
        }
        Ok(VariantReport {
            variant: v,
            regime_valid,
            method,
            evidence,
            bayes_factor,
            analytic_bayes_factor,
            quadrature_bayes_factor,
            l2_area_mc,
        })
    };
    let literal = variant_report(Variant::Literal, 0x11)?;
    let correct = variant_report(Variant::Correct, 0x22)?;
    Ok(UniformExampleReport {
        config: cfg.clone(),
        warnings,
        geometry: UniformGeometry {
            data_area: cfg.data_area(),
            d_hat: cfg.d_hat(),
            k1_support: cfg.k1_support(),
            l2_area_literal: cfg.l2_area(Variant::Literal),
            l2_area_correct: cfg.l2_area(Variant::Correct),
        },
        literal,
        correct,
        k1_length_mc,
        mc_points,
        seed,
        verified,
    })
}

/// Pointwise comparison of the normalized per-`k` posteriors of two configs
/// on the likelihood supports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlipCertificate {
    pub variant: Variant,
    pub points: usize,
    pub k1_sup_difference: f64,
    pub k2_sup_difference: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub const CERTIFICATE_TOL: f64 = 1e-10;

/// Normalized posterior over `s` for fixed `k`: the likelihood indicator
/// inside the prior box divided by its quadrature measure.
fn normalized_posteriors(cfg: &UniformExampleConfig, v: Variant) -> Result<(f64, f64)> {
    let len = cfg.quadrature_length_k1();
    let area = match v {
        Variant::Literal => cfg.quadrature_area_literal(),
        Variant::Correct => cfg.quadrature_area_correct()?,
    };
    Ok((
        if len > 0.0 { 1.0 / len } else { 0.0 },
        if area > 0.0 { 1.0 / area } else { 0.0 },
    ))
}

pub fn posterior_certificate(
    a: &UniformExampleConfig,
    b: &UniformExampleConfig,
    v: Variant,
) -> Result<FlipCertificate> {
    if a.d1 != b.d1 || a.d2 != b.d2 || a.length != b.length {
        return Err(Error::InvalidParameter("configs must share data and geometry".into()));
    }
    let (na1, na2) = normalized_posteriors(a, v)?;
    let (nb1, nb2) = normalized_posteriors(b, v)?;
    let post1 = |cfg: &UniformExampleConfig, c: f64, s: f64| {
        let on = cfg.k1_support().is_some_and(|i| i.contains(s)) && cfg.prior_interval().contains(s);
        if on {
            c
        } else {
            0.0
        }
    };
    let post2 = |cfg: &UniformExampleConfig, c: f64, s1: f64, s2: f64| {
        let p = cfg.prior_interval();
        if cfg.in_l2(v, s1, s2) && p.contains(s1) && p.contains(s2) {
            c
        } else {
            0.0
        }
    };
    let mut points = 0;
    let mut k1_sup: f64 = 0.0;
    if let Some(s) = a.k1_support() {
        for x in s.interior_samples(201) {
            points += 1;
            k1_sup = k1_sup.max((post1(a, na1, x) - post1(b, nb1, x)).abs());
        }
    }
    let mut k2_sup: f64 = 0.0;
    let bbox = BoxSupport::new(vec![a.s1_range(v), a.s2_range(v)])?;
    for x in bbox.interior_grid(201) {
        if a.in_l2(v, x[0], x[1]) {
            points += 1;
            k2_sup = k2_sup.max((post2(a, na2, x[0], x[1]) - post2(b, nb2, x[0], x[1])).abs());
        }
    }
    Ok(FlipCertificate {
        variant: v,
        points,
        k1_sup_difference: k1_sup,
        k2_sup_difference: k2_sup,
        tolerance: CERTIFICATE_TOL,
        passed: k1_sup <= CERTIFICATE_TOL && k2_sup <= CERTIFICATE_TOL,
    })
}

/// Two priors with the same posterior over `s` for each `k` whose Bayes
/// factors `p(d|2) / p(d|1)` fall on opposite sides of one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlipPair {
    pub favors_k1: UniformExampleConfig,
    pub favors_k2: UniformExampleConfig,
    pub bayes_factor_k1_config: f64,
    pub bayes_factor_k2_config: f64,
    pub correct_bayes_factor_k1_config: Option<f64>,
    pub correct_bayes_factor_k2_config: Option<f64>,
    pub certificate_literal: FlipCertificate,
    pub certificate_correct: FlipCertificate,
}

/// Flips the preferred dimension of the literal Bayes factor by changing
/// only the slowness prior. The narrow prior is the smallest interval
/// covering every likelihood support, so the regime holds for both configs.
pub fn parsimony_flip(base: &UniformExampleConfig) -> Result<FlipPair> {
    base.validate()?;
    let dh = base.d_hat().ok_or(Error::ContradictoryInformation)?;
    if base.d1 == base.d2 {
        return Err(Error::IdenticalObservations);
    }
    if !(base.regime_valid(Variant::Literal) && base.regime_valid(Variant::Correct)) {
        return Err(Error::InvalidParameter(
            "base prior must cover the likelihood support".into(),
        ));
    }
    if dh.width() == 0.0 {
        return Err(Error::ContradictoryInformation);
    }
    let hull = base.support_hull();
    let narrow = base.with_slowness_range(hull.lo, hull.hi);
    let bf_narrow = narrow
        .analytic_bayes_factor(Variant::Literal)
        .expect("d_hat is nonempty");
    if !(bf_narrow > 1.0) {
        return Err(Error::NoFlipRoom);
    }
    let bf_base = base.analytic_bayes_factor(Variant::Literal).expect("d_hat is nonempty");
    let wide = if bf_base < 1.0 {
        base.clone()
    } else {
        // Width giving a factor of one half, centered on the supports.
        let w = 2.0 * bf_narrow * hull.width();
        let c = hull.midpoint();
        base.with_slowness_range(c - 0.5 * w, c + 0.5 * w)
    };
    let bf_wide = wide.analytic_bayes_factor(Variant::Literal).expect("d_hat is nonempty");
    Ok(FlipPair {
        correct_bayes_factor_k1_config: wide.analytic_bayes_factor(Variant::Correct),
        correct_bayes_factor_k2_config: narrow.analytic_bayes_factor(Variant::Correct),
        certificate_literal: posterior_certificate(&wide, &narrow, Variant::Literal)?,
        certificate_correct: posterior_certificate(&wide, &narrow, Variant::Correct)?,
        favors_k1: wide,
        favors_k2: narrow,
        bayes_factor_k1_config: bf_wide,
        bayes_factor_k2_config: bf_narrow,
    })
}

/// The flip obtained by shrinking the prior to width `|I1| / L`, centred on
/// the likelihood supports. The closed form then gives
/// `|I1| / |d̂| > 1`, but a prior that narrow cannot cover the literal
/// `k = 2` support, so the posterior changes and the certificate fails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchedWidthFlip {
    pub wide: UniformExampleConfig,
    pub narrow: UniformExampleConfig,
    pub wide_bayes_factor: f64,
    /// The closed form evaluated outside its regime.
    pub narrow_formula_bayes_factor: f64,
    pub narrow_quadrature_bayes_factor: Option<f64>,
    pub narrow_regime_valid: bool,
    pub certificate: FlipCertificate,
}

pub fn matched_width_flip(base: &UniformExampleConfig) -> Result<MatchedWidthFlip> {
    base.validate()?;
    let dh = base.d_hat().ok_or(Error::ContradictoryInformation)?;
    if dh.width() == 0.0 {
        return Err(Error::ContradictoryInformation);
    }
    let w = base.i1().width() / base.length;
    let c = base.support_hull().midpoint();
    let narrow = base.with_slowness_range(c - 0.5 * w, c + 0.5 * w);
    let (q1, q2) = narrow.quadrature_evidences(Variant::Literal)?;
    Ok(MatchedWidthFlip {
        wide_bayes_factor: base.analytic_bayes_factor(Variant::Literal).expect("d_hat is nonempty"),
        narrow_formula_bayes_factor: narrow
            .analytic_bayes_factor(Variant::Literal)
            .expect("d_hat is nonempty"),
        narrow_quadrature_bayes_factor: (q1 > 0.0).then(|| q2 / q1),
        narrow_regime_valid: narrow.regime_valid(Variant::Literal),
        certificate: posterior_certificate(base, &narrow, Variant::Literal)?,
        wide: base.clone(),
        narrow,
    })
}

/// Reversible-jump estimate of `p(k | d)` for the graph-restricted joint.
pub fn rj_summary(cfg: &UniformExampleConfig, steps: usize, seed: u64) -> Result<RjSummary> {
    let problem = cfg.problem()?;
    let birth = Density::uniform_box(BoxSupport::cube(1, cfg.s_min, cfg.s_max)?)?
        .with_units(vec![UnitSignature::slowness()])?;
    let w1 = cfg.k1_length().max(1e-12);
    let w2 = cfg.s1_range(Variant::Correct).width().min(cfg.sum_range().width());
    let chain = problem.rj_sample(&[birth], steps, seed, &[0.5 * w1, 0.5 * w2])?;
    Ok(RjSummary::from_chain(&chain, &[1, 2]))
}
