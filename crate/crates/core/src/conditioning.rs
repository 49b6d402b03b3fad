//! Conditioning a two-dimensional density on a curve.
//!
//! [`naive_conditional`] restricts the density to the curve and renormalizes
//! over the curve parameter, with no metric factor. [`slab_conditional`]
//! conditions on a thin set `{δ < ε}` around the curve instead, and
//! [`slab_limit`] follows it as `ε → 0`. Different slab families give
//! different limits; [`borel_contradiction_report`] and
//! [`slab_chart_dependence`] exhibit this on the two-block tomography problem.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::diffeo::Diffeomorphism;
use crate::domain::{BoxSupport, Interval};
use crate::error::{Error, Result};
use crate::forward::{graph_restrict, ForwardModel, DEFAULT_RAYS};
use crate::oracle::{integrate_1d, QuadOptions};
use crate::units::UnitSignature;

type Embedding = Arc<dyn Fn(f64) -> [f64; 2] + Send + Sync>;

/// Default slab widths, decreasing.
pub const DEFAULT_EPS: [f64; 5] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];

/// Share of the support kept when comparing curves away from its ends.
pub const INTERIOR_FRACTION: f64 = 0.8;

const EXTENT_CELLS: usize = 4096;
const INJECTIVITY_SAMPLES: usize = 64;

/// A parameterized curve in a two-dimensional chart.
#[derive(Clone)]
pub struct Curve {
    range: Interval,
    chart: String,
    embed: Embedding,
    tangent: Embedding,
}

impl core::fmt::Debug for Curve {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Curve")
            .field("range", &self.range)
            .field("chart", &self.chart)
            .finish()
    }
}

impl Curve {
    /// General curve; the tangent is taken by central differences.
    pub fn new<F>(range: Interval, chart: &str, embed: F) -> Result<Self>
    where
        F: Fn(f64) -> [f64; 2] + Send + Sync + 'static,
    {
        let embed: Embedding = Arc::new(embed);
        let e = embed.clone();
        let tangent: Embedding = Arc::new(move |t| {
            let h = 1e-6 * t.abs().max(1.0);
            let (a, b) = (e(t + h), e(t - h));
            [(a[0] - b[0]) / (2.0 * h), (a[1] - b[1]) / (2.0 * h)]
        });
        let c = Self {
            range,
            chart: chart.into(),
            embed,
            tangent,
        };
        c.check_injective()?;
        Ok(c)
    }

    /// `t ↦ origin + t·direction`.
    pub fn line(range: Interval, chart: &str, origin: [f64; 2], direction: [f64; 2]) -> Result<Self> {
        if direction == [0.0, 0.0] {
            return Err(Error::NonInjectiveCurve(0.0));
        }
        Ok(Self {
            range,
            chart: chart.into(),
            embed: Arc::new(move |t| [origin[0] + t * direction[0], origin[1] + t * direction[1]]),
            tangent: Arc::new(move |_| direction),
        })
    }

    /// The diagonal `x2 = x1`, parameterized by `x1`.
    pub fn diagonal(range: Interval, chart: &str) -> Self {
        Self::line(range, chart, [0.0, 0.0], [1.0, 1.0]).expect("nonzero direction")
    }

    pub fn range(&self) -> Interval {
        self.range
    }

    pub fn chart(&self) -> &str {
        &self.chart
    }

    pub fn at(&self, t: f64) -> [f64; 2] {
        (self.embed)(t)
    }

    pub fn tangent(&self, t: f64) -> [f64; 2] {
        (self.tangent)(t)
    }

    fn check_injective(&self) -> Result<()> {
        let ts = self.range.interior_samples(INJECTIVITY_SAMPLES);
        let pts: Vec<[f64; 2]> = ts.iter().map(|&t| self.at(t)).collect();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if pts[i] == pts[j] {
                    return Err(Error::NonInjectiveCurve(ts[j]));
                }
            }
        }
        Ok(())
    }
}

type Distance = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Thin sets `{x : δ(x) < ε}` around a curve, swept along a fixed
/// transverse direction.
#[derive(Clone)]
pub struct SlabFamily {
    delta: Distance,
    chart: String,
    transverse: [f64; 2],
}

impl core::fmt::Debug for SlabFamily {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SlabFamily")
            .field("chart", &self.chart)
            .field("transverse", &self.transverse)
            .finish()
    }
}

impl SlabFamily {
    pub fn new<F>(chart: &str, delta: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            delta: Arc::new(delta),
            chart: chart.into(),
            transverse: [0.0, 1.0],
        }
    }

    /// `δ(x) = |x2 - x1|`, vanishing on the diagonal.
    pub fn coordinate_difference(chart: &str) -> Self {
        Self::new(chart, |x| (x[1] - x[0]).abs())
    }

    /// `δ(x) = |a·x - b|` for a line `a·x = b`.
    pub fn affine(chart: &str, a: [f64; 2], b: f64) -> Self {
        Self::new(chart, move |x| (a[0] * x[0] + a[1] * x[1] - b).abs())
    }

    /// The same family expressed in another chart: `δ'(y) = δ(h(y))`.
    /// Points outside the domain of `h` count as infinitely far.
    pub fn pulled_back(&self, h: &Diffeomorphism, chart: &str) -> Self {
        let delta = self.delta.clone();
        let h = h.clone();
        Self {
            delta: Arc::new(move |y| {
                let mut buf = [0.0; 2];
                match h.forward_into(y, &mut buf) {
                    Some(_) => delta(&buf),
                    None => f64::INFINITY,
                }
            }),
            chart: chart.into(),
            transverse: self.transverse,
        }
    }

    pub fn with_transverse(mut self, n: [f64; 2]) -> Self {
        self.transverse = n;
        self
    }

    pub fn chart(&self) -> &str {
        &self.chart
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        (self.delta)(x)
    }
}

fn check_planar(p: &Density) -> Result<()> {
    if p.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: p.dim(),
        });
    }
    Ok(())
}

/// Smallest interval containing every point of `iv` where `f > 0`, with
/// both ends refined by bisection. Infinite intervals are returned whole.
pub fn positive_extent<F: Fn(f64) -> f64>(f: F, iv: Interval) -> Option<Interval> {
    positive_extent_with(f, iv, EXTENT_CELLS)
}

fn positive_extent_with<F: Fn(f64) -> f64>(f: F, iv: Interval, n: usize) -> Option<Interval> {
    if !iv.is_finite() {
        return Some(iv);
    }
    let x = |i: usize| iv.lo + (i as f64 + 0.5) / n as f64 * iv.width();
    let first = (0..n).find(|&i| f(x(i)) > 0.0)?;
    let last = (0..n).rev().find(|&i| f(x(i)) > 0.0)?;
    let refine = |mut inside: f64, mut outside: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if f(mid) > 0.0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        inside
    };
    let lo = if f(iv.lo) > 0.0 {
        iv.lo
    } else {
        let out = if first == 0 { iv.lo } else { x(first - 1) };
        refine(x(first), out)
    };
    let hi = if f(iv.hi) > 0.0 {
        iv.hi
    } else {
        let out = if last + 1 == n { iv.hi } else { x(last + 1) };
        refine(x(last), out)
    };
    (lo < hi).then_some(Interval { lo, hi })
}

/// Quadrature options with breakpoints crowding geometrically toward both
/// ends of `iv`, so that features of any width at the support edges (slab
/// ramps, kinks) land between nodes of their own small segments.
fn edge_clustered(iv: Interval, rel_tol: f64) -> QuadOptions {
    let mut breaks = Vec::new();
    if iv.is_finite() {
        let w = iv.width();
        for k in 1..=12 {
            let d = w * 0.5 * 10f64.powi(-k);
            breaks.push(iv.lo + d);
            breaks.push(iv.hi - d);
        }
    }
    QuadOptions::with_rel_tol(rel_tol).breakpoints(vec![breaks])
}

/// Normalize a nonnegative 1-D function over `iv` into a density.
fn normalized_1d<F>(f: F, iv: Interval, cells: usize, rel_tol: f64, unit: UnitSignature, miss: Error) -> Result<Density>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let extent = positive_extent_with(&f, iv, cells).ok_or(miss.clone())?;
    let r = integrate_1d(&f, extent.lo, extent.hi, &edge_clustered(extent, rel_tol));
    if !(r.value > 0.0) {
        return Err(miss);
    }
    if !r.value.is_finite() {
        return Err(Error::Divergent);
    }
    let c = 1.0 / r.value;
    Density::custom(BoxSupport::new(vec![extent])?, move |t| c * f(t[0])).with_units(vec![unit])
}

/// `t ↦ p(c(t))`, renormalized over the curve parameter.
pub fn naive_conditional(p: &Density, c: &Curve) -> Result<Density> {
    check_planar(p)?;
    let p = p.clone();
    let curve = c.clone();
    let unit = p.coord_units()[0].clone();
    normalized_1d(
        move |t| p.value(&curve.at(t)),
        c.range,
        EXTENT_CELLS,
        1e-12,
        unit,
        Error::CurveMissesSupport,
    )
}

/// One-dimensional change of variables.
pub fn transform_1d(p: &Density, h: &Diffeomorphism) -> Result<Density> {
    if p.dim() != 1 || h.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: p.dim().max(h.dim()),
        });
    }
    p.pushforward(h)
}

/// Offsets `u` on either side of `x0` along `n` where `δ(x0 + u n) < ε`,
/// assuming the set is an interval containing `u = 0`.
fn slab_offsets(fam: &SlabFamily, x0: [f64; 2], eps: f64, reach: f64) -> (f64, f64) {
    let n = fam.transverse;
    let inside = |u: f64| fam.distance(&[x0[0] + u * n[0], x0[1] + u * n[1]]) < eps;
    let side = |sign: f64| -> f64 {
        let mut a = 0.0;
        let mut b = eps.min(reach);
        while inside(sign * b) {
            a = b;
            if b >= reach {
                return sign * reach;
            }
            b = (2.0 * b).min(reach);
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid == a || mid == b {
                break;
            }
            if inside(sign * mid) {
                a = mid;
            } else {
                b = mid;
            }
        }
        sign * a
    };
    (side(-1.0), side(1.0))
}

/// Conditional on the slab `{δ < ε}`, as a density over the curve parameter:
/// the transverse integral of `p` across the slab at `c(t)`, times the area
/// element of `(t, u) ↦ c(t) + u n`, renormalized.
pub fn slab_conditional(p: &Density, fam: &SlabFamily, eps: f64, c: &Curve) -> Result<Density> {
    check_planar(p)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("slab width {eps}")));
    }
    let p = p.clone();
    let fam = fam.clone();
    let curve = c.clone();
    let unit = p.coord_units()[0].clone();
    let support = p.support().clone();
    let reach = support
        .intervals()
        .iter()
        .map(|iv| if iv.is_finite() { iv.width() } else { 1e3 })
        .fold(0.0, f64::max);
    let w = move |t: f64| -> f64 {
        let x0 = curve.at(t);
        let n = fam.transverse;
        let (mut lo, mut hi) = slab_offsets(&fam, x0, eps, reach);
        // Clip to the support box of p along the transverse line.
        for (k, iv) in support.intervals().iter().enumerate() {
            if n[k] != 0.0 {
                let a = (iv.lo - x0[k]) / n[k];
                let b = (iv.hi - x0[k]) / n[k];
                lo = lo.max(a.min(b));
                hi = hi.min(a.max(b));
            }
        }
        if !(lo < hi) {
            return 0.0;
        }
        let tan = curve.tangent(t);
        let area = (tan[0] * n[1] - tan[1] * n[0]).abs();
        let r = integrate_1d(
            |u| p.value(&[x0[0] + u * n[0], x0[1] + u * n[1]]),
            lo,
            hi,
            &QuadOptions::with_rel_tol(1e-13).partition(2),
        );
        r.value * area
    };
    normalized_1d(w, c.range, 256, 1e-10, unit, Error::SlabMassZero(eps))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlabLimit {
    pub grid: Vec<f64>,
    pub eps: Vec<f64>,
    /// Normalized slab conditional on `grid`, one row per `eps`.
    pub values: Vec<Vec<f64>>,
    /// Sup-norm difference between consecutive rows.
    pub deviations: Vec<f64>,
    /// Richardson-extrapolated limit on `grid`.
    pub limit: Vec<f64>,
    pub order: f64,
    pub extrapolated: bool,
}

impl SlabLimit {
    pub fn smallest(&self) -> &[f64] {
        self.values.last().map_or(&[], |v| v.as_slice())
    }
}

/// Evenly spaced points over the middle `INTERIOR_FRACTION` of `iv`.
pub fn interior_grid(iv: Interval, n: usize) -> Vec<f64> {
    let margin = 0.5 * (1.0 - INTERIOR_FRACTION) * iv.width();
    let (a, b) = (iv.lo + margin, iv.hi - margin);
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Order `p` with `(a^p - b^p)/(b^p - c^p) = ratio`, searched on `[1, 4]`.
fn richardson_order(a: f64, b: f64, c: f64, ratio: f64) -> f64 {
    let g = |p: f64| (a.powf(p) - b.powf(p)) / (b.powf(p) - c.powf(p)) - ratio;
    let (mut lo, mut hi) = (1.0, 4.0);
    if g(lo) >= 0.0 {
        return lo;
    }
    if g(hi) <= 0.0 {
        return hi;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Slab conditionals along a decreasing `eps` sequence, sampled on `grid`,
/// with a Richardson estimate of the `ε → 0` limit.
pub fn slab_limit(p: &Density, fam: &SlabFamily, c: &Curve, eps: &[f64], grid: &[f64]) -> Result<SlabLimit> {
    if eps.len() < 2 || eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "eps sequence must be positive and strictly decreasing".into(),
        ));
    }
    let mut values = Vec::with_capacity(eps.len());
    for &e in eps {
        let q = slab_conditional(p, fam, e, c)?;
        values.push(grid.iter().map(|&t| q.value(&[t])).collect::<Vec<f64>>());
    }
    let deviations: Vec<f64> = values.windows(2).map(|w| sup_diff(&w[0], &w[1])).collect();
    let scale = values
        .last()
        .unwrap()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    let tol = 1e-8 * scale;
    for w in deviations.windows(2) {
        if w[1] > w[0] + tol {
            return Err(Error::NoStableLimit {
                previous: w[0],
                current: w[1],
            });
        }
    }
    let n = eps.len();
    let last = values[n - 1].clone();
    let (limit, order, extrapolated) = match (n >= 3, deviations.last()) {
        (true, Some(&d2)) if d2 > 1e-13 * scale => {
            let d1 = deviations[deviations.len() - 2];
            let (a, b, cc) = (eps[n - 3], eps[n - 2], eps[n - 1]);
            let order = richardson_order(a, b, cc, d1 / d2);
            let k = cc.powf(order) / (b.powf(order) - cc.powf(order));
            let limit = values[n - 1]
                .iter()
                .zip(&values[n - 2])
                .map(|(wc, wb)| wc - (wb - wc) * k)
                .collect();
            (limit, order, true)
        }
        _ => (last, f64::NAN, false),
    };
    Ok(SlabLimit {
        grid: grid.to_vec(),
        eps: eps.to_vec(),
        values,
        deviations,
        limit,
        order,
        extrapolated,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog_exponent(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::SupportTooSmall(pts.len() as f64));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 1e-24) {
        return Err(Error::SupportTooSmall(sxx));
    }
    Ok(sxy / sxx)
}

/// Which chart supplies the second conditional in the contradiction report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareChart {
    Slowness,
    /// Condition twice in the velocity chart; a self-comparison.
    Velocity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographyConfig {
    /// Velocity prior box, one `(min, max)` per block.
    pub velocity_box: [(f64, f64); 2],
    /// Observed travel-time box, one `(min, max)` per ray.
    pub data_box: [(f64, f64); 2],
    pub length: f64,
    pub rays: [[f64; 2]; 2],
    pub compare: CompareChart,
    pub grid_points: usize,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            velocity_box: [(1.0, 5.0), (1.0, 5.0)],
            data_box: [(0.5, 1.1), (0.5, 1.1)],
            length: 1.0,
            rays: DEFAULT_RAYS,
            compare: CompareChart::Slowness,
            grid_points: 201,
        }
    }
}

/// Posterior densities of the tomography problem in both charts.
pub struct TomographyPosteriors {
    pub velocity: Density,
    pub slowness: Density,
}

impl TomographyConfig {
    pub fn posteriors(&self) -> Result<TomographyPosteriors> {
        let vbox = BoxSupport::from_bounds(&self.velocity_box)?;
        let dbox = BoxSupport::from_bounds(&self.data_box)?;
        if !(self.length > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("ray length {}", self.length)));
        }
        let time = vec![UnitSignature::second(); 2];
        let data = Density::uniform_box(dbox)?.with_units(time)?;
        let prior_v = Density::uniform_box(vbox)?.with_units(vec![UnitSignature::velocity(); 2])?;
        let h = Diffeomorphism::reciprocal(2);
        let prior_s = prior_v.pushforward(&h)?;
        let gv = ForwardModel::two_block_velocity(self.length, self.rays)?;
        let gs = ForwardModel::two_block_slowness(self.length, self.rays)?;
        Ok(TomographyPosteriors {
            velocity: graph_restrict(&data, &prior_v, &gv)?,
            slowness: graph_restrict(&data, &prior_s, &gs)?,
        })
    }

    fn empty_or_too_small(&self, post: &Density) -> Error {
        let grid = post.support().interior_grid(256);
        if grid.iter().any(|x| post.value(x) > 0.0) {
            Error::SupportTooSmall(0.0)
        } else {
            Error::EmptySupport
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContradictionReport {
    pub config: TomographyConfig,
    pub parameterization: String,
    /// Support of the velocity-chart conditional in `v1`.
    pub support: Interval,
    /// Interior grid in `v1`.
    pub grid: Vec<f64>,
    pub velocity_conditional: Vec<f64>,
    /// The second chart's conditional, back-transformed to `v1`.
    pub back_transformed: Vec<f64>,
    pub ratio: Vec<f64>,
    /// `max/min - 1` of the velocity-chart conditional on the grid.
    pub flatness: f64,
    /// Log-log slope of the back-transformed conditional.
    pub exponent: f64,
    /// `max/min - 1` of the ratio on the grid.
    pub ratio_spread: f64,
    pub velocity_mass: f64,
    pub back_transformed_mass: f64,
    pub velocity_constant: bool,
    pub exponent_ok: bool,
    pub normalized: bool,
    pub contradiction: bool,
}

pub const FLATNESS_TOL: f64 = 1e-6;
pub const EXPONENT_TOL: f64 = 0.02;

fn spread(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    max / min - 1.0
}

/// Condition the tomography posterior on `v2 = v1` in the velocity chart and
/// in the comparison chart, and compare the two on a common `v1` grid.
pub fn borel_contradiction_report(cfg: &TomographyConfig) -> Result<ContradictionReport> {
    let post = cfg.posteriors()?;
    let vb = post.velocity.support().intervals().to_vec();
    let v_range = vb[0].intersect(&vb[1]).ok_or(Error::EmptySupport)?;
    let diag_v = Curve::diagonal(v_range, "velocity");
    let qv = naive_conditional(&post.velocity, &diag_v).map_err(|e| match e {
        Error::CurveMissesSupport => cfg.empty_or_too_small(&post.velocity),
        e => e,
    })?;
    let support = qv.support().interval(0);
    if support.width() <= 1e-9 * support.hi.abs().max(1.0) {
        return Err(Error::SupportTooSmall(support.width()));
    }

    let (back, parameterization) = match cfg.compare {
        CompareChart::Slowness => {
            let sb = post.slowness.support().intervals().to_vec();
            let s_range = sb[0].intersect(&sb[1]).ok_or(Error::EmptySupport)?;
            let diag_s = Curve::diagonal(s_range, "slowness");
            let qs = naive_conditional(&post.slowness, &diag_s)?;
            (
                transform_1d(&qs, &Diffeomorphism::reciprocal(1))?,
                "diagonal parameterized by v1 in the velocity chart and by s1 in the slowness chart",
            )
        }
        CompareChart::Velocity => (
            transform_1d(&qv, &Diffeomorphism::identity(1))?,
            "diagonal parameterized by v1 in both conditionals",
        ),
    };

    let grid = interior_grid(support, cfg.grid_points.max(3));
    let velocity_conditional: Vec<f64> = grid.iter().map(|&v| qv.value(&[v])).collect();
    let back_transformed: Vec<f64> = grid.iter().map(|&v| back.value(&[v])).collect();
    let ratio: Vec<f64> = back_transformed
        .iter()
        .zip(&velocity_conditional)
        .map(|(a, b)| a / b)
        .collect();
    let flatness = spread(&velocity_conditional);
    let exponent = fit_loglog_exponent(&grid, &back_transformed)?;
    let ratio_spread = spread(&ratio);
    let velocity_mass = qv.integrate(1e-12).value;
    let back_transformed_mass = back.integrate(1e-12).value;
    let expected_exponent = match cfg.compare {
        CompareChart::Slowness => 2.0,
        CompareChart::Velocity => 0.0,
    };
    Ok(ContradictionReport {
        config: cfg.clone(),
        parameterization: parameterization.into(),
        support,
        grid,
        velocity_conditional,
        back_transformed,
        ratio,
        flatness,
        exponent,
        ratio_spread,
        velocity_mass,
        back_transformed_mass,
        velocity_constant: flatness <= FLATNESS_TOL,
        exponent_ok: (exponent - expected_exponent).abs() <= EXPONENT_TOL,
        normalized: (velocity_mass - 1.0).abs() <= 1e-8 && (back_transformed_mass - 1.0).abs() <= 1e-8,
        contradiction: ratio_spread > FLATNESS_TOL,
    })
}

/// Slab limits of the slowness-chart posterior on `s2 = s1` under two slab
/// families: `|s2 - s1| < ε` and `|v2 - v1| < ε` pulled back to slowness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlabComparison {
    pub grid: Vec<f64>,
    pub naive: Vec<f64>,
    pub slowness_slab: SlabLimit,
    pub velocity_slab: SlabLimit,
    /// Sup-norm gap between the slowness slab at the smallest ε and the naive conditional.
    pub slowness_gap: f64,
    pub slowness_gap_extrapolated: f64,
    /// Log-log slope of velocity-slab limit over slowness-slab limit.
    pub ratio_exponent: f64,
}

pub fn slab_chart_dependence(cfg: &TomographyConfig, eps: &[f64]) -> Result<SlabComparison> {
    let post = cfg.posteriors()?;
    let sb = post.slowness.support().intervals().to_vec();
    let s_range = sb[0].intersect(&sb[1]).ok_or(Error::EmptySupport)?;
    let diag = Curve::diagonal(s_range, "slowness");
    let naive_q = naive_conditional(&post.slowness, &diag)?;
    let grid = interior_grid(naive_q.support().interval(0), cfg.grid_points.max(3));
    let naive: Vec<f64> = grid.iter().map(|&s| naive_q.value(&[s])).collect();

    let fam_s = SlabFamily::coordinate_difference("slowness");
    let fam_v = SlabFamily::coordinate_difference("velocity").pulled_back(&Diffeomorphism::reciprocal(2), "slowness");
    let slowness_slab = slab_limit(&post.slowness, &fam_s, &diag, eps, &grid)?;
    let velocity_slab = slab_limit(&post.slowness, &fam_v, &diag, eps, &grid)?;
    let ratio: Vec<f64> = velocity_slab
        .limit
        .iter()
        .zip(&slowness_slab.limit)
        .map(|(a, b)| a / b)
        .collect();
    Ok(SlabComparison {
        slowness_gap: sup_diff(slowness_slab.smallest(), &naive),
        slowness_gap_extrapolated: sup_diff(&slowness_slab.limit, &naive),
        ratio_exponent: fit_loglog_exponent(&grid, &ratio)?,
        grid,
        naive,
        slowness_slab,
        velocity_slab,
    })
}
