//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Multi-dimensional boxes are handled as iterated one-dimensional integrals.
//! Infinite and half-infinite ranges are compactified with rational maps
//! (`x = a + s·t/(1-t)` and `x = c + s·t/(1-t²)`), so no node ever lands on
//! an infinite endpoint.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cell::Cell;
use core::cmp::Ordering;

#[allow(unused_imports)]
use num_traits::Float;

use super::{IntegralResult, Method};
use crate::domain::{BoxSupport, Interval};

const MAX_DIM: usize = 8;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Per one-dimensional integral.
    pub max_subdivisions: usize,
    /// Number of equal pieces each axis starts with.
    pub initial_partition: usize,
    /// Known discontinuities per axis, in original coordinates.
    pub breakpoints: Vec<Vec<f64>>,
    /// `(center, scale)` per axis for the compactifying maps of infinite ranges.
    pub infinite_scales: Vec<(f64, f64)>,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 0.0,
            max_subdivisions: 4000,
            initial_partition: 8,
            breakpoints: Vec::new(),
            infinite_scales: Vec::new(),
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    pub fn abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn partition(mut self, n: usize) -> Self {
        self.initial_partition = n.max(1);
        self
    }

    pub fn breakpoints(mut self, breakpoints: Vec<Vec<f64>>) -> Self {
        self.breakpoints = breakpoints;
        self
    }

    pub fn infinite_scales(mut self, scales: Vec<(f64, f64)>) -> Self {
        self.infinite_scales = scales;
        self
    }
}

/// Change of variables from a finite parameter range `[ta, tb]` onto one axis.
#[derive(Debug, Clone, Copy)]
enum AxisMap {
    Finite { lo: f64, hi: f64 },
    Upper { lo: f64, scale: f64 },
    Lower { hi: f64, scale: f64 },
    Full { center: f64, scale: f64 },
}

impl AxisMap {
    fn new(iv: Interval, center: f64, scale: f64) -> Self {
        match (iv.lo.is_finite(), iv.hi.is_finite()) {
            (true, true) => AxisMap::Finite { lo: iv.lo, hi: iv.hi },
            (true, false) => AxisMap::Upper { lo: iv.lo, scale },
            (false, true) => AxisMap::Lower { hi: iv.hi, scale },
            (false, false) => AxisMap::Full { center, scale },
        }
    }

    fn t_range(&self) -> (f64, f64) {
        match *self {
            AxisMap::Finite { lo, hi } => (lo, hi),
            AxisMap::Upper { .. } | AxisMap::Lower { .. } => (0.0, 1.0),
            AxisMap::Full { .. } => (-1.0, 1.0),
        }
    }

    /// Returns `(x, dx/dt)`.
    fn apply(&self, t: f64) -> (f64, f64) {
        match *self {
            AxisMap::Finite { .. } => (t, 1.0),
            AxisMap::Upper { lo, scale } => {
                let w = 1.0 - t;
                (lo + scale * t / w, scale / (w * w))
            }
            AxisMap::Lower { hi, scale } => {
                let w = 1.0 - t;
                (hi - scale * t / w, scale / (w * w))
            }
            AxisMap::Full { center, scale } => {
                let w = 1.0 - t * t;
                (center + scale * t / w, scale * (1.0 + t * t) / (w * w))
            }
        }
    }

    fn to_t(self, x: f64) -> f64 {
        match self {
            AxisMap::Finite { .. } => x,
            AxisMap::Upper { lo, scale } => {
                let u = (x - lo) / scale;
                u / (1.0 + u)
            }
            AxisMap::Lower { hi, scale } => {
                let u = (hi - x) / scale;
                u / (1.0 + u)
            }
            AxisMap::Full { center, scale } => {
                let u = (x - center) / scale;
                if u == 0.0 {
                    0.0
                } else {
                    (-1.0 + (1.0 + 4.0 * u * u).sqrt()) / (2.0 * u)
                }
            }
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, if err.is_finite() { err } else { f64::INFINITY })
}

/// Adaptive integration of `f` over the finite range `[a, b]` with optional
/// interior breakpoints. Returns `(value, error, converged)`.
fn adaptive_1d<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, breaks: &[f64], opts: &QuadOptions) -> (f64, f64, bool) {
    let mut edges: Vec<f64> = Vec::new();
    let n = opts.initial_partition.max(1);
    for i in 0..=n {
        edges.push(a + (b - a) * i as f64 / n as f64);
    }
    edges.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (b - a).abs());
    *edges.last_mut().unwrap() = b;

    let mut heap = BinaryHeap::new();
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    for w in edges.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1]);
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    let min_width = 1e-14 * (b - a).abs().max(f64::MIN_POSITIVE);
    let mut value: f64 = heap.iter().map(|s| s.value).sum();
    let mut error: f64 = heap.iter().map(|s| s.error).sum();
    let mut splits = 0usize;
    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= tol || splits >= opts.max_subdivisions || !value.is_finite() {
            // Running sums drift; settle on exact sums before deciding.
            value = heap.iter().fold(frozen_value, |acc, s| acc + s.value);
            error = heap.iter().fold(frozen_error, |acc, s| acc + s.error);
            let tol = opts.abs_tol.max(opts.rel_tol * value.abs());
            if error <= tol {
                return (value, error, true);
            }
            if splits >= opts.max_subdivisions || !value.is_finite() {
                return (value, error, false);
            }
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => return (value, error, error <= tol),
        };
        if worst.b - worst.a <= min_width {
            // Cannot refine further in floating point.
            frozen_value += worst.value;
            frozen_error += worst.error;
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        splits += 1;
    }
}

struct Nested<'a> {
    f: &'a dyn Fn(&[f64]) -> f64,
    maps: Vec<AxisMap>,
    breaks: Vec<Vec<f64>>,
    opts: QuadOptions,
    point: [Cell<f64>; MAX_DIM],
    evaluations: Cell<u64>,
    worst_inner_rel: Cell<f64>,
    all_converged: Cell<bool>,
}

impl Nested<'_> {
    fn integrate_axis(&self, axis: usize, opts: &QuadOptions) -> (f64, f64, bool) {
        let map = self.maps[axis];
        let (ta, tb) = map.t_range();
        let last = axis + 1 == self.maps.len();
        let inner_opts = QuadOptions {
            rel_tol: opts.rel_tol * 0.1,
            abs_tol: opts.abs_tol * 0.1,
            ..opts.clone()
        };
        let integrand = |t: f64| -> f64 {
            let (x, jac) = map.apply(t);
            if !x.is_finite() || jac == 0.0 || !jac.is_finite() {
                return 0.0;
            }
            self.point[axis].set(x);
            let inner = if last {
                let mut buf = [0.0; MAX_DIM];
                for (slot, cell) in buf.iter_mut().zip(&self.point) {
                    *slot = cell.get();
                }
                self.evaluations.set(self.evaluations.get() + 1);
                (self.f)(&buf[..self.maps.len()])
            } else {
                let (v, e, ok) = self.integrate_axis(axis + 1, &inner_opts);
                if !ok {
                    self.all_converged.set(false);
                }
                if v != 0.0 {
                    let rel = e / v.abs();
                    if rel > self.worst_inner_rel.get() {
                        self.worst_inner_rel.set(rel);
                    }
                }
                v
            };
            let value = inner * jac;
            if value.is_finite() {
                value
            } else {
                0.0
            }
        };
        let breaks: Vec<f64> = self.breaks[axis].iter().map(|&x| map.to_t(x)).collect();
        adaptive_1d(integrand, ta, tb, &breaks, opts)
    }
}

/// Integrate `f` over a box to relative tolerance `rel_tol`.
pub fn quad_integrate<F: Fn(&[f64]) -> f64>(f: F, domain: &BoxSupport, rel_tol: f64) -> IntegralResult {
    quad_integrate_with(f, domain, &QuadOptions::with_rel_tol(rel_tol))
}

pub fn quad_integrate_with<F: Fn(&[f64]) -> f64>(f: F, domain: &BoxSupport, opts: &QuadOptions) -> IntegralResult {
    let dim = domain.dim();
    assert!(
        (1..=MAX_DIM).contains(&dim),
        "quadrature supports 1..={MAX_DIM} dimensions"
    );
    let maps = domain
        .intervals()
        .iter()
        .enumerate()
        .map(|(i, &iv)| {
            let (c, s) = opts.infinite_scales.get(i).copied().unwrap_or((0.0, 1.0));
            AxisMap::new(iv, c, s)
        })
        .collect();
    let breaks = (0..dim)
        .map(|i| opts.breakpoints.get(i).cloned().unwrap_or_default())
        .collect();
    let nested = Nested {
        f: &f,
        maps,
        breaks,
        opts: opts.clone(),
        point: Default::default(),
        evaluations: Cell::new(0),
        worst_inner_rel: Cell::new(0.0),
        all_converged: Cell::new(true),
    };
    let (value, outer_err, ok) = nested.integrate_axis(0, &nested.opts);
    let error = outer_err + nested.worst_inner_rel.get() * value.abs();
    IntegralResult {
        value,
        error,
        method: Method::Quadrature,
        evaluations: nested.evaluations.get().max(1),
        converged: ok && nested.all_converged.get(),
    }
}

/// One-dimensional convenience wrapper over `[a, b]` (either end may be infinite).
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> IntegralResult {
    let domain = BoxSupport::new(alloc::vec![Interval { lo: a, hi: b }]).expect("integrate_1d needs a < b");
    quad_integrate_with(|x: &[f64]| f(x[0]), &domain, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn linear_on_unit_interval() {
        let r = integrate_1d(|x| x, 0.0, 1.0, &QuadOptions::with_rel_tol(1e-12));
        assert!((r.value - 0.5).abs() < 1e-12);
        assert!(r.converged);
        assert!(r.evaluations > 0);
    }

    #[test]
    fn gaussian_kernel_on_real_line() {
        // exp(-9 s^2 / 2) integrates to sqrt(2 pi) / 3.
        let r = integrate_1d(
            |s| (-4.5 * s * s).exp(),
            f64::NEG_INFINITY,
            f64::INFINITY,
            &QuadOptions::with_rel_tol(1e-12),
        );
        let truth = (2.0 * PI).sqrt() / 3.0;
        assert!(((r.value - truth) / truth).abs() < 1e-11, "{}", r.value);
    }

    #[test]
    fn half_infinite_exponential() {
        let r = integrate_1d(|x| (-x).exp(), 2.0, f64::INFINITY, &QuadOptions::with_rel_tol(1e-12));
        assert!((r.value - (-2.0f64).exp()).abs() < 1e-13);
        let l = integrate_1d(|x| x.exp(), f64::NEG_INFINITY, 0.0, &QuadOptions::with_rel_tol(1e-12));
        assert!((l.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn indicator_with_discontinuities() {
        let r = integrate_1d(
            |x| if (0.3..=0.7).contains(&x) { 1.0 } else { 0.0 },
            0.0,
            1.0,
            &QuadOptions::with_rel_tol(1e-10),
        );
        assert!((r.value - 0.4).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn two_dimensional_polynomial() {
        let domain = BoxSupport::from_bounds(&[(0.0, 1.0), (0.0, 2.0)]).unwrap();
        let r = quad_integrate(|x| x[0] * x[1] * x[1], &domain, 1e-12);
        assert!((r.value - 8.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_infinite_map_finds_narrow_gaussian() {
        let sigma = 1e-4;
        let opts = QuadOptions::with_rel_tol(1e-10).infinite_scales(alloc::vec![(0.0, sigma)]);
        let r = integrate_1d(
            |x| (-0.5 * (x / sigma).powi(2)).exp(),
            f64::NEG_INFINITY,
            f64::INFINITY,
            &opts,
        );
        let truth = sigma * (2.0 * PI).sqrt();
        assert!(((r.value - truth) / truth).abs() < 1e-9);
    }

    #[test]
    fn subdivision_limit_flags_unconverged() {
        let opts = QuadOptions {
            max_subdivisions: 3,
            ..QuadOptions::with_rel_tol(1e-14)
        };
        let r = integrate_1d(|x| 1.0 / x.sqrt(), 0.0, 1.0, &opts);
        assert!(!r.converged);
    }
}
