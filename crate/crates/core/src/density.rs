//! Probability densities over low-dimensional boxes.
//!
//! A density is an evaluator plus support metadata. Values are zero outside
//! the support box; finer supports (polygons, graphs of forward maps) are
//! expressed as indicator factors inside the evaluator.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::diffeo::Diffeomorphism;
use crate::domain::{BoxSupport, Interval};
use crate::error::{Error, Result};
use crate::oracle::rng::SeededRng;
use crate::oracle::{quad_integrate_with, IntegralResult, QuadOptions};
use crate::units::UnitSignature;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934_381_87;

pub type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    UniformBox,
    GaussianIid,
    Discrete,
    Product,
    Custom,
}

/// Finitely many atoms with probabilities summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteDistribution {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidParameter("discrete distribution without atoms".into()));
        }
        let mut total = 0.0;
        for &(v, p) in &atoms {
            if !v.is_finite() {
                return Err(Error::InvalidParameter("non-finite atom".into()));
            }
            if !(p >= 0.0) {
                return Err(Error::NegativeProbability(p));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(total));
        }
        Ok(Self { atoms })
    }

    /// Mass `p` on `a` and `1 - p` on `b`.
    pub fn two_point(a: f64, b: f64, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(alloc::format!(
                "probability {p} outside [0, 1]"
            )));
        }
        Self::new(vec![(a, p), (b, 1.0 - p)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// Total mass on atoms equal to `v`.
    pub fn mass(&self, v: f64) -> f64 {
        self.atoms.iter().filter(|a| a.0 == v).map(|a| a.1).sum()
    }

    pub fn sample(&self, rng: &mut SeededRng) -> f64 {
        let w: Vec<f64> = self.atoms.iter().map(|a| a.1).collect();
        self.atoms[rng.categorical(&w)].0
    }

    fn hull(&self) -> Interval {
        let lo = self.atoms.iter().map(|a| a.0).fold(f64::INFINITY, f64::min);
        let hi = self.atoms.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
        Interval {
            lo: lo - 0.5,
            hi: hi + 0.5,
        }
    }
}

#[derive(Clone)]
enum Kind {
    Constant(f64),
    Gaussian { mean: Vec<f64>, sigma: Vec<f64> },
    Discrete(DiscreteDistribution),
    Product(Vec<Density>),
    Custom { f: Evaluator, hints: Vec<(f64, f64)> },
    Scaled { base: Arc<Density>, factor: f64 },
}

#[derive(Clone)]
pub struct Density {
    support: BoxSupport,
    coord_units: Vec<UnitSignature>,
    /// Extra unit factor carried by unnormalized densities.
    value_unit: UnitSignature,
    improper: bool,
    kind: Kind,
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density")
            .field("kind", &self.kind())
            .field("support", &self.support)
            .field("unit", &self.unit())
            .field("improper", &self.improper)
            .finish()
    }
}

impl Density {
    fn with_kind(support: BoxSupport, kind: Kind) -> Self {
        let dim = support.dim();
        Self {
            support,
            coord_units: vec![UnitSignature::dimensionless(); dim],
            value_unit: UnitSignature::dimensionless(),
            improper: false,
            kind,
        }
    }

    /// Normalized uniform density on a finite box.
    pub fn uniform_box(support: BoxSupport) -> Result<Self> {
        if !support.is_finite() {
            return Err(Error::ImproperDensity);
        }
        let v = 1.0 / support.volume();
        Ok(Self::with_kind(support, Kind::Constant(v)))
    }

    /// Unnormalized constant `value` on a box.
    pub fn constant(support: BoxSupport, value: f64) -> Result<Self> {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("constant density {value}")));
        }
        Ok(Self::with_kind(support, Kind::Constant(value)))
    }

    /// The everywhere-one function on `R^dim`, flagged improper.
    pub fn improper_flat(dim: usize) -> Self {
        let mut d = Self::with_kind(BoxSupport::unbounded(dim), Kind::Constant(1.0));
        d.improper = true;
        d
    }

    /// Independent normals with a common standard deviation.
    pub fn gaussian_iid(mean: Vec<f64>, sigma: f64) -> Result<Self> {
        let n = mean.len();
        Self::gaussian_diag(mean, vec![sigma; n])
    }

    pub fn gaussian_diag(mean: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if mean.is_empty() || mean.len() != sigma.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: sigma.len(),
            });
        }
        if let Some(&s) = sigma.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter(alloc::format!("standard deviation {s}")));
        }
        let support = BoxSupport::unbounded(mean.len());
        Ok(Self::with_kind(support, Kind::Gaussian { mean, sigma }))
    }

    pub fn discrete(dist: DiscreteDistribution) -> Self {
        let support = BoxSupport::new(vec![dist.hull()]).expect("hull is nonempty");
        Self::with_kind(support, Kind::Discrete(dist))
    }

    /// Independent product; coordinates concatenate in order.
    pub fn product(parts: Vec<Density>) -> Result<Self> {
        let mut it = parts.iter();
        let first = it.next().ok_or(Error::DimensionMismatch { expected: 1, found: 0 })?;
        let mut support = first.support.clone();
        let mut coord_units = first.coord_units.clone();
        let mut value_unit = first.value_unit.clone();
        for p in it {
            support = support.concat(&p.support);
            coord_units.extend(p.coord_units.iter().cloned());
            value_unit = &value_unit * &p.value_unit;
        }
        let improper = parts.iter().any(|p| p.improper);
        Ok(Self {
            support,
            coord_units,
            value_unit,
            improper,
            kind: Kind::Product(parts),
        })
    }

    /// Arbitrary nonnegative evaluator on a box.
    pub fn custom<F>(support: BoxSupport, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let dim = support.dim();
        Self::with_kind(
            support,
            Kind::Custom {
                f: Arc::new(f),
                hints: vec![(0.0, 1.0); dim],
            },
        )
    }

    /// `(center, scale)` per coordinate, used when integrating over infinite ranges.
    pub fn with_scale_hints(mut self, hints: Vec<(f64, f64)>) -> Self {
        if let Kind::Custom { hints: h, .. } = &mut self.kind {
            if hints.len() == h.len() {
                *h = hints;
            }
        }
        self
    }

    pub fn with_units(mut self, coord_units: Vec<UnitSignature>) -> Result<Self> {
        if coord_units.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: coord_units.len(),
            });
        }
        self.coord_units = coord_units;
        Ok(self)
    }

    pub fn with_value_unit(mut self, unit: UnitSignature) -> Self {
        self.value_unit = unit;
        self
    }

    pub fn into_improper(mut self) -> Self {
        self.improper = true;
        self
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn support(&self) -> &BoxSupport {
        &self.support
    }

    pub fn is_improper(&self) -> bool {
        self.improper
    }

    pub fn coord_units(&self) -> &[UnitSignature] {
        &self.coord_units
    }

    pub(crate) fn value_unit(&self) -> &UnitSignature {
        &self.value_unit
    }

    /// Unit of the density value: reciprocal coordinate units times any
    /// carried factor.
    pub fn unit(&self) -> UnitSignature {
        let coords = UnitSignature::product(&self.coord_units);
        &coords.recip() * &self.value_unit
    }

    pub fn kind(&self) -> DensityKind {
        match &self.kind {
            Kind::Constant(_) => DensityKind::UniformBox,
            Kind::Gaussian { .. } => DensityKind::GaussianIid,
            Kind::Discrete(_) => DensityKind::Discrete,
            Kind::Product(_) => DensityKind::Product,
            Kind::Custom { .. } => DensityKind::Custom,
            Kind::Scaled { base, .. } => base.kind(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.support.check_point(x)?;
        if x.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter("NaN coordinate".into()));
        }
        let v = self.raw(x);
        if v < 0.0 {
            return Err(Error::NegativeProbability(v));
        }
        Ok(if v.is_nan() { 0.0 } else { v })
    }

    /// Unchecked evaluation for hot loops; `x` must have length `dim`.
    /// NaN and negative evaluator output are reported as zero.
    pub fn value(&self, x: &[f64]) -> f64 {
        let v = self.raw(x);
        if v > 0.0 {
            v
        } else {
            0.0
        }
    }

    fn raw(&self, x: &[f64]) -> f64 {
        if !self.support.contains(x) {
            return 0.0;
        }
        match &self.kind {
            Kind::Constant(c) => *c,
            Kind::Gaussian { mean, sigma } => {
                let mut q = 0.0;
                let mut norm = 1.0;
                for ((&xi, &mi), &si) in x.iter().zip(mean).zip(sigma) {
                    let z = (xi - mi) / si;
                    q += z * z;
                    norm *= FRAC_1_SQRT_2PI / si;
                }
                norm * (-0.5 * q).exp()
            }
            Kind::Discrete(d) => d.mass(x[0]),
            Kind::Product(parts) => {
                let mut off = 0;
                let mut v = 1.0;
                for p in parts {
                    let n = p.dim();
                    v *= p.raw(&x[off..off + n]);
                    if v == 0.0 {
                        return 0.0;
                    }
                    off += n;
                }
                v
            }
            Kind::Custom { f, .. } => f(x),
            Kind::Scaled { base, factor } => factor * base.raw(x),
        }
    }

    /// `factor · p`, same support and units.
    pub fn scaled(&self, factor: f64) -> Density {
        let kind = match &self.kind {
            Kind::Constant(c) => Kind::Constant(c * factor),
            Kind::Scaled { base, factor: f0 } => Kind::Scaled {
                base: base.clone(),
                factor: f0 * factor,
            },
            _ => Kind::Scaled {
                base: Arc::new(self.clone()),
                factor,
            },
        };
        Density { kind, ..self.clone() }
    }

    /// Same evaluator with the support cut down to `support ∩ self.support`.
    pub fn restricted(&self, support: &BoxSupport) -> Result<Density> {
        let cut = self.support.intersect(support).ok_or(Error::ContradictoryInformation)?;
        let base = Arc::new(self.clone());
        let hints = self.scale_hints();
        let mut d = Density::custom(cut, move |x| base.raw(x)).with_scale_hints(hints);
        d.coord_units = self.coord_units.clone();
        d.value_unit = self.value_unit.clone();
        d.improper = self.improper;
        Ok(d)
    }

    pub fn scale_hints(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            Kind::Gaussian { mean, sigma } => mean.iter().copied().zip(sigma.iter().copied()).collect(),
            Kind::Product(parts) => parts.iter().flat_map(|p| p.scale_hints()).collect(),
            Kind::Custom { hints, .. } => hints.clone(),
            Kind::Scaled { base, .. } => base.scale_hints(),
            _ => self
                .support
                .intervals()
                .iter()
                .map(|iv| (iv.midpoint(), if iv.is_finite() { iv.width() } else { 1.0 }))
                .collect(),
        }
    }

    /// Quadrature settings adapted to this density's support and scales.
    pub fn quad_options(&self, rel_tol: f64) -> QuadOptions {
        QuadOptions::with_rel_tol(rel_tol).infinite_scales(self.scale_hints())
    }

    /// Integral over the support. Discrete densities integrate against the
    /// counting measure.
    pub fn integrate(&self, rel_tol: f64) -> IntegralResult {
        if let Kind::Discrete(d) = &self.kind {
            let total = d.atoms().iter().map(|a| a.1).sum();
            return IntegralResult::analytic(total);
        }
        let domain = active_box(&self.support, |x| self.value(x));
        quad_integrate_with(|x| self.value(x), &domain, &self.quad_options(rel_tol))
    }

    /// Rescale to unit mass. Returns the density and the constant `1/∫p`.
    pub fn normalize(&self, tol: f64) -> Result<(Density, f64)> {
        if self.improper {
            return Err(Error::ImproperDensity);
        }
        let r = self.integrate((tol * 0.1).max(1e-13));
        if !r.value.is_finite() || r.value > 1e300 || (!r.converged && r.error > r.value.abs()) {
            return Err(Error::Divergent);
        }
        if r.value <= 0.0 {
            return Err(Error::ContradictoryInformation);
        }
        let c = 1.0 / r.value;
        let mut d = self.scaled(c);
        d.value_unit = UnitSignature::dimensionless();
        Ok((d, c))
    }

    /// Density of `h(X)` when `X` has density `self`.
    pub fn pushforward(&self, h: &Diffeomorphism) -> Result<Density> {
        if h.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: h.dim(),
            });
        }
        let support = h.image_box(&self.support)?;
        let probe = if self.dim() == 1 { 9 } else { 5 };
        if self.dim() <= 3 {
            for x in self.support.interior_grid(probe) {
                h.jac_abs_det(&x)?;
            }
        }
        let hints = (0..self.dim()).map(|i| h.map_hint(i, self.scale_hints()[i])).collect();
        let inv = h.inverse();
        let base = self.clone();
        let dim = self.dim();
        let f = move |y: &[f64]| -> f64 {
            let mut buf = [0.0f64; 8];
            let x = &mut buf[..dim];
            match inv.forward_into(y, x) {
                Some(j) if j.is_finite() => base.raw(x) * j,
                _ => 0.0,
            }
        };
        let mut q = Density::custom(support, f).with_scale_hints(hints);
        q.coord_units = h.map_units(&self.coord_units);
        q.value_unit = self.value_unit.clone();
        q.improper = self.improper;
        Ok(q)
    }

    /// Independent draw; available for uniform, Gaussian, discrete and
    /// product kinds (and rescalings of them).
    pub fn sample(&self, rng: &mut SeededRng) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.dim());
        self.sample_into(rng, &mut out)?;
        Ok(out)
    }

    fn sample_into(&self, rng: &mut SeededRng, out: &mut Vec<f64>) -> Result<()> {
        match &self.kind {
            Kind::Constant(_) if self.support.is_finite() && !self.improper => {
                for iv in self.support.intervals() {
                    out.push(iv.lo + rng.uniform() * iv.width());
                }
            }
            Kind::Gaussian { mean, sigma } => {
                for (m, s) in mean.iter().zip(sigma) {
                    out.push(m + s * rng.normal());
                }
            }
            Kind::Discrete(d) => out.push(d.sample(rng)),
            Kind::Product(parts) => {
                for p in parts {
                    p.sample_into(rng, out)?;
                }
            }
            Kind::Scaled { base, .. } => base.sample_into(rng, out)?,
            _ => return Err(Error::NotSamplable),
        }
        Ok(())
    }
}

/// Smallest grid-aligned sub-box of a finite `support` that contains every
/// grid cell where `f` is nonzero, padded by one cell. Infinite or
/// high-dimensional supports are returned unchanged.
pub(crate) fn active_box<F: Fn(&[f64]) -> f64>(support: &BoxSupport, f: F) -> BoxSupport {
    let dim = support.dim();
    let n = match dim {
        1 => 4096,
        2 => 256,
        3 => 40,
        _ => return support.clone(),
    };
    if !support.is_finite() {
        return support.clone();
    }
    let ivs = support.intervals();
    let mut lo = vec![usize::MAX; dim];
    let mut hi = vec![0usize; dim];
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    let mut any = false;
    'scan: loop {
        for d in 0..dim {
            x[d] = ivs[d].lo + (idx[d] as f64 + 0.5) / n as f64 * ivs[d].width();
        }
        if f(&x) > 0.0 {
            any = true;
            for (d, &i) in idx.iter().enumerate() {
                lo[d] = lo[d].min(i);
                hi[d] = hi[d].max(i);
            }
        }
        for i in idx.iter_mut() {
            *i += 1;
            if *i < n {
                continue 'scan;
            }
            *i = 0;
        }
        break;
    }
    if !any {
        return support.clone();
    }
    let intervals = (0..dim)
        .map(|d| {
            let w = ivs[d].width() / n as f64;
            let a = if lo[d] == 0 {
                ivs[d].lo
            } else {
                ivs[d].lo + (lo[d] - 1) as f64 * w
            };
            let b = if hi[d] + 1 >= n {
                ivs[d].hi
            } else {
                ivs[d].lo + (hi[d] + 2) as f64 * w
            };
            Interval { lo: a, hi: b }
        })
        .collect();
    BoxSupport::new(intervals).unwrap_or_else(|_| support.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffeo::CoordMap;

    fn unit_square() -> BoxSupport {
        BoxSupport::cube(2, 0.0, 1.0).unwrap()
    }

    #[test]
    fn uniform_values() {
        let u = Density::uniform_box(unit_square()).unwrap();
        assert_eq!(u.eval(&[0.5, 0.5]).unwrap(), 1.0);
        assert_eq!(u.eval(&[2.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(u.eval(&[0.5]), Err(Error::DimensionMismatch { .. })));
        assert_eq!(u.kind(), DensityKind::UniformBox);
    }

    #[test]
    fn standard_normal_mode() {
        let g = Density::gaussian_iid(vec![0.0], 1.0).unwrap();
        let v = g.eval(&[0.0]).unwrap();
        assert!((v - 1.0 / (2.0 * core::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn normalize_constant_box() {
        let p = Density::constant(BoxSupport::cube(1, 0.0, 4.0).unwrap(), 2.0).unwrap();
        let (q, c) = p.normalize(1e-10).unwrap();
        assert!((c - 0.125).abs() < 1e-12);
        assert!((q.eval(&[1.0]).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn normalize_inverse_fourth_power() {
        let p = Density::custom(BoxSupport::cube(1, 1.0, 2.0).unwrap(), |x| x[0].powi(-4));
        let (_, c) = p.normalize(1e-10).unwrap();
        assert!((c - 24.0 / 7.0).abs() < 1e-9);
    }

    #[test]
    fn normalize_zero_is_contradictory() {
        let p = Density::custom(unit_square(), |_| 0.0);
        assert_eq!(p.normalize(1e-8).unwrap_err(), Error::ContradictoryInformation);
    }

    #[test]
    fn improper_refuses_normalization() {
        assert_eq!(
            Density::improper_flat(1).normalize(1e-8).unwrap_err(),
            Error::ImproperDensity
        );
    }

    #[test]
    fn reciprocal_pushforward_of_uniform() {
        let p = Density::uniform_box(BoxSupport::cube(1, 1.0, 2.0).unwrap()).unwrap();
        let q = p.pushforward(&Diffeomorphism::reciprocal(1)).unwrap();
        assert!((q.support().interval(0).lo - 0.5).abs() < 1e-15);
        for s in [0.55, 0.7, 0.95] {
            assert!((q.eval(&[s]).unwrap() - 1.0 / (s * s)).abs() < 1e-12);
        }
        let r = q.integrate(1e-10);
        assert!((r.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn velocity_to_slowness_prior_shape() {
        let p = Density::uniform_box(BoxSupport::cube(2, 1.0, 5.0).unwrap()).unwrap();
        let q = p.pushforward(&Diffeomorphism::reciprocal(2)).unwrap();
        let a = q.eval(&[0.25, 0.5]).unwrap();
        let b = q.eval(&[0.5, 0.5]).unwrap();
        assert!((a / b - 4.0).abs() < 1e-12);
    }

    #[test]
    fn pushforward_rejects_singular_support() {
        let p = Density::uniform_box(BoxSupport::cube(1, -1.0, 1.0).unwrap()).unwrap();
        assert!(p.pushforward(&Diffeomorphism::reciprocal(1)).is_err());
    }

    #[test]
    fn units_of_pushforward_and_product() {
        let v = Density::uniform_box(BoxSupport::cube(1, 1.0, 5.0).unwrap())
            .unwrap()
            .with_units(vec![UnitSignature::velocity()])
            .unwrap();
        assert_eq!(v.unit(), UnitSignature::slowness());
        let s = v.pushforward(&Diffeomorphism::reciprocal(1)).unwrap();
        assert_eq!(s.unit(), UnitSignature::velocity());
        let both = Density::product(vec![v.clone(), s.clone()]).unwrap();
        assert_eq!(both.unit(), &v.unit() * &s.unit());
    }

    #[test]
    fn sampling_kinds() {
        let mut rng = SeededRng::new(1);
        let u = Density::uniform_box(BoxSupport::from_bounds(&[(2.0, 3.0)]).unwrap()).unwrap();
        let x = u.sample(&mut rng).unwrap();
        assert!((2.0..=3.0).contains(&x[0]));
        let d = Density::discrete(DiscreteDistribution::two_point(1.0, 2.0, 1.0).unwrap());
        assert_eq!(d.sample(&mut rng).unwrap(), vec![1.0]);
        let c = Density::custom(unit_square(), |_| 1.0);
        assert_eq!(c.sample(&mut rng), Err(Error::NotSamplable));
    }

    #[test]
    fn discrete_validation() {
        assert!(DiscreteDistribution::new(vec![(1.0, 0.5), (2.0, 0.4)]).is_err());
        assert!(DiscreteDistribution::new(vec![(1.0, -0.1), (2.0, 1.1)]).is_err());
        let d = DiscreteDistribution::new(vec![(1.0, 0.25), (2.0, 0.75)]).unwrap();
        assert_eq!(d.mass(2.0), 0.75);
        assert_eq!(d.mass(3.0), 0.0);
    }

    #[test]
    fn active_box_trims_to_support() {
        let b = active_box(&unit_square(), |x| if x[0] > 0.4 && x[0] < 0.6 { 1.0 } else { 0.0 });
        let iv = b.interval(0);
        assert!(iv.lo < 0.4 && iv.lo > 0.39 && iv.hi > 0.6 && iv.hi < 0.61);
    }

    #[test]
    fn gaussian_pushforward_under_log_integrates() {
        let g = Density::gaussian_iid(vec![0.0], 0.5).unwrap();
        let h = Diffeomorphism::separable(vec![CoordMap::Exp]);
        let q = g.pushforward(&h).unwrap();
        let r = q.integrate(1e-9);
        assert!((r.value - 1.0).abs() < 1e-7, "{r:?}");
    }
}
