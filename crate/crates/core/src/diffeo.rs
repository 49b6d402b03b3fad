//! Invertible coordinate changes.
//!
//! Every diffeomorphism here is separable: each output coordinate is a chain
//! of monotone one-dimensional maps applied to the matching input coordinate.
//! That covers the velocity/slowness reciprocal, unit rescalings, and
//! log/exp reparameterizations, and it makes box images exact boxes.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::domain::{BoxSupport, Interval};
use crate::error::{Error, Result};
use crate::units::UnitSignature;

/// Default radius of the excluded ball around the reciprocal's singularity.
pub const RECIPROCAL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "kebab-case")]
pub enum CoordMap {
    Identity,
    /// `y = 1/x`, undefined for `|x| <= eps`.
    Reciprocal {
        eps: f64,
    },
    /// `y = scale·x + offset`; the output unit is the input unit times `unit`.
    Affine {
        scale: f64,
        offset: f64,
        #[serde(default)]
        unit: UnitSignature,
    },
    /// `y = ln x` on `x > 0`.
    Log,
    /// `y = exp x`.
    Exp,
}

impl CoordMap {
    pub fn reciprocal() -> Self {
        CoordMap::Reciprocal { eps: RECIPROCAL_EPS }
    }

    pub fn scale(factor: f64) -> Self {
        CoordMap::Affine {
            scale: factor,
            offset: 0.0,
            unit: UnitSignature::dimensionless(),
        }
    }

    fn in_domain(&self, x: f64) -> bool {
        match *self {
            CoordMap::Reciprocal { eps } => x.abs() > eps && x.is_finite(),
            CoordMap::Log => x > 0.0 && x.is_finite(),
            _ => x.is_finite(),
        }
    }

    fn apply(&self, x: f64) -> f64 {
        match *self {
            CoordMap::Identity => x,
            CoordMap::Reciprocal { .. } => 1.0 / x,
            CoordMap::Affine { scale, offset, .. } => scale * x + offset,
            CoordMap::Log => x.ln(),
            CoordMap::Exp => x.exp(),
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        match *self {
            CoordMap::Identity => 1.0,
            CoordMap::Reciprocal { .. } => -1.0 / (x * x),
            CoordMap::Affine { scale, .. } => scale,
            CoordMap::Log => 1.0 / x,
            CoordMap::Exp => x.exp(),
        }
    }

    fn inverse(&self) -> CoordMap {
        match self {
            CoordMap::Identity => CoordMap::Identity,
            CoordMap::Reciprocal { eps } => CoordMap::Reciprocal { eps: *eps },
            CoordMap::Affine { scale, offset, unit } => CoordMap::Affine {
                scale: 1.0 / scale,
                offset: -offset / scale,
                unit: unit.recip(),
            },
            CoordMap::Log => CoordMap::Exp,
            CoordMap::Exp => CoordMap::Log,
        }
    }

    fn map_unit(&self, u: &UnitSignature) -> UnitSignature {
        match self {
            CoordMap::Identity => u.clone(),
            CoordMap::Reciprocal { .. } => u.recip(),
            CoordMap::Affine { unit, .. } => u * unit,
            CoordMap::Log | CoordMap::Exp => UnitSignature::dimensionless(),
        }
    }

    fn image(&self, iv: Interval) -> Result<Interval> {
        match *self {
            CoordMap::Reciprocal { eps } => {
                if iv.lo <= eps && iv.hi >= -eps {
                    return Err(Error::Singular(0.0));
                }
                let a = 1.0 / iv.hi;
                let b = 1.0 / iv.lo;
                Ok(Interval {
                    lo: a.min(b),
                    hi: a.max(b),
                })
            }
            CoordMap::Log => {
                if iv.lo < 0.0 {
                    return Err(Error::Singular(0.0));
                }
                Ok(Interval {
                    lo: iv.lo.ln(),
                    hi: iv.hi.ln(),
                })
            }
            CoordMap::Affine { scale: 0.0, .. } => Err(Error::NonPositiveJacobian(0.0)),
            _ => {
                let a = self.apply(iv.lo);
                let b = self.apply(iv.hi);
                Ok(Interval {
                    lo: a.min(b),
                    hi: a.max(b),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diffeomorphism {
    chains: Vec<Vec<CoordMap>>,
}

impl Diffeomorphism {
    pub fn separable(maps: Vec<CoordMap>) -> Self {
        Self {
            chains: maps.into_iter().map(|m| vec![m]).collect(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::separable(vec![CoordMap::Identity; dim])
    }

    /// Coordinate-wise `x ↦ 1/x` (velocity ↔ slowness).
    pub fn reciprocal(dim: usize) -> Self {
        Self::reciprocal_with_eps(dim, RECIPROCAL_EPS)
    }

    pub fn reciprocal_with_eps(dim: usize, eps: f64) -> Self {
        Self::separable(vec![CoordMap::Reciprocal { eps }; dim])
    }

    /// Coordinate-wise multiplication by `factors`.
    pub fn scaling(factors: &[f64]) -> Self {
        Self::separable(factors.iter().map(|&c| CoordMap::scale(c)).collect())
    }

    pub fn dim(&self) -> usize {
        self.chains.len()
    }

    pub fn chains(&self) -> &[Vec<CoordMap>] {
        &self.chains
    }

    /// Apply `self`, then `then`.
    pub fn then(&self, then: &Diffeomorphism) -> Result<Diffeomorphism> {
        self.check_dim(then.dim())?;
        let chains = self
            .chains
            .iter()
            .zip(&then.chains)
            .map(|(a, b)| a.iter().chain(b).cloned().collect())
            .collect();
        Ok(Self { chains })
    }

    pub fn inverse(&self) -> Diffeomorphism {
        let chains = self
            .chains
            .iter()
            .map(|c| c.iter().rev().map(CoordMap::inverse).collect())
            .collect();
        Self { chains }
    }

    /// The one-dimensional map acting on coordinate `i`.
    pub fn coordinate(&self, i: usize) -> Diffeomorphism {
        Self {
            chains: vec![self.chains[i].clone()],
        }
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            });
        }
        Ok(())
    }

    /// Image of one coordinate and the chain derivative, or `None` outside the domain.
    fn apply_chain(chain: &[CoordMap], mut x: f64) -> Option<(f64, f64)> {
        let mut d = 1.0;
        for m in chain {
            if !m.in_domain(x) {
                return None;
            }
            d *= m.derivative(x);
            x = m.apply(x);
        }
        Some((x, d))
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self
                .chains
                .iter()
                .zip(x)
                .all(|(c, &v)| Self::apply_chain(c, v).is_some())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        self.chains
            .iter()
            .zip(x)
            .map(|(c, &v)| Self::apply_chain(c, v).map(|r| r.0).ok_or(Error::Singular(v)))
            .collect()
    }

    pub fn inverse_apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.inverse().forward(y)
    }

    /// `|det ∂h_i/∂x_j|` at `x`.
    pub fn jac_abs_det(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        let mut det = 1.0;
        for (c, &v) in self.chains.iter().zip(x) {
            let (_, d) = Self::apply_chain(c, v).ok_or(Error::Singular(v))?;
            det *= d;
        }
        let det = det.abs();
        if !(det > 0.0 && det.is_finite()) {
            return Err(Error::NonPositiveJacobian(det));
        }
        Ok(det)
    }

    /// Allocation-free forward map into `out`; returns the absolute Jacobian
    /// determinant, or `None` outside the domain.
    pub(crate) fn forward_into(&self, x: &[f64], out: &mut [f64]) -> Option<f64> {
        let mut det = 1.0;
        for ((c, &v), o) in self.chains.iter().zip(x).zip(out.iter_mut()) {
            let (y, d) = Self::apply_chain(c, v)?;
            *o = y;
            det *= d;
        }
        Some(det.abs())
    }

    pub fn image_box(&self, support: &BoxSupport) -> Result<BoxSupport> {
        self.check_dim(support.dim())?;
        let intervals = self
            .chains
            .iter()
            .zip(support.intervals())
            .map(|(c, &iv)| c.iter().try_fold(iv, |iv, m| m.image(iv)))
            .collect::<Result<Vec<_>>>()?;
        BoxSupport::new(intervals)
    }

    pub fn map_units(&self, units: &[UnitSignature]) -> Vec<UnitSignature> {
        self.chains
            .iter()
            .zip(units)
            .map(|(c, u)| c.iter().fold(u.clone(), |acc, m| m.map_unit(&acc)))
            .collect()
    }

    /// Forward image of a `(center, scale)` hint, used for quadrature of
    /// infinite ranges.
    pub(crate) fn map_hint(&self, i: usize, (center, scale): (f64, f64)) -> (f64, f64) {
        match Self::apply_chain(&self.chains[i], center) {
            Some((c, d)) => (c, (d.abs() * scale).max(f64::MIN_POSITIVE)),
            None => (center, scale),
        }
    }
}
