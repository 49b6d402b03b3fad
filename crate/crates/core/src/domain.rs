//! Axis-aligned boxes, possibly half- or fully infinite.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Closed interval `[lo, hi]`; requires `lo < hi`.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::EmptyBox { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn midpoint(&self) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * (self.lo + self.hi),
            (true, false) => self.lo + 1.0,
            (false, true) => self.hi - 1.0,
            (false, false) => 0.0,
        }
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Interval { lo, hi })
    }

    /// `n` interior sample points, evenly spread over finite intervals and
    /// spread on a unit scale away from the finite end otherwise.
    pub fn interior_samples(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) / n as f64;
                match (self.lo.is_finite(), self.hi.is_finite()) {
                    (true, true) => self.lo + u * self.width(),
                    (true, false) => self.lo + u / (1.0 - u),
                    (false, true) => self.hi - u / (1.0 - u),
                    (false, false) => (u - 0.5) / (u * (1.0 - u)),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSupport {
    intervals: Vec<Interval>,
}

impl BoxSupport {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        for iv in &intervals {
            Interval::new(iv.lo, iv.hi)?;
        }
        Ok(Self { intervals })
    }

    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        let intervals = bounds
            .iter()
            .map(|&(lo, hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        Self::new(intervals)
    }

    /// `dim` copies of the same interval.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        let iv = Interval::new(lo, hi)?;
        Self::new(alloc::vec![iv; dim])
    }

    pub fn unbounded(dim: usize) -> Self {
        Self {
            intervals: alloc::vec![Interval::real_line(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn interval(&self, i: usize) -> Interval {
        self.intervals[i]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.intervals.iter().zip(x).all(|(iv, &v)| iv.contains(v))
    }

    pub fn volume(&self) -> f64 {
        self.intervals.iter().map(Interval::width).product()
    }

    pub fn is_finite(&self) -> bool {
        self.intervals.iter().all(Interval::is_finite)
    }

    pub fn intersect(&self, other: &BoxSupport) -> Option<BoxSupport> {
        if self.dim() != other.dim() {
            return None;
        }
        let intervals = self
            .intervals
            .iter()
            .zip(&other.intervals)
            .map(|(a, b)| a.intersect(b))
            .collect::<Option<Vec<_>>>()?;
        Some(BoxSupport { intervals })
    }

    /// Cartesian product with another box (dimensions concatenate).
    pub fn concat(&self, other: &BoxSupport) -> BoxSupport {
        let mut intervals = self.intervals.clone();
        intervals.extend_from_slice(&other.intervals);
        BoxSupport { intervals }
    }

    /// Tensor grid of interior points with `n` points per axis.
    pub fn interior_grid(&self, n: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self.intervals.iter().map(|iv| iv.interior_samples(n)).collect();
        let mut points: Vec<Vec<f64>> = alloc::vec![Vec::new()];
        for axis in &axes {
            let mut next = Vec::with_capacity(points.len() * axis.len());
            for p in &points {
                for &v in axis {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
            points = next;
        }
        points
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inverted_bounds() {
        assert_eq!(Interval::new(5.0, 1.0), Err(Error::EmptyBox { lo: 5.0, hi: 1.0 }));
        assert!(BoxSupport::from_bounds(&[(0.0, 1.0), (2.0, 2.0)]).is_err());
    }

    #[test]
    fn grid_and_volume() {
        let b = BoxSupport::from_bounds(&[(0.0, 2.0), (1.0, 4.0)]).unwrap();
        assert_eq!(b.volume(), 6.0);
        let g = b.interior_grid(3);
        assert_eq!(g.len(), 9);
        assert!(g.iter().all(|p| b.contains(p)));
    }

    #[test]
    fn half_infinite_samples_stay_inside() {
        let iv = Interval::new(2.0, f64::INFINITY).unwrap();
        assert!(iv.interior_samples(7).iter().all(|&x| x > 2.0 && x.is_finite()));
        let all = Interval::real_line().interior_samples(5);
        assert!(all.iter().all(|x| x.is_finite()));
    }
}
