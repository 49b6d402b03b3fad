//! Forward relations `d = g(m)` and restriction of a joint prior to the
//! graph of `g`.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::density::Density;
use crate::diffeo::Diffeomorphism;
use crate::error::{Error, Result};
use crate::units::UnitSignature;

/// Default ray-length pattern for the two-block, two-ray geometry:
/// ray 1 crosses both blocks, ray 2 crosses block 1 twice.
pub const DEFAULT_RAYS: [[f64; 2]; 2] = [[1.0, 1.0], [2.0, 0.0]];

type Map = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
enum Kind {
    /// Row-major `d_dim × m_dim`.
    Linear(Vec<f64>),
    /// `then(pre(m))`.
    Composed {
        pre: Diffeomorphism,
        then: Box<ForwardModel>,
    },
    Custom(Map),
}

#[derive(Clone)]
pub struct ForwardModel {
    name: String,
    m_dim: usize,
    d_dim: usize,
    m_units: Vec<UnitSignature>,
    d_units: Vec<UnitSignature>,
    kind: Kind,
}

impl fmt::Debug for ForwardModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForwardModel")
            .field("name", &self.name)
            .field("m_dim", &self.m_dim)
            .field("d_dim", &self.d_dim)
            .finish()
    }
}

impl ForwardModel {
    /// `d = A m` where every entry of `A` carries `coef_unit`.
    pub fn linear(
        name: &str,
        rows: &[Vec<f64>],
        coef_unit: &UnitSignature,
        m_units: Vec<UnitSignature>,
    ) -> Result<Self> {
        let d_dim = rows.len();
        let m_dim = m_units.len();
        if d_dim == 0 || m_dim == 0 {
            return Err(Error::InvalidParameter("empty forward matrix".into()));
        }
        let mut matrix = Vec::with_capacity(d_dim * m_dim);
        let mut d_units = Vec::with_capacity(d_dim);
        for row in rows {
            if row.len() != m_dim {
                return Err(Error::DimensionMismatch {
                    expected: m_dim,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite forward coefficient".into()));
            }
            // Every nonzero term of a row must land in the same unit.
            let mut unit: Option<UnitSignature> = None;
            for (a, mu) in row.iter().zip(&m_units) {
                if *a == 0.0 {
                    continue;
                }
                let u = coef_unit * mu;
                match &unit {
                    Some(prev) if *prev != u => {
                        return Err(Error::InvalidParameter(alloc::format!(
                            "inconsistent units in forward row: {prev} vs {u}"
                        )))
                    }
                    _ => unit = Some(u),
                }
            }
            d_units.push(unit.unwrap_or_else(|| coef_unit * &m_units[0]));
            matrix.extend_from_slice(row);
        }
        Ok(Self {
            name: name.into(),
            m_dim,
            d_dim,
            m_units,
            d_units,
            kind: Kind::Linear(matrix),
        })
    }

    /// Two-ray travel times through two slowness blocks, `t = L·R s` with ray
    /// pattern `rays` and length scale `length` in meters.
    pub fn two_block_slowness(length: f64, rays: [[f64; 2]; 2]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = rays.iter().map(|r| r.iter().map(|v| v * length).collect()).collect();
        let det = rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0];
        if det == 0.0 {
            return Err(Error::Singular(det));
        }
        Self::linear(
            "two-block-slowness",
            &rows,
            &UnitSignature::meter(),
            vec![UnitSignature::slowness(); 2],
        )
    }

    /// The same travel times as a function of block velocities.
    pub fn two_block_velocity(length: f64, rays: [[f64; 2]; 2]) -> Result<Self> {
        let s = Self::two_block_slowness(length, rays)?;
        Ok(Self {
            name: "two-block-velocity".into(),
            m_dim: 2,
            d_dim: 2,
            m_units: vec![UnitSignature::velocity(); 2],
            d_units: s.d_units.clone(),
            kind: Kind::Composed {
                pre: Diffeomorphism::reciprocal(2),
                then: Box::new(s),
            },
        })
    }

    /// One homogeneous block seen by both rays: `(2Ls, 2Ls)`.
    pub fn one_block_slowness(length: f64) -> Result<Self> {
        Self::linear(
            "one-block-slowness",
            &[vec![2.0 * length], vec![2.0 * length]],
            &UnitSignature::meter(),
            vec![UnitSignature::slowness()],
        )
    }

    /// Two blocks: `(L(s1 + s2), 2L s1)`.
    pub fn two_block_transdim(length: f64) -> Result<Self> {
        let mut f = Self::two_block_slowness(length, DEFAULT_RAYS)?;
        f.name = "two-block-transdim".into();
        Ok(f)
    }

    /// Scalar `d = k m`.
    pub fn linear_scalar(k: f64) -> Result<Self> {
        Self::linear(
            "linear-scalar",
            &[vec![k]],
            &UnitSignature::dimensionless(),
            vec![UnitSignature::dimensionless()],
        )
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..dim)
            .map(|i| (0..dim).map(|j| f64::from(u8::from(i == j))).collect())
            .collect();
        let mut f = Self::linear(
            "identity",
            &rows,
            &UnitSignature::dimensionless(),
            vec![UnitSignature::dimensionless(); dim],
        )?;
        f.name = "identity".into();
        Ok(f)
    }

    /// Arbitrary map; `f` writes `d_dim` values into its output slice.
    pub fn custom<F>(name: &str, m_dim: usize, d_dim: usize, f: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            m_dim,
            d_dim,
            m_units: vec![UnitSignature::dimensionless(); m_dim],
            d_units: vec![UnitSignature::dimensionless(); d_dim],
            kind: Kind::Custom(Arc::new(f)),
        }
    }

    /// The same relation expressed in model coordinates `y = h(m)`.
    pub fn reparameterized(&self, h: &Diffeomorphism) -> Result<Self> {
        if h.dim() != self.m_dim {
            return Err(Error::DimensionMismatch {
                expected: self.m_dim,
                found: h.dim(),
            });
        }
        Ok(Self {
            name: alloc::format!("{}-reparameterized", self.name),
            m_dim: self.m_dim,
            d_dim: self.d_dim,
            m_units: h.map_units(&self.m_units),
            d_units: self.d_units.clone(),
            kind: Kind::Composed {
                pre: h.inverse(),
                then: Box::new(self.clone()),
            },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn m_dim(&self) -> usize {
        self.m_dim
    }

    pub fn d_dim(&self) -> usize {
        self.d_dim
    }

    pub fn m_units(&self) -> &[UnitSignature] {
        &self.m_units
    }

    pub fn d_units(&self) -> &[UnitSignature] {
        &self.d_units
    }

    /// Coefficient matrix rows, for linear models.
    pub fn matrix(&self) -> Option<Vec<Vec<f64>>> {
        match &self.kind {
            Kind::Linear(a) => Some(a.chunks(self.m_dim).map(<[f64]>::to_vec).collect()),
            _ => None,
        }
    }

    pub fn apply(&self, m: &[f64]) -> Result<Vec<f64>> {
        if m.len() != self.m_dim {
            return Err(Error::DimensionMismatch {
                expected: self.m_dim,
                found: m.len(),
            });
        }
        let mut out = vec![0.0; self.d_dim];
        if !self.apply_into(m, &mut out) {
            return Err(Error::Singular(m[0]));
        }
        Ok(out)
    }

    /// Allocation-free evaluation; returns `false` where the map is undefined.
    pub fn apply_into(&self, m: &[f64], out: &mut [f64]) -> bool {
        match &self.kind {
            Kind::Linear(a) => {
                for (row, o) in a.chunks(self.m_dim).zip(out.iter_mut()) {
                    *o = row.iter().zip(m).map(|(r, x)| r * x).sum();
                }
                true
            }
            Kind::Composed { pre, then } => {
                let mut buf = [0.0f64; 8];
                let y = &mut buf[..self.m_dim];
                pre.forward_into(m, y).is_some() && then.apply_into(y, out)
            }
            Kind::Custom(f) => {
                f(m, out);
                true
            }
        }
    }
}

/// Unnormalized posterior `m ↦ p_d(g(m)) · p_m(m)`.
pub fn graph_restrict(data_prior: &Density, model_prior: &Density, f: &ForwardModel) -> Result<Density> {
    if data_prior.dim() != f.d_dim() {
        return Err(Error::DimensionMismatch {
            expected: f.d_dim(),
            found: data_prior.dim(),
        });
    }
    if model_prior.dim() != f.m_dim() {
        return Err(Error::DimensionMismatch {
            expected: f.m_dim(),
            found: model_prior.dim(),
        });
    }
    let data = data_prior.clone();
    let model = model_prior.clone();
    let fwd = f.clone();
    let d_dim = f.d_dim();
    let eval = move |m: &[f64]| -> f64 {
        let pm = model.value(m);
        if pm == 0.0 {
            return 0.0;
        }
        let mut buf = [0.0f64; 8];
        let d = &mut buf[..d_dim];
        if !fwd.apply_into(m, d) {
            return 0.0;
        }
        data.value(d) * pm
    };
    let value_unit = &data_prior.unit() * model_prior.value_unit();
    let mut out = Density::custom(model_prior.support().clone(), eval)
        .with_scale_hints(model_prior.scale_hints())
        .with_units(model_prior.coord_units().to_vec())?
        .with_value_unit(value_unit);
    if model_prior.is_improper() {
        out = out.into_improper();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BoxSupport;

    #[test]
    fn transdim_forward_values() {
        let g1 = ForwardModel::one_block_slowness(1.0).unwrap();
        assert_eq!(g1.apply(&[0.5]).unwrap(), vec![1.0, 1.0]);
        let g2 = ForwardModel::two_block_transdim(1.0).unwrap();
        let d = g2.apply(&[0.5, 0.7]).unwrap();
        assert!((d[0] - 1.2).abs() < 1e-15 && (d[1] - 1.0).abs() < 1e-15);
        // Equal slownesses reproduce the one-block relation.
        assert_eq!(g2.apply(&[0.3, 0.3]).unwrap(), g1.apply(&[0.3]).unwrap());
        assert_eq!(
            ForwardModel::linear_scalar(3.0).unwrap().apply(&[2.0]).unwrap(),
            vec![6.0]
        );
    }

    #[test]
    fn travel_time_units() {
        let g = ForwardModel::two_block_slowness(1.0, DEFAULT_RAYS).unwrap();
        assert_eq!(g.d_units()[0], UnitSignature::second());
        assert_eq!(g.d_units()[1], UnitSignature::second());
        let gv = ForwardModel::two_block_velocity(1.0, DEFAULT_RAYS).unwrap();
        assert_eq!(gv.d_units(), g.d_units());
    }

    #[test]
    fn velocity_model_is_slowness_model_of_reciprocal() {
        let gs = ForwardModel::two_block_slowness(1.0, DEFAULT_RAYS).unwrap();
        let gv = ForwardModel::two_block_velocity(1.0, DEFAULT_RAYS).unwrap();
        for v in [[1.0, 2.0], [3.5, 1.25], [4.0, 4.0]] {
            let s = [1.0 / v[0], 1.0 / v[1]];
            assert_eq!(gv.apply(&v).unwrap(), gs.apply(&s).unwrap());
        }
    }

    #[test]
    fn mismatched_units_rejected() {
        let r = ForwardModel::linear(
            "bad",
            &[vec![1.0, 1.0]],
            &UnitSignature::meter(),
            vec![UnitSignature::slowness(), UnitSignature::velocity()],
        );
        assert!(r.is_err());
    }

    #[test]
    fn flat_likelihood_returns_prior() {
        let p = Density::gaussian_iid(vec![0.3], 2.0).unwrap();
        let f = ForwardModel::linear_scalar(4.0).unwrap();
        let r = graph_restrict(&Density::improper_flat(1), &p, &f).unwrap();
        for x in [-3.0, 0.0, 1.7] {
            assert_eq!(r.eval(&[x]).unwrap(), p.eval(&[x]).unwrap());
        }
    }

    #[test]
    fn uniform_velocity_restriction_is_flat_on_its_support() {
        let data = Density::uniform_box(BoxSupport::cube(2, 0.5, 1.1).unwrap()).unwrap();
        let prior = Density::uniform_box(BoxSupport::cube(2, 1.0, 5.0).unwrap()).unwrap();
        let g = ForwardModel::two_block_velocity(1.0, DEFAULT_RAYS).unwrap();
        let post = graph_restrict(&data, &prior, &g).unwrap();
        let inside = post.eval(&[3.0, 3.0]).unwrap();
        assert!((inside - 1.0 / 0.36 / 16.0).abs() < 1e-12);
        assert_eq!(post.eval(&[1.0, 1.0]).unwrap(), 0.0);
    }
}
