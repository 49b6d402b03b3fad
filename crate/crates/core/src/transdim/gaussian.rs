//! The same two-ray geometry with zero-mean Gaussian data noise `σ_d` and a
//! zero-mean Gaussian slowness prior `σ_s`, observed data at zero, `L = 1`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{Evidence, EvidenceReport, ModelSpec, RjSummary, TransDimProblem};
use crate::density::Density;
use crate::error::{Error, Result};
use crate::forward::ForwardModel;
use crate::units::UnitSignature;

/// Relative agreement required between closed forms and quadrature.
pub const QUAD_AGREEMENT: f64 = 1e-8;

/// Coefficients `(8, 6, 4)` of the closed-form Bayes factor.
pub const BF_CONSTANTS: [f64; 3] = [8.0, 6.0, 4.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianExampleConfig {
    /// Data noise standard deviation, seconds.
    pub sigma_d: f64,
    /// Slowness prior standard deviation, s/m.
    pub sigma_s: f64,
}

impl Default for GaussianExampleConfig {
    fn default() -> Self {
        Self {
            sigma_d: 1.0,
            sigma_s: 1.0,
        }
    }
}

/// `p(d|2) / p(d|1) = σ_d √((σ_d² + 8σ_s²) / (σ_d⁴ + 6σ_d²σ_s² + 4σ_s⁴))`.
pub fn bayes_factor(sigma_d: f64, sigma_s: f64) -> f64 {
    bayes_factor_with(sigma_d, sigma_s, BF_CONSTANTS)
}

/// The closed form with its three constants supplied by the caller.
pub fn bayes_factor_with(sigma_d: f64, sigma_s: f64, c: [f64; 3]) -> f64 {
    let (d2, s2) = (sigma_d * sigma_d, sigma_s * sigma_s);
    sigma_d * ((d2 + c[0] * s2) / (d2 * d2 + c[1] * d2 * s2 + c[2] * s2 * s2)).sqrt()
}

impl GaussianExampleConfig {
    pub fn new(sigma_d: f64, sigma_s: f64) -> Result<Self> {
        let c = Self { sigma_d, sigma_s };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma_d", self.sigma_d), ("sigma_s", self.sigma_s)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(alloc::format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    /// `p(d = 0 | k = 1) = 1 / (2π σ_d √(σ_d² + 8σ_s²))`.
    pub fn evidence_k1(&self) -> f64 {
        let (d, s) = (self.sigma_d, self.sigma_s);
        1.0 / (2.0 * PI * d * (d * d + 8.0 * s * s).sqrt())
    }

    /// `p(d = 0 | k = 2) = 1 / (2π √(σ_d⁴ + 6σ_d²σ_s² + 4σ_s⁴))`.
    pub fn evidence_k2(&self) -> f64 {
        let (d2, s2) = (self.sigma_d * self.sigma_d, self.sigma_s * self.sigma_s);
        1.0 / (2.0 * PI * (d2 * d2 + 6.0 * d2 * s2 + 4.0 * s2 * s2).sqrt())
    }

    pub fn bayes_factor(&self) -> f64 {
        bayes_factor(self.sigma_d, self.sigma_s)
    }

    pub fn problem(&self) -> Result<TransDimProblem> {
        self.validate()?;
        let slow = UnitSignature::slowness();
        let data = Density::gaussian_iid(vec![0.0, 0.0], self.sigma_d)?.with_units(vec![UnitSignature::second(); 2])?;
        let prior = |k: usize| -> Result<Density> {
            Density::gaussian_iid(vec![0.0; k], self.sigma_s)?.with_units(vec![slow.clone(); k])
        };
        TransDimProblem::new(
            vec![
                ModelSpec {
                    k: 1,
                    forward: ForwardModel::one_block_slowness(1.0)?,
                    prior: prior(1)?,
                },
                ModelSpec {
                    k: 2,
                    forward: ForwardModel::two_block_transdim(1.0)?,
                    prior: prior(2)?,
                },
            ],
            data,
            vec![0.5, 0.5],
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianExampleReport {
    pub config: GaussianExampleConfig,
    pub evidence: EvidenceReport,
    pub bayes_factor: f64,
    pub quadrature_evidence_k1: f64,
    pub quadrature_evidence_k2: f64,
    pub quadrature_bayes_factor: f64,
    pub max_relative_deviation: f64,
    pub verified: bool,
}

pub fn gaussian_example_report(cfg: &GaussianExampleConfig) -> Result<GaussianExampleReport> {
    gaussian_example_report_with(cfg, BF_CONSTANTS)
}

/// Report whose closed-form factor uses the supplied constants; the
/// evidences and the quadrature check are unaffected.
pub fn gaussian_example_report_with(cfg: &GaussianExampleConfig, constants: [f64; 3]) -> Result<GaussianExampleReport> {
    cfg.validate()?;
    let unit = UnitSignature::second().powi(-2);
    let (e1, e2) = (cfg.evidence_k1(), cfg.evidence_k2());
    let evidence = EvidenceReport::from_evidences(
        vec![
            Evidence::analytic(1, 0.5, e1, unit.clone()),
            Evidence::analytic(2, 0.5, e2, unit),
        ],
        vec![
            String::from("joint-prior-gaussian"),
            String::from("gaussian-marginals-closed-form"),
            String::from("gaussian-bayes-factor-closed-form"),
        ],
    )?;
    let problem = cfg.problem()?;
    let q1 = problem.conditional_evidence(1, 1e-12)?.value;
    let q2 = problem.conditional_evidence(2, 1e-12)?.value;
    let bf = bayes_factor_with(cfg.sigma_d, cfg.sigma_s, constants);
    let qbf = q2 / q1;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let max_relative_deviation = rel(e1, q1).max(rel(e2, q2)).max(rel(bf, qbf));
    Ok(GaussianExampleReport {
        config: *cfg,
        evidence,
        bayes_factor: bf,
        quadrature_evidence_k1: q1,
        quadrature_evidence_k2: q2,
        quadrature_bayes_factor: qbf,
        max_relative_deviation,
        verified: max_relative_deviation <= QUAD_AGREEMENT,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    FavorsK1,
    FavorsK2,
    Indifferent,
}

impl Region {
    pub fn of(b: f64) -> Self {
        if b < 1.0 {
            Self::FavorsK1
        } else if b > 1.0 {
            Self::FavorsK2
        } else {
            Self::Indifferent
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::FavorsK1 => "favors-k1",
            Self::FavorsK2 => "favors-k2",
            Self::Indifferent => "indifferent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionCell {
    pub sigma_d: f64,
    pub sigma_s: f64,
    pub bayes_factor: f64,
    pub region: Region,
}

/// Where `B = 1` crosses one `σ_s` column of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub sigma_s: f64,
    /// Linear interpolation of `B - 1` between the bracketing grid nodes.
    pub sigma_d: f64,
    /// `√2 σ_s`.
    pub expected: f64,
    /// Spacing of the bracketing `σ_d` nodes.
    pub resolution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionMap {
    pub sigma_d: Vec<f64>,
    pub sigma_s: Vec<f64>,
    /// Ordered by `σ_s`, then `σ_d`.
    pub cells: Vec<RegionCell>,
    pub boundary: Vec<BoundaryPoint>,
    /// Largest `|σ_d* − √2σ_s|` in units of the local grid spacing.
    pub max_boundary_error_cells: f64,
}

/// Classifies each grid cell by the sign of `B − 1` and extracts the boundary.
pub fn region_map(sigma_d: &[f64], sigma_s: &[f64]) -> Result<RegionMap> {
    region_map_with(sigma_d, sigma_s, bayes_factor)
}

pub fn region_map_with<F: Fn(f64, f64) -> f64>(sigma_d: &[f64], sigma_s: &[f64], b: F) -> Result<RegionMap> {
    if sigma_d.is_empty() || sigma_s.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    if let Some(v) = sigma_d.iter().chain(sigma_s).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(alloc::format!(
            "grid value {v} must be positive"
        )));
    }
    if sigma_d.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("sigma_d grid must increase".into()));
    }
    let mut cells = Vec::with_capacity(sigma_d.len() * sigma_s.len());
    let mut boundary = Vec::new();
    for &ss in sigma_s {
        let col: Vec<f64> = sigma_d.iter().map(|&sd| b(sd, ss)).collect();
        for (&sd, &v) in sigma_d.iter().zip(&col) {
            cells.push(RegionCell {
                sigma_d: sd,
                sigma_s: ss,
                bayes_factor: v,
                region: Region::of(v),
            });
        }
        for i in 0..col.len().saturating_sub(1) {
            let (f0, f1) = (col[i] - 1.0, col[i + 1] - 1.0);
            if f0 == 0.0 || f0 * f1 < 0.0 {
                let t = if f0 == 0.0 { 0.0 } else { f0 / (f0 - f1) };
                boundary.push(BoundaryPoint {
                    sigma_s: ss,
                    sigma_d: sigma_d[i] + t * (sigma_d[i + 1] - sigma_d[i]),
                    expected: 2.0f64.sqrt() * ss,
                    resolution: sigma_d[i + 1] - sigma_d[i],
                });
                break;
            }
        }
    }
    let max_boundary_error_cells = boundary
        .iter()
        .map(|p| (p.sigma_d - p.expected).abs() / p.resolution)
        .fold(0.0, f64::max);
    Ok(RegionMap {
        sigma_d: sigma_d.to_vec(),
        sigma_s: sigma_s.to_vec(),
        cells,
        boundary,
        max_boundary_error_cells,
    })
}

/// `n` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Reversible-jump estimate of `p(k | d)`.
pub fn rj_summary(cfg: &GaussianExampleConfig, steps: usize, seed: u64) -> Result<RjSummary> {
    let problem = cfg.problem()?;
    let birth = Density::gaussian_iid(vec![0.0], cfg.sigma_s)?.with_units(vec![UnitSignature::slowness()])?;
    let a = 1.0 / (cfg.sigma_d * cfg.sigma_d);
    let b = 1.0 / (cfg.sigma_s * cfg.sigma_s);
    let sd1 = 1.0 / (8.0 * a + b).sqrt();
    // Smallest posterior standard deviation of the two-block model.
    let (p, q, r) = (5.0 * a + b, a, a + b);
    let lmax = 0.5 * (p + r) + (0.25 * (p - r) * (p - r) + q * q).sqrt();
    let sd2 = 1.0 / lmax.sqrt();
    let chain = problem.rj_sample(&[birth], steps, seed, &[2.4 * sd1, 1.7 * sd2])?;
    Ok(RjSummary::from_chain(&chain, &[1, 2]))
}
