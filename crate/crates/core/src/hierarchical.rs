//! A scalar hierarchical model with discrete hyperparameters.
//!
//! Data `d` and model `m` are scalars related by `d = k m`. The data prior is
//! `N(0, λ²)`, the model prior is `N(0, δ²)`, and the hyperparameters
//! `θ = (λ, δ)` each take finitely many positive values. `δ` is the
//! standard deviation of the model prior.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::error::{Error, Result};
use crate::forward::{graph_restrict, ForwardModel};
use crate::oracle::{integrate_1d, QuadOptions};

/// Hyperparameter values used by the closed forms.
pub const STANDARD_ATOMS: [f64; 2] = [1.0, 2.0];

/// Threshold on `max - min` above which a marginal counts as `k`-dependent.
pub const ACAUSAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HierConfig {
    /// Prior probability of the first `λ` atom.
    pub pi_lambda: f64,
    /// Prior probability of the first `δ` atom.
    pub pi_delta: f64,
    pub k: f64,
    pub lambda_atoms: Vec<f64>,
    pub delta_atoms: Vec<f64>,
}

impl Default for HierConfig {
    fn default() -> Self {
        Self {
            pi_lambda: 0.5,
            pi_delta: 0.5,
            k: 1.0,
            lambda_atoms: STANDARD_ATOMS.to_vec(),
            delta_atoms: STANDARD_ATOMS.to_vec(),
        }
    }
}

/// First atom gets `pi`; the remaining atoms share `1 - pi` equally.
fn atom_weights(pi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![pi];
    }
    let rest = (1.0 - pi) / (n - 1) as f64;
    let mut w = vec![rest; n];
    w[0] = pi;
    w
}

fn normal_pdf(x: f64, sigma: f64) -> f64 {
    (-0.5 * (x / sigma).powi(2)).exp() / ((2.0 * PI).sqrt() * sigma)
}

impl HierConfig {
    pub fn symmetric(pi: f64, k: f64) -> Self {
        Self {
            pi_lambda: pi,
            pi_delta: pi,
            k,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("pi_lambda", self.pi_lambda), ("pi_delta", self.pi_delta)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(alloc::format!("{name} = {p} outside [0, 1]")));
            }
        }
        if !self.k.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("k = {}", self.k)));
        }
        for atoms in [&self.lambda_atoms, &self.delta_atoms] {
            if atoms.is_empty() || atoms.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
                return Err(Error::InvalidParameter("hyperparameter atoms must be positive".into()));
            }
        }
        Ok(())
    }

    fn uses_standard_atoms(&self) -> bool {
        self.lambda_atoms == STANDARD_ATOMS && self.delta_atoms == STANDARD_ATOMS
    }

    fn lambda_weight(&self, lambda: f64) -> f64 {
        let w = atom_weights(self.pi_lambda, self.lambda_atoms.len());
        self.lambda_atoms
            .iter()
            .zip(w)
            .filter(|(a, _)| **a == lambda)
            .map(|(_, w)| w)
            .sum()
    }

    fn delta_weight(&self, delta: f64) -> f64 {
        let w = atom_weights(self.pi_delta, self.delta_atoms.len());
        self.delta_atoms
            .iter()
            .zip(w)
            .filter(|(a, _)| **a == delta)
            .map(|(_, w)| w)
            .sum()
    }
}

/// `p(d, m, λ, δ)`; zero for hyperparameter values that are not atoms.
pub fn joint_prior(cfg: &HierConfig, d: f64, m: f64, lambda: f64, delta: f64) -> f64 {
    let w = cfg.lambda_weight(lambda) * cfg.delta_weight(delta);
    if w == 0.0 {
        return 0.0;
    }
    w * normal_pdf(d, lambda) * normal_pdf(m, delta)
}

/// The joint prior on the graph `d = k m`.
pub fn posterior_unnormalized(cfg: &HierConfig, m: f64, lambda: f64, delta: f64) -> f64 {
    joint_prior(cfg, cfg.k * m, m, lambda, delta)
}

/// Closed form of `∫ posterior_unnormalized dm` for one cell.
fn cell_closed_form(cfg: &HierConfig, lambda: f64, delta: f64) -> f64 {
    let w = cfg.lambda_weight(lambda) * cfg.delta_weight(delta);
    let a = cfg.k * cfg.k / (lambda * lambda) + 1.0 / (delta * delta);
    w / (2.0 * PI * lambda * delta) * (2.0 * PI / a).sqrt()
}

/// `∫ posterior_unnormalized dm` for one cell by adaptive quadrature.
pub fn cell_quadrature(cfg: &HierConfig, lambda: f64, delta: f64, rel_tol: f64) -> f64 {
    let a = cfg.k * cfg.k / (lambda * lambda) + 1.0 / (delta * delta);
    let opts = QuadOptions::with_rel_tol(rel_tol).infinite_scales(vec![(0.0, 1.0 / a.sqrt())]);
    integrate_1d(
        |m| posterior_unnormalized(cfg, m, lambda, delta),
        f64::NEG_INFINITY,
        f64::INFINITY,
        &opts,
    )
    .value
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellMethod {
    ClosedForm,
    Quadrature,
}

/// Posterior over `θ = (λ, δ)`; rows index `λ`, columns index `δ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaPosterior {
    pub lambda_atoms: Vec<f64>,
    pub delta_atoms: Vec<f64>,
    pub unnormalized: Vec<Vec<f64>>,
    pub cells: Vec<Vec<f64>>,
    /// Sum of the unnormalized cells.
    pub normalization: f64,
    pub method: CellMethod,
}

impl ThetaPosterior {
    pub fn lambda_marginal(&self) -> Vec<f64> {
        self.cells.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn delta_marginal(&self) -> Vec<f64> {
        (0..self.delta_atoms.len())
            .map(|j| self.cells.iter().map(|row| row[j]).sum())
            .collect()
    }
}

pub fn theta_posterior(cfg: &HierConfig) -> Result<ThetaPosterior> {
    cfg.validate()?;
    let method = if cfg.uses_standard_atoms() {
        CellMethod::ClosedForm
    } else {
        CellMethod::Quadrature
    };
    let unnormalized: Vec<Vec<f64>> = cfg
        .lambda_atoms
        .iter()
        .map(|&l| {
            cfg.delta_atoms
                .iter()
                .map(|&d| match method {
                    CellMethod::ClosedForm => cell_closed_form(cfg, l, d),
                    CellMethod::Quadrature => cell_quadrature(cfg, l, d, 1e-12),
                })
                .collect()
        })
        .collect();
    let normalization: f64 = unnormalized.iter().flatten().sum();
    if !(normalization > 0.0) {
        return Err(Error::AllCellsZero);
    }
    let cells = unnormalized
        .iter()
        .map(|row| row.iter().map(|c| c / normalization).collect())
        .collect();
    Ok(ThetaPosterior {
        lambda_atoms: cfg.lambda_atoms.clone(),
        delta_atoms: cfg.delta_atoms.clone(),
        unnormalized,
        cells,
        normalization,
        method,
    })
}

pub fn lambda_marginal(cfg: &HierConfig) -> Result<Vec<f64>> {
    Ok(theta_posterior(cfg)?.lambda_marginal())
}

pub fn delta_marginal(cfg: &HierConfig) -> Result<Vec<f64>> {
    Ok(theta_posterior(cfg)?.delta_marginal())
}

/// The marginals written as hyperprior weights times mixtures over the
/// other hyperparameter, for the standard atoms, normalized over `λ`
/// (resp. `δ`). Returns `(p(λ=1), p(δ=1))`.
pub fn marginals_by_summation(pi_l: f64, pi_d: f64, k: f64) -> (f64, f64) {
    let k2 = k * k;
    let s = |x: f64| x.sqrt();
    let l1 = pi_l
        * (pi_d / (2.0 * PI) * s(2.0 * PI / (k2 + 1.0)) + (1.0 - pi_d) / (4.0 * PI) * s(8.0 * PI / (4.0 * k2 + 1.0)));
    let l2 = (1.0 - pi_l)
        * (pi_d / (4.0 * PI) * s(8.0 * PI / (k2 + 4.0)) + (1.0 - pi_d) / (8.0 * PI) * s(8.0 * PI / (k2 + 1.0)));
    let d1 =
        pi_d * (pi_l / (2.0 * PI) * s(2.0 * PI / (k2 + 1.0)) + (1.0 - pi_l) / (4.0 * PI) * s(8.0 * PI / (k2 + 4.0)));
    let d2 = (1.0 - pi_d)
        * (pi_l / (4.0 * PI) * s(8.0 * PI / (4.0 * k2 + 1.0)) + (1.0 - pi_l) / (8.0 * PI) * s(8.0 * PI / (k2 + 1.0)));
    (l1 / (l1 + l2), d1 / (d1 + d2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcausalityProbe {
    pub k: Vec<f64>,
    pub p_lambda1: Vec<f64>,
    pub p_delta1: Vec<f64>,
    pub lambda_variation: f64,
    pub delta_variation: f64,
    pub acausal_lambda: bool,
    pub acausal_delta: bool,
}

fn variation(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

/// Hyperparameter marginals as functions of the forward constant `k`.
pub fn acausality_probe(cfg: &HierConfig, k_grid: &[f64]) -> Result<AcausalityProbe> {
    if k_grid.is_empty() {
        return Err(Error::InvalidParameter("empty k grid".into()));
    }
    let mut p_lambda1 = Vec::with_capacity(k_grid.len());
    let mut p_delta1 = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let t = theta_posterior(&HierConfig { k, ..cfg.clone() })?;
        p_lambda1.push(t.lambda_marginal()[0]);
        p_delta1.push(t.delta_marginal()[0]);
    }
    let lambda_variation = variation(&p_lambda1);
    let delta_variation = variation(&p_delta1);
    Ok(AcausalityProbe {
        k: k_grid.to_vec(),
        p_lambda1,
        p_delta1,
        lambda_variation,
        delta_variation,
        acausal_lambda: lambda_variation > ACAUSAL_TOL,
        acausal_delta: delta_variation > ACAUSAL_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaEval {
    pub lambda: f64,
    pub evidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MisfitEstimate {
    pub lambda_star: f64,
    /// `∫ N(g(m); d_obs, λ*² I) p_m(m) dm`.
    pub evidence: f64,
    pub at_lower_bound: bool,
    pub at_upper_bound: bool,
    pub trace: Vec<LambdaEval>,
}

const SCAN_POINTS: usize = 41;
const GOLDEN_TOL: f64 = 1e-9;

/// `λ*` maximizing the data-prior evidence `∫ N(g(m); d_obs, λ² I) p_m(m) dm`
/// over `λ ∈ [lo, hi]`: a log-spaced scan brackets the maximum, then a
/// golden-section search refines it.
pub fn misfit_lambda_estimator(
    d_obs: &[f64],
    f: &ForwardModel,
    m_prior: &Density,
    lambda_range: (f64, f64),
) -> Result<MisfitEstimate> {
    let (lo, hi) = lambda_range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::EmptyBox { lo, hi });
    }
    if d_obs.len() != f.d_dim() {
        return Err(Error::DimensionMismatch {
            expected: f.d_dim(),
            found: d_obs.len(),
        });
    }
    let mut trace = Vec::new();
    let mut evidence = |lambda: f64| -> Result<f64> {
        let data = Density::gaussian_iid(d_obs.to_vec(), lambda)?;
        let post = graph_restrict(&data, m_prior, f)?;
        let v = post.integrate(1e-12).value;
        trace.push(LambdaEval { lambda, evidence: v });
        Ok(v)
    };

    let ratio = (hi / lo).powf(1.0 / (SCAN_POINTS - 1) as f64);
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| {
            if i + 1 == SCAN_POINTS {
                hi
            } else {
                lo * ratio.powi(i as i32)
            }
        })
        .collect();
    let values = grid.iter().map(|&l| evidence(l)).collect::<Result<Vec<f64>>>()?;
    if values.iter().all(|v| !(*v > 0.0)) {
        return Err(Error::VanishingIntegrand);
    }
    let best = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(SCAN_POINTS - 1)];

    let g = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = evidence(x1)?;
    let mut f2 = evidence(x2)?;
    while b - a > GOLDEN_TOL * b {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = evidence(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = evidence(x1)?;
        }
    }
    let mut lambda_star = 0.5 * (a + b);
    let mut best_value = evidence(lambda_star)?;
    // The scan endpoints compete with the interior refinement.
    for (&l, &v) in [(&lo, &values[0]), (&hi, &values[SCAN_POINTS - 1])] {
        if v > best_value {
            lambda_star = l;
            best_value = v;
        }
    }
    let span = hi - lo;
    Ok(MisfitEstimate {
        lambda_star,
        evidence: best_value,
        at_lower_bound: (lambda_star - lo) <= 1e-6 * span,
        at_upper_bound: (hi - lambda_star) <= 1e-6 * span,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn joint_prior_cases() {
        let cfg = HierConfig::symmetric(1.0, 1.0);
        assert!((joint_prior(&cfg, 0.0, 0.0, 1.0, 1.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert_eq!(joint_prior(&cfg, 0.0, 0.0, 3.0, 1.0), 0.0);
        let none = HierConfig {
            pi_lambda: 0.0,
            ..HierConfig::default()
        };
        assert_eq!(joint_prior(&none, 0.3, -0.2, 1.0, 2.0), 0.0);
    }

    #[test]
    fn posterior_cases() {
        let cfg = HierConfig::symmetric(0.5, 1.0);
        let v = posterior_unnormalized(&cfg, 0.0, 1.0, 1.0);
        assert!((v - 0.25 / (2.0 * PI)).abs() < 1e-15);
        let cfg = HierConfig::symmetric(0.5, 2.0);
        let v = posterior_unnormalized(&cfg, 1.0, 2.0, 1.0);
        assert!((v - (-1.0f64).exp() / (16.0 * PI)).abs() < 1e-15);
        let flat = HierConfig::symmetric(0.5, 0.0);
        for l in STANDARD_ATOMS {
            let r = posterior_unnormalized(&flat, 0.7, l, 2.0) / posterior_unnormalized(&flat, 0.0, l, 2.0);
            assert!((r - (-0.5 * 0.49 / 4.0f64).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_table() {
        let t = theta_posterior(&HierConfig::default()).unwrap();
        let q = 0.25 / (2.0 * PI);
        let want = [
            q * PI.sqrt(),
            q / 2.0 * (8.0 * PI / 5.0).sqrt(),
            q / 2.0 * (8.0 * PI / 5.0).sqrt(),
            q / 4.0 * (4.0 * PI).sqrt(),
        ];
        let got = [
            t.unnormalized[0][0],
            t.unnormalized[1][0],
            t.unnormalized[0][1],
            t.unnormalized[1][1],
        ];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-15, "{g} vs {w}");
        }
        let total: f64 = t.cells.iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((t.cells[1][0] - t.cells[0][1]).abs() < 1e-15);
    }

    #[test]
    fn off_diagonal_cells_differ_away_from_unit_k() {
        let t = theta_posterior(&HierConfig::symmetric(0.5, 2.0)).unwrap();
        assert!((t.cells[1][0] - t.cells[0][1]).abs() > 1e-3);
    }

    #[test]
    fn degenerate_hyperprior() {
        let cfg = HierConfig {
            pi_lambda: 1.0,
            ..HierConfig::default()
        };
        let t = theta_posterior(&cfg).unwrap();
        assert_eq!(t.cells[1], vec![0.0, 0.0]);
        assert!((t.lambda_marginal()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn excluded_atoms_are_an_error() {
        let cfg = HierConfig {
            pi_lambda: 1.0,
            lambda_atoms: vec![1.0],
            delta_atoms: vec![1.0],
            pi_delta: 0.0,
            k: 1.0,
        };
        assert_eq!(theta_posterior(&cfg).unwrap_err(), Error::AllCellsZero);
    }

    #[test]
    fn general_atoms_use_quadrature() {
        let cfg = HierConfig {
            lambda_atoms: vec![0.5, 3.0],
            ..HierConfig::default()
        };
        let t = theta_posterior(&cfg).unwrap();
        assert_eq!(t.method, CellMethod::Quadrature);
        for (i, &l) in cfg.lambda_atoms.iter().enumerate() {
            for (j, &d) in cfg.delta_atoms.iter().enumerate() {
                let c = cell_closed_form(&cfg, l, d);
                assert!((t.unnormalized[i][j] - c).abs() <= 1e-10 * c);
            }
        }
    }

    #[test]
    fn summation_route_matches_table() {
        for (pl, pd, k) in [(0.5, 0.5, 1.0), (0.2, 0.9, 0.3), (0.7, 0.1, 4.0)] {
            let t = theta_posterior(&HierConfig {
                pi_lambda: pl,
                pi_delta: pd,
                k,
                ..HierConfig::default()
            })
            .unwrap();
            let (l1, d1) = marginals_by_summation(pl, pd, k);
            assert!((t.lambda_marginal()[0] - l1).abs() < 1e-14);
            assert!((t.delta_marginal()[0] - d1).abs() < 1e-14);
        }
    }

    #[test]
    fn acausality_examples() {
        let p = acausality_probe(&HierConfig::default(), &[0.5, 1.0, 2.0]).unwrap();
        assert!(p.lambda_variation > 0.01 && p.acausal_lambda);
        let fixed = HierConfig {
            pi_lambda: 1.0,
            ..HierConfig::default()
        };
        let p = acausality_probe(&fixed, &[0.5, 1.0, 2.0]).unwrap();
        assert!(!p.acausal_lambda);
        let p = acausality_probe(&HierConfig::default(), &[1.5]).unwrap();
        assert_eq!(p.lambda_variation, 0.0);
        assert!(acausality_probe(&HierConfig::default(), &[]).is_err());
    }

    #[test]
    fn misfit_estimator_matches_analytic() {
        let f = ForwardModel::identity(1).unwrap();
        let prior = Density::gaussian_iid(vec![0.0], 1.0).unwrap();
        for d in [2.0f64, 5.0, 8.0] {
            let e = misfit_lambda_estimator(&[d], &f, &prior, (0.01, 20.0)).unwrap();
            let want = (d * d - 1.0).sqrt();
            assert!(
                (e.lambda_star - want).abs() < 1e-4,
                "d={d}: {} vs {want}",
                e.lambda_star
            );
        }
        let e = misfit_lambda_estimator(&[0.0], &f, &prior, (0.01, 20.0)).unwrap();
        assert!(e.at_lower_bound);
    }
}
