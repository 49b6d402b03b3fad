//! Brute-force verification machinery: quadrature, Monte Carlo, a random-walk
//! Metropolis sampler and a minimal reversible-jump sampler.

use serde::Serialize;

pub mod mc;
pub mod mcmc;
pub mod quad;
pub mod rng;

pub use mc::{mc_integrate, mc_integrate_with};
pub use mcmc::{metropolis, rj_mcmc, ChainSample, MoveStats, RjOptions};
pub use quad::{integrate_1d, quad_integrate, quad_integrate_with, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Analytic,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralResult {
    pub value: f64,
    /// Error bound (quadrature) or standard error (Monte Carlo).
    pub error: f64,
    pub method: Method,
    pub evaluations: u64,
    pub converged: bool,
}

impl IntegralResult {
    pub fn analytic(value: f64) -> Self {
        Self {
            value,
            error: 0.0,
            method: Method::Analytic,
            evaluations: 1,
            converged: true,
        }
    }

    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            self.error
        } else {
            self.error / self.value.abs()
        }
    }
}
