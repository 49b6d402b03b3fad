//! Plain and importance-sampled Monte Carlo integration.

#[allow(unused_imports)]
use num_traits::Float;

use super::rng::SeededRng;
use super::{IntegralResult, Method};
use crate::density::Density;
use crate::domain::BoxSupport;
use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 1000;

/// Uniform sampling over a finite box.
pub fn mc_integrate<F: Fn(&[f64]) -> f64>(f: F, domain: &BoxSupport, n: usize, seed: u64) -> Result<IntegralResult> {
    let sampler = Density::uniform_box(domain.clone())?;
    mc_integrate_with(f, &sampler, n, seed)
}

/// Importance sampling: draws from `sampler` and averages `f / sampler`.
pub fn mc_integrate_with<F: Fn(&[f64]) -> f64>(f: F, sampler: &Density, n: usize, seed: u64) -> Result<IntegralResult> {
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples(n));
    }
    let mut rng = SeededRng::new(seed);
    let (mut mean, mut m2) = (0.0, 0.0);
    let mut hits = 0usize;
    for i in 0..n {
        let x = sampler.sample(&mut rng)?;
        let q = sampler.value(&x);
        let w = if q > 0.0 { f(&x) / q } else { 0.0 };
        if w != 0.0 {
            hits += 1;
        }
        // Welford update.
        let delta = w - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (w - mean);
    }
    if hits == 0 {
        return Err(Error::SupportNotHit);
    }
    let var = m2 / (n - 1) as f64;
    Ok(IntegralResult {
        value: mean,
        error: (var / n as f64).sqrt(),
        method: Method::MonteCarlo,
        evaluations: n as u64,
        converged: true,
    })
}
