//! Random-walk Metropolis and a minimal reversible-jump sampler for nested
//! model families.
//!
//! The reversible-jump moves add or drop trailing coordinates. Births draw
//! the new coordinates from a fixed proposal density, so the dimension
//! matching map is the identity and its Jacobian is one.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use super::rng::SeededRng;
use crate::density::Density;
use crate::error::{Error, Result};

const STUCK_WINDOW: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MoveStats {
    pub name: String,
    pub proposed: u64,
    pub accepted: u64,
}

impl MoveStats {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            proposed: 0,
            accepted: 0,
        }
    }

    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// A chain of `(k, point)` states stored flat.
#[derive(Debug, Clone, Serialize)]
pub struct ChainSample {
    pub seed: u64,
    ks: Vec<usize>,
    starts: Vec<usize>,
    values: Vec<f64>,
    pub moves: Vec<MoveStats>,
}

impl ChainSample {
    fn new(seed: u64, moves: Vec<MoveStats>, capacity: usize) -> Self {
        Self {
            seed,
            ks: Vec::with_capacity(capacity),
            starts: Vec::with_capacity(capacity),
            values: Vec::new(),
            moves,
        }
    }

    fn push(&mut self, k: usize, x: &[f64]) {
        self.ks.push(k);
        self.starts.push(self.values.len());
        self.values.extend_from_slice(x);
    }

    pub fn len(&self) -> usize {
        self.ks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ks.is_empty()
    }

    pub fn k(&self, i: usize) -> usize {
        self.ks[i]
    }

    pub fn ks(&self) -> &[usize] {
        &self.ks
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let end = self.starts.get(i + 1).copied().unwrap_or(self.values.len());
        &self.values[self.starts[i]..end]
    }

    /// Coordinate `j` of every state whose model is `k`.
    pub fn coordinate(&self, k: usize, j: usize) -> Vec<f64> {
        (0..self.len())
            .filter(|&i| self.ks[i] == k)
            .map(|i| self.point(i)[j])
            .collect()
    }

    /// Fraction of states in model `k` with its batch-means standard error.
    pub fn model_frequency(&self, k: usize, batches: usize) -> (f64, f64) {
        let ind: Vec<f64> = self.ks.iter().map(|&m| f64::from(u8::from(m == k))).collect();
        batch_means(&ind, batches)
    }

    pub fn acceptance(&self, name: &str) -> Option<f64> {
        self.moves.iter().find(|m| m.name == name).map(MoveStats::rate)
    }
}

/// Mean and batch-means standard error of a correlated series.
pub fn batch_means(xs: &[f64], batches: usize) -> (f64, f64) {
    let n = xs.len();
    let batches = batches.clamp(2, n.max(2));
    let size = n / batches;
    if size == 0 {
        return (f64::NAN, f64::NAN);
    }
    let used = size * batches;
    let means: Vec<f64> = xs[..used]
        .chunks(size)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let mean = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

/// Random-walk Metropolis with isotropic Gaussian steps of size `scale`.
pub fn metropolis<F: Fn(&[f64]) -> f64>(
    target: F,
    init: &[f64],
    steps: usize,
    scale: f64,
    seed: u64,
) -> Result<ChainSample> {
    let mut x = init.to_vec();
    let mut px = target(&x);
    if !(px > 0.0) {
        return Err(Error::ZeroProbabilityInit);
    }
    let mut rng = SeededRng::new(seed);
    let mut chain = ChainSample::new(seed, vec![MoveStats::new("random-walk")], steps);
    let mut y = x.clone();
    for step in 0..steps {
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi = xi + scale * rng.normal();
        }
        let py = target(&y);
        chain.moves[0].proposed += 1;
        if py > 0.0 && rng.uniform() * px < py {
            core::mem::swap(&mut x, &mut y);
            px = py;
            chain.moves[0].accepted += 1;
        }
        chain.push(0, &x);
        if step + 1 == STUCK_WINDOW && chain.moves[0].accepted == 0 {
            return Err(Error::StuckChain(STUCK_WINDOW));
        }
    }
    Ok(chain)
}

/// One member of a nested family. Model `i + 1` extends model `i` by
/// `dim(i+1) - dim(i)` trailing coordinates drawn from `birth`.
pub struct RjModel<'a> {
    pub k: usize,
    pub dim: usize,
    pub prior_prob: f64,
    /// Unnormalized posterior within the model: likelihood times model prior.
    pub target: &'a dyn Fn(&[f64]) -> f64,
    /// Proposal for the coordinates added when jumping up into this model.
    /// Unused for the first model.
    pub birth: Option<&'a Density>,
    /// Random-walk step size for within-model moves.
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RjOptions {
    pub steps: usize,
    pub seed: u64,
    /// Probability of attempting a jump rather than a within-model move.
    pub jump_prob: f64,
    pub init_model: usize,
    pub init: Vec<f64>,
}

/// Metropolis–Hastings ratio for a birth from `(lo, x)` to `(hi, (x, u))`.
/// The death ratio is its reciprocal. Up and down moves are proposed with
/// equal probability, so their selection probabilities cancel.
pub fn birth_ratio(prior_lo: f64, target_lo: f64, prior_hi: f64, target_hi: f64, proposal_u: f64) -> f64 {
    let num = prior_hi * target_hi;
    let den = prior_lo * target_lo * proposal_u;
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Reversible-jump sampler over a nested family of models.
pub fn rj_mcmc(models: &[RjModel<'_>], opts: &RjOptions) -> Result<ChainSample> {
    for pair in models.windows(2) {
        if pair[1].dim <= pair[0].dim || pair[1].birth.map(|b| b.dim()) != Some(pair[1].dim - pair[0].dim) {
            return Err(Error::InvalidParameter(
                "models must be nested with birth proposals".into(),
            ));
        }
    }
    let mut m = opts.init_model;
    let model = models.get(m).ok_or(Error::UnknownModel(m))?;
    if opts.init.len() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            found: opts.init.len(),
        });
    }
    let mut x = opts.init.clone();
    let mut px = (model.target)(&x);
    if !(px > 0.0 && model.prior_prob > 0.0) {
        return Err(Error::ZeroProbabilityInit);
    }
    let mut rng = SeededRng::new(opts.seed);
    let mut chain = ChainSample::new(
        opts.seed,
        vec![
            MoveStats::new("within"),
            MoveStats::new("birth"),
            MoveStats::new("death"),
        ],
        opts.steps,
    );
    let mut y = Vec::with_capacity(models.last().map_or(0, |l| l.dim));
    for step in 0..opts.steps {
        if rng.uniform() >= opts.jump_prob {
            let cur = &models[m];
            y.clear();
            y.extend(x.iter().map(|xi| xi + cur.step * rng.normal()));
            let py = (cur.target)(&y);
            chain.moves[0].proposed += 1;
            if py > 0.0 && rng.uniform() * px < py {
                core::mem::swap(&mut x, &mut y);
                px = py;
                chain.moves[0].accepted += 1;
            }
        } else if rng.uniform() < 0.5 {
            // Birth; proposing past the largest model is an automatic rejection.
            chain.moves[1].proposed += 1;
            if m + 1 < models.len() {
                let hi = &models[m + 1];
                let birth = hi.birth.expect("validated above");
                let u = birth.sample(&mut rng)?;
                let qu = birth.value(&u);
                y.clear();
                y.extend_from_slice(&x);
                y.extend_from_slice(&u);
                let py = (hi.target)(&y);
                let r = birth_ratio(models[m].prior_prob, px, hi.prior_prob, py, qu);
                if r > 0.0 && rng.uniform() < r {
                    core::mem::swap(&mut x, &mut y);
                    px = py;
                    m += 1;
                    chain.moves[1].accepted += 1;
                }
            }
        } else {
            chain.moves[2].proposed += 1;
            if m > 0 {
                let lo = &models[m - 1];
                let u = &x[lo.dim..];
                let qu = models[m].birth.expect("validated above").value(u);
                let py = (lo.target)(&x[..lo.dim]);
                let r = birth_ratio(lo.prior_prob, py, models[m].prior_prob, px, qu);
                if r.is_finite() && rng.uniform() * r < 1.0 {
                    x.truncate(lo.dim);
                    px = py;
                    m -= 1;
                    chain.moves[2].accepted += 1;
                }
            }
        }
        chain.push(models[m].k, &x);
        if step + 1 == STUCK_WINDOW && chain.moves.iter().all(|mv| mv.accepted == 0) {
            return Err(Error::StuckChain(STUCK_WINDOW));
        }
    }
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DiscreteDistribution;

    #[test]
    fn gaussian_moments() {
        let chain = metropolis(|x| (-0.5 * x[0] * x[0]).exp(), &[0.0], 1_000_000, 2.4, 17).unwrap();
        let xs = chain.coordinate(0, 0);
        let (mean, se) = batch_means(&xs, 50);
        assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let (var, se_var) = batch_means(&sq, 50);
        assert!((var - 1.0).abs() < 3.0 * se_var, "var {var} se {se_var}");
        let rate = chain.acceptance("random-walk").unwrap();
        assert!(rate > 0.0 && rate < 1.0);
    }

    #[test]
    fn zero_init_rejected() {
        let r = metropolis(|x| if x[0] > 0.0 { 1.0 } else { 0.0 }, &[-1.0], 10, 1.0, 1);
        assert_eq!(r.unwrap_err(), Error::ZeroProbabilityInit);
    }

    #[test]
    fn stuck_chain_detected() {
        let t = |x: &[f64]| if x[0] == 0.0 { 1.0 } else { 0.0 };
        assert_eq!(
            metropolis(t, &[0.0], 20_000, 1.0, 1).unwrap_err(),
            Error::StuckChain(STUCK_WINDOW)
        );
    }

    /// Exact transition matrix of the jump kernel on three states:
    /// `(1, a)`, `(2, (a, u1))`, `(2, (a, u2))`, with a two-atom birth proposal.
    #[test]
    fn jump_kernel_is_stationary() {
        let (p1, p2) = (0.3, 0.7);
        let t1 = 0.8;
        let t2 = [0.25, 1.9];
        let q = DiscreteDistribution::new(alloc::vec![(0.0, 0.35), (1.0, 0.65)]).unwrap();
        let qs = [q.atoms()[0].1, q.atoms()[1].1];
        let pi = [p1 * t1, p2 * t2[0], p2 * t2[1]];
        let z: f64 = pi.iter().sum();
        let pi: Vec<f64> = pi.iter().map(|v| v / z).collect();

        // From state 0 a birth is proposed with prob 1/2 and picks u_j with prob q_j.
        let mut p = [[0.0f64; 3]; 3];
        for j in 0..2 {
            let r = birth_ratio(p1, t1, p2, t2[j], qs[j]);
            p[0][j + 1] = 0.5 * qs[j] * r.min(1.0);
            let d = (1.0 / r).min(1.0);
            p[j + 1][0] = 0.5 * d;
        }
        for (i, row) in p.iter_mut().enumerate() {
            let off: f64 = (0..3).filter(|&j| j != i).map(|j| row[j]).sum();
            row[i] = 1.0 - off;
        }
        for j in 0..3 {
            let flow: f64 = (0..3).map(|i| pi[i] * p[i][j]).sum();
            assert!((flow - pi[j]).abs() < 1e-10, "state {j}: {flow} vs {}", pi[j]);
        }
    }

    #[test]
    fn nested_gaussian_model_frequencies() {
        // Model 1: N(0,1) on x. Model 2: N(0,1)^2. Equal targets up to the
        // extra normalized factor, so p(k=2) equals its prior probability.
        let g1 = |x: &[f64]| (-0.5 * x[0] * x[0]).exp();
        let g2 = |x: &[f64]| (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp() / (2.0 * core::f64::consts::PI).sqrt();
        let birth = Density::gaussian_iid(alloc::vec![0.0], 1.0).unwrap();
        let models = [
            RjModel {
                k: 1,
                dim: 1,
                prior_prob: 0.4,
                target: &g1,
                birth: None,
                step: 2.0,
            },
            RjModel {
                k: 2,
                dim: 2,
                prior_prob: 0.6,
                target: &g2,
                birth: Some(&birth),
                step: 2.0,
            },
        ];
        let opts = RjOptions {
            steps: 400_000,
            seed: 3,
            jump_prob: 0.5,
            init_model: 0,
            init: alloc::vec![0.0],
        };
        let chain = rj_mcmc(&models, &opts).unwrap();
        let (f2, se) = chain.model_frequency(2, 50);
        assert!((f2 - 0.6).abs() < 3.0 * se, "{f2} ± {se}");
    }

    #[test]
    fn excluded_model_never_visited() {
        let g = |x: &[f64]| (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp();
        let birth = Density::gaussian_iid(alloc::vec![0.0], 1.0).unwrap();
        let models = [
            RjModel {
                k: 1,
                dim: 1,
                prior_prob: 1.0,
                target: &g,
                birth: None,
                step: 1.0,
            },
            RjModel {
                k: 2,
                dim: 2,
                prior_prob: 0.0,
                target: &g,
                birth: Some(&birth),
                step: 1.0,
            },
        ];
        let opts = RjOptions {
            steps: 50_000,
            seed: 1,
            jump_prob: 0.5,
            init_model: 0,
            init: alloc::vec![0.0],
        };
        let chain = rj_mcmc(&models, &opts).unwrap();
        assert!(chain.ks().iter().all(|&k| k == 1));
    }
}
