//! Evidence, Bayes factors and posterior odds over model spaces of
//! different dimension.
//!
//! A [`TransDimProblem`] lists models `k` with their forward relation and
//! prior, one data prior shared by all of them, and a discrete prior `p_k`.
//! The conditional evidence of `k` is `∫ p_d(g_k(m)) p_{m|k}(m) dm`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::density::Density;
use crate::diffeo::Diffeomorphism;
use crate::error::{Error, Result};
use crate::forward::{graph_restrict, ForwardModel};
use crate::oracle::mcmc::{rj_mcmc, ChainSample, MoveStats, RjModel, RjOptions};
use crate::oracle::{IntegralResult, Method};
use crate::units::{Quantity, UnitSignature};

pub mod gaussian;
pub mod uniform;

pub use gaussian::{region_map, GaussianExampleConfig, GaussianExampleReport, Region, RegionCell, RegionMap};
pub use uniform::{
    matched_width_flip, parsimony_flip, FlipCertificate, MatchedWidthFlip, UniformExampleConfig, UniformExampleReport,
    Variant,
};

/// Tolerance on `Σ p_k = 1` and on the mass of each proper model prior.
const MASS_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub k: usize,
    pub forward: ForwardModel,
    pub prior: Density,
}

#[derive(Debug, Clone)]
pub struct TransDimProblem {
    models: Vec<ModelSpec>,
    data_prior: Density,
    p_k: Vec<f64>,
    allow_improper: bool,
}

impl TransDimProblem {
    /// `p_k[i]` is the prior probability of `models[i]`.
    pub fn new(models: Vec<ModelSpec>, data_prior: Density, p_k: Vec<f64>) -> Result<Self> {
        Self::build(models, data_prior, p_k, false)
    }

    /// Like [`new`](Self::new) but accepts improper model priors. Their
    /// evidence is then only defined up to the arbitrary prior scale.
    pub fn with_improper_priors(models: Vec<ModelSpec>, data_prior: Density, p_k: Vec<f64>) -> Result<Self> {
        Self::build(models, data_prior, p_k, true)
    }

    fn build(models: Vec<ModelSpec>, data_prior: Density, p_k: Vec<f64>, allow_improper: bool) -> Result<Self> {
        if models.is_empty() || models.len() != p_k.len() {
            return Err(Error::DimensionMismatch {
                expected: models.len(),
                found: p_k.len(),
            });
        }
        if let Some(&p) = p_k.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::NegativeProbability(p));
        }
        let total: f64 = p_k.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(total));
        }
        for (i, m) in models.iter().enumerate() {
            if models[..i].iter().any(|o| o.k == m.k) {
                return Err(Error::InvalidParameter(format!("model k = {} registered twice", m.k)));
            }
            if m.forward.m_dim() != m.prior.dim() {
                return Err(Error::DimensionMismatch {
                    expected: m.forward.m_dim(),
                    found: m.prior.dim(),
                });
            }
            if m.forward.d_dim() != data_prior.dim() {
                return Err(Error::DimensionMismatch {
                    expected: m.forward.d_dim(),
                    found: data_prior.dim(),
                });
            }
            if m.prior.is_improper() {
                if !allow_improper {
                    return Err(Error::ImproperDensity);
                }
            } else {
                let mass = m.prior.integrate(1e-10).value;
                if (mass - 1.0).abs() > MASS_TOL {
                    return Err(Error::NotNormalized(mass));
                }
            }
        }
        Ok(Self {
            models,
            data_prior,
            p_k,
            allow_improper,
        })
    }

    pub fn models(&self) -> &[ModelSpec] {
        &self.models
    }

    pub fn data_prior(&self) -> &Density {
        &self.data_prior
    }

    pub fn k_values(&self) -> Vec<usize> {
        self.models.iter().map(|m| m.k).collect()
    }

    fn index(&self, k: usize) -> Result<usize> {
        self.models.iter().position(|m| m.k == k).ok_or(Error::UnknownModel(k))
    }

    pub fn prior_probability(&self, k: usize) -> Result<f64> {
        Ok(self.p_k[self.index(k)?])
    }

    /// Unnormalized posterior within model `k`: `p_d(g_k(m)) p_{m|k}(m)`.
    pub fn model_posterior(&self, k: usize) -> Result<Density> {
        let m = &self.models[self.index(k)?];
        graph_restrict(&self.data_prior, &m.prior, &m.forward)
    }

    pub fn conditional_evidence(&self, k: usize, rel_tol: f64) -> Result<Evidence> {
        let post = self.model_posterior(k)?;
        let r = post.integrate(rel_tol);
        let infinite = !post.support().is_finite();
        if !r.value.is_finite() || (infinite && !r.converged && r.error > r.value.abs()) {
            return Err(Error::Divergent);
        }
        Ok(Evidence {
            k,
            prior_probability: self.p_k[self.index(k)?],
            value: r.value,
            error: r.error,
            method: r.method,
            unit: post.value_unit().clone(),
        })
    }

    pub fn evidences(&self, rel_tol: f64) -> Result<Vec<Evidence>> {
        self.models
            .iter()
            .map(|m| self.conditional_evidence(m.k, rel_tol))
            .collect()
    }

    pub fn total_evidence(&self, rel_tol: f64) -> Result<IntegralResult> {
        let ev = self.evidences(rel_tol)?;
        check_common_unit(&ev)?;
        Ok(IntegralResult {
            value: ev.iter().map(|e| e.value * e.prior_probability).sum(),
            error: ev.iter().map(|e| e.error * e.prior_probability).sum(),
            method: Method::Quadrature,
            evaluations: ev.len() as u64,
            converged: true,
        })
    }

    /// `p(d | k1) / p(d | k2)`.
    pub fn bayes_factor(&self, k1: usize, k2: usize, rel_tol: f64) -> Result<f64> {
        let a = self.conditional_evidence(k1, rel_tol)?;
        let b = self.conditional_evidence(k2, rel_tol)?;
        evidence_ratio(&a, &b)
    }

    /// `p(k1 | d) / p(k2 | d)`.
    pub fn posterior_odds(&self, k1: usize, k2: usize, rel_tol: f64) -> Result<f64> {
        let bf = self.bayes_factor(k1, k2, rel_tol)?;
        Ok(bf * self.prior_probability(k1)? / self.prior_probability(k2)?)
    }

    pub fn report(&self, rel_tol: f64) -> Result<EvidenceReport> {
        EvidenceReport::from_evidences(self.evidences(rel_tol)?, vec![String::from("evidence-integral")])
    }

    /// `∫ p_d(g_k(m)) dm` over the support of the model prior, with no prior
    /// weight. Its unit is the data-density unit times the model volume unit.
    pub fn likelihood_evidence(&self, k: usize, rel_tol: f64) -> Result<Quantity> {
        let m = &self.models[self.index(k)?];
        let volume = UnitSignature::product(m.prior.coord_units());
        let flat = Density::constant(m.prior.support().clone(), 1.0)?
            .with_units(m.prior.coord_units().to_vec())?
            .with_value_unit(volume);
        let hints = m.prior.scale_hints();
        let post = graph_restrict(&self.data_prior, &flat, &m.forward)?.with_scale_hints(hints);
        let r = post.integrate(rel_tol);
        let infinite = !post.support().is_finite();
        if !r.value.is_finite() || (infinite && !r.converged) {
            return Err(Error::ImproperLikelihoodEvidence);
        }
        Ok(Quantity::new(r.value, post.value_unit().clone()))
    }

    /// Ratio of likelihood evidences. Across dimensions this carries a unit.
    pub fn likelihood_evidence_ratio(&self, k1: usize, k2: usize, rel_tol: f64) -> Result<EvidenceRatio> {
        let a = self.likelihood_evidence(k1, rel_tol)?;
        let b = self.likelihood_evidence(k2, rel_tol)?;
        if b.value == 0.0 {
            return Err(Error::HypothesisExcluded(k2));
        }
        Ok(EvidenceRatio::from_quantity(a.ratio(&b)))
    }

    /// The same problem with every model reparameterized by `h_k`
    /// (`maps[i]` applies to `models[i]`).
    pub fn reparameterized(&self, maps: &[Diffeomorphism]) -> Result<Self> {
        if maps.len() != self.models.len() {
            return Err(Error::DimensionMismatch {
                expected: self.models.len(),
                found: maps.len(),
            });
        }
        let models = self
            .models
            .iter()
            .zip(maps)
            .map(|(m, h)| {
                Ok(ModelSpec {
                    k: m.k,
                    forward: m.forward.reparameterized(h)?,
                    prior: m.prior.pushforward(h)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            models,
            data_prior: self.data_prior.clone(),
            p_k: self.p_k.clone(),
            allow_improper: self.allow_improper,
        })
    }

    /// Model coordinates rescaled by `c`, as when changing their unit.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        let maps: Vec<Diffeomorphism> = self
            .models
            .iter()
            .map(|m| Diffeomorphism::scaling(&vec![c; m.prior.dim()]))
            .collect();
        self.reparameterized(&maps)
    }

    /// Reversible-jump chain over the models in registration order. Models
    /// must be nested; `births[i]` proposes the coordinates that model
    /// `i + 1` adds to model `i`.
    pub fn rj_sample(&self, births: &[Density], steps: usize, seed: u64, steps_within: &[f64]) -> Result<ChainSample> {
        let n = self.models.len();
        if births.len() + 1 != n || steps_within.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n - 1,
                found: births.len(),
            });
        }
        let posts = self
            .models
            .iter()
            .map(|m| self.model_posterior(m.k))
            .collect::<Result<Vec<_>>>()?;
        let targets: Vec<_> = posts.iter().map(|p| move |x: &[f64]| p.value(x)).collect();
        let rj: Vec<RjModel<'_>> = self
            .models
            .iter()
            .enumerate()
            .map(|(i, m)| RjModel {
                k: m.k,
                dim: m.prior.dim(),
                prior_prob: self.p_k[i],
                target: &targets[i],
                birth: if i == 0 { None } else { Some(&births[i - 1]) },
                step: steps_within[i],
            })
            .collect();
        let init_model = self
            .p_k
            .iter()
            .position(|p| *p > 0.0)
            .ok_or(Error::NotNormalized(0.0))?;
        let init = find_positive_point(&posts[init_model])?;
        rj_mcmc(
            &rj,
            &RjOptions {
                steps,
                seed,
                jump_prob: 0.5,
                init_model,
                init,
            },
        )
    }
}

/// A point of positive density: the support midpoint or the best node of a
/// grid over the active region.
fn find_positive_point(p: &Density) -> Result<Vec<f64>> {
    let hints = p.scale_hints();
    let center: Vec<f64> = hints.iter().map(|h| h.0).collect();
    if p.value(&center) > 0.0 {
        return Ok(center);
    }
    let domain = crate::density::active_box(p.support(), |x| p.value(x));
    domain
        .interior_grid(64)
        .into_iter()
        .map(|x| (p.value(&x), x))
        .filter(|(v, _)| *v > 0.0)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, x)| x)
        .ok_or(Error::ContradictoryInformation)
}

/// Model frequencies with batch-means standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RjSummary {
    pub steps: usize,
    pub seed: u64,
    pub frequencies: Vec<ModelFrequency>,
    pub moves: Vec<MoveStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelFrequency {
    pub k: usize,
    pub frequency: f64,
    pub standard_error: f64,
}

pub const RJ_BATCHES: usize = 100;

impl RjSummary {
    pub fn from_chain(chain: &ChainSample, ks: &[usize]) -> Self {
        let frequencies = ks
            .iter()
            .map(|&k| {
                let (frequency, standard_error) = chain.model_frequency(k, RJ_BATCHES);
                ModelFrequency {
                    k,
                    frequency,
                    standard_error,
                }
            })
            .collect();
        Self {
            steps: chain.len(),
            seed: chain.seed,
            frequencies,
            moves: chain.moves.clone(),
        }
    }

    pub fn frequency(&self, k: usize) -> Option<ModelFrequency> {
        self.frequencies.iter().copied().find(|f| f.k == k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub k: usize,
    pub prior_probability: f64,
    pub value: f64,
    pub error: f64,
    pub method: Method,
    pub unit: UnitSignature,
}

impl Evidence {
    pub fn analytic(k: usize, prior_probability: f64, value: f64, unit: UnitSignature) -> Self {
        Self {
            k,
            prior_probability,
            value,
            error: 0.0,
            method: Method::Analytic,
            unit,
        }
    }
}

fn check_common_unit(ev: &[Evidence]) -> Result<()> {
    if let Some(first) = ev.first() {
        if let Some(other) = ev.iter().find(|e| e.unit != first.unit) {
            return Err(Error::DimensionedRatio(format!("{}", &other.unit / &first.unit)));
        }
    }
    Ok(())
}

fn evidence_ratio(a: &Evidence, b: &Evidence) -> Result<f64> {
    let unit = &a.unit / &b.unit;
    if !unit.is_dimensionless() {
        return Err(Error::DimensionedRatio(format!("{unit}")));
    }
    if b.value == 0.0 {
        return Err(Error::HypothesisExcluded(b.k));
    }
    Ok(a.value / b.value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairComparison {
    pub k1: usize,
    pub k2: usize,
    /// `p(d | k1) / p(d | k2)`.
    pub bayes_factor: f64,
    pub prior_odds: f64,
    pub posterior_odds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelProbability {
    pub k: usize,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceReport {
    pub evidences: Vec<Evidence>,
    pub total: f64,
    pub total_error: f64,
    pub unit: UnitSignature,
    /// Pairs with `k1 > k2` and a nonzero `p(d | k2)` and `p_k(k2)`.
    pub comparisons: Vec<PairComparison>,
    pub posterior: Vec<ModelProbability>,
    pub formulas: Vec<String>,
}

impl EvidenceReport {
    pub fn from_evidences(evidences: Vec<Evidence>, formulas: Vec<String>) -> Result<Self> {
        check_common_unit(&evidences)?;
        let unit = evidences.first().map(|e| e.unit.clone()).unwrap_or_default();
        let total: f64 = evidences.iter().map(|e| e.value * e.prior_probability).sum();
        let total_error: f64 = evidences.iter().map(|e| e.error * e.prior_probability).sum();
        let mut comparisons = Vec::new();
        for a in &evidences {
            for b in &evidences {
                if a.k > b.k && b.value > 0.0 && b.prior_probability > 0.0 {
                    let bayes_factor = evidence_ratio(a, b)?;
                    let prior_odds = a.prior_probability / b.prior_probability;
                    comparisons.push(PairComparison {
                        k1: a.k,
                        k2: b.k,
                        bayes_factor,
                        prior_odds,
                        posterior_odds: bayes_factor * prior_odds,
                    });
                }
            }
        }
        let posterior = evidences
            .iter()
            .map(|e| ModelProbability {
                k: e.k,
                probability: if total > 0.0 {
                    e.value * e.prior_probability / total
                } else {
                    f64::NAN
                },
            })
            .collect();
        Ok(Self {
            evidences,
            total,
            total_error,
            unit,
            comparisons,
            posterior,
            formulas,
        })
    }

    pub fn evidence(&self, k: usize) -> Option<&Evidence> {
        self.evidences.iter().find(|e| e.k == k)
    }

    pub fn bayes_factor(&self, k1: usize, k2: usize) -> Option<f64> {
        self.comparisons
            .iter()
            .find(|c| c.k1 == k1 && c.k2 == k2)
            .map(|c| c.bayes_factor)
    }

    pub fn posterior_probability(&self, k: usize) -> Option<f64> {
        self.posterior.iter().find(|p| p.k == k).map(|p| p.probability)
    }
}

/// A ratio of evidences. Only dimensionless ratios can rank hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EvidenceRatio {
    Dimensionless { value: f64 },
    Dimensioned { quantity: Quantity },
}

impl EvidenceRatio {
    pub fn from_quantity(q: Quantity) -> Self {
        if q.is_dimensionless() {
            Self::Dimensionless { value: q.value }
        } else {
            Self::Dimensioned { quantity: q }
        }
    }

    pub fn is_dimensionless(&self) -> bool {
        matches!(self, Self::Dimensionless { .. })
    }

    /// The bare number, refused when the ratio carries a unit.
    pub fn rank_value(&self) -> Result<f64> {
        match self {
            Self::Dimensionless { value } => Ok(*value),
            Self::Dimensioned { quantity } => Err(Error::DimensionedRatio(format!("{}", quantity.unit))),
        }
    }

    pub fn quantity(&self) -> Quantity {
        match self {
            Self::Dimensionless { value } => Quantity::new(*value, UnitSignature::dimensionless()),
            Self::Dimensioned { quantity } => quantity.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::BoxSupport;

    fn scalar_problem(p_k: Vec<f64>, sigma2: f64) -> TransDimProblem {
        let data = Density::gaussian_iid(vec![0.3], 1.0).unwrap();
        let m1 = ModelSpec {
            k: 1,
            forward: ForwardModel::identity(1).unwrap(),
            prior: Density::gaussian_iid(vec![0.0], 1.0).unwrap(),
        };
        let m2 = ModelSpec {
            k: 2,
            forward: ForwardModel::identity(1).unwrap(),
            prior: Density::gaussian_iid(vec![0.0], sigma2).unwrap(),
        };
        TransDimProblem::new(vec![m1, m2], data, p_k).unwrap()
    }

    #[test]
    fn identical_models_give_unit_factor() {
        let p = scalar_problem(vec![0.5, 0.5], 1.0);
        let bf = p.bayes_factor(2, 1, 1e-12).unwrap();
        assert!((bf - 1.0).abs() < 1e-12);
        let e = p.conditional_evidence(1, 1e-12).unwrap();
        let total = p.total_evidence(1e-12).unwrap();
        assert!((total.value - e.value).abs() < 1e-13);
    }

    #[test]
    fn degenerate_model_prior_gives_first_evidence() {
        let p = scalar_problem(vec![1.0, 0.0], 3.0);
        let e = p.conditional_evidence(1, 1e-12).unwrap();
        // N(0.3; 0, sqrt 2)
        let want = (-0.09f64 / 4.0).exp() / (2.0 * core::f64::consts::PI).sqrt() / 2.0f64.sqrt();
        assert!((e.value - want).abs() < 1e-12 * want, "{} vs {want}", e.value);
        assert!((p.total_evidence(1e-12).unwrap().value - e.value).abs() < 1e-15);
        let r = p.report(1e-12).unwrap();
        assert_eq!(r.posterior_probability(2), Some(0.0));
    }

    #[test]
    fn odds_are_factor_times_prior_odds() {
        let p = scalar_problem(vec![0.3, 0.7], 2.0);
        let bf = p.bayes_factor(2, 1, 1e-12).unwrap();
        let odds = p.posterior_odds(2, 1, 1e-12).unwrap();
        assert_eq!(odds, bf * (0.7 / 0.3));
        let r = p.report(1e-12).unwrap();
        let c = &r.comparisons[0];
        assert_eq!(c.posterior_odds, c.bayes_factor * c.prior_odds);
    }

    #[test]
    fn validation() {
        let data = Density::gaussian_iid(vec![0.0], 1.0).unwrap();
        let model = |k| ModelSpec {
            k,
            forward: ForwardModel::identity(1).unwrap(),
            prior: Density::gaussian_iid(vec![0.0], 1.0).unwrap(),
        };
        assert!(matches!(
            TransDimProblem::new(vec![model(1), model(2)], data.clone(), vec![0.5, 0.6]),
            Err(Error::NotNormalized(_))
        ));
        assert!(TransDimProblem::new(vec![model(1), model(1)], data.clone(), vec![0.5, 0.5]).is_err());
        let unnormalized = ModelSpec {
            k: 3,
            forward: ForwardModel::identity(1).unwrap(),
            prior: Density::constant(BoxSupport::from_bounds(&[(0.0, 1.0)]).unwrap(), 2.0).unwrap(),
        };
        assert!(matches!(
            TransDimProblem::new(vec![unnormalized], data.clone(), vec![1.0]),
            Err(Error::NotNormalized(_))
        ));
        let improper = ModelSpec {
            k: 1,
            forward: ForwardModel::identity(1).unwrap(),
            prior: Density::improper_flat(1),
        };
        assert_eq!(
            TransDimProblem::new(vec![improper.clone()], data.clone(), vec![1.0]).unwrap_err(),
            Error::ImproperDensity
        );
        let p = TransDimProblem::with_improper_priors(vec![improper], data, vec![1.0]).unwrap();
        let e = p.conditional_evidence(1, 1e-10).unwrap();
        assert!((e.value - 1.0).abs() < 1e-9);
        let p = scalar_problem(vec![0.5, 0.5], 1.0);
        assert_eq!(p.conditional_evidence(7, 1e-8).unwrap_err(), Error::UnknownModel(7));
    }

    #[test]
    fn contradictory_data_gives_zero_and_excludes() {
        let data = Density::uniform_box(BoxSupport::from_bounds(&[(5.0, 6.0)]).unwrap()).unwrap();
        let prior = Density::uniform_box(BoxSupport::from_bounds(&[(0.0, 1.0)]).unwrap()).unwrap();
        let model = |k| ModelSpec {
            k,
            forward: ForwardModel::identity(1).unwrap(),
            prior: prior.clone(),
        };
        let p = TransDimProblem::new(vec![model(1), model(2)], data, vec![0.5, 0.5]).unwrap();
        assert_eq!(p.conditional_evidence(1, 1e-10).unwrap().value, 0.0);
        assert_eq!(p.bayes_factor(2, 1, 1e-10).unwrap_err(), Error::HypothesisExcluded(1));
    }

    #[test]
    fn dimensioned_ratio_refuses_ranking() {
        let q = Quantity::new(2.5, UnitSignature::slowness());
        let r = EvidenceRatio::from_quantity(q);
        assert!(!r.is_dimensionless());
        assert!(matches!(r.rank_value(), Err(Error::DimensionedRatio(_))));
        let r = EvidenceRatio::from_quantity(Quantity::new(2.5, UnitSignature::dimensionless()));
        assert_eq!(r.rank_value().unwrap(), 2.5);
    }
}
