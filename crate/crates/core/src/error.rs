use alloc::string::String;

/// Errors produced by the density, conditioning, hierarchical and
/// trans-dimensional machinery.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty box: lower bound {lo} is not below upper bound {hi}")]
    EmptyBox { lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("contradictory information: the density integrates to zero")]
    ContradictoryInformation,

    #[error("integral diverges")]
    Divergent,

    #[error("improper density cannot be normalized")]
    ImproperDensity,

    #[error("point {0} lies on a singularity of the coordinate map")]
    Singular(f64),

    #[error("non-positive Jacobian determinant {0} on the support")]
    NonPositiveJacobian(f64),

    #[error("probabilities do not sum to one (sum = {0})")]
    NotNormalized(f64),

    #[error("negative probability {0}")]
    NegativeProbability(f64),

    #[error("curve misses the support of the density")]
    CurveMissesSupport,

    #[error("curve embedding is not injective near t = {0}")]
    NonInjectiveCurve(f64),

    #[error("slab has zero mass at eps = {0}")]
    SlabMassZero(f64),

    #[error("no stable limit: slab deviations grow from {previous} to {current}")]
    NoStableLimit { previous: f64, current: f64 },

    #[error("support too small to fit exponent (span ratio {0})")]
    SupportTooSmall(f64),

    #[error("empty support")]
    EmptySupport,

    #[error("all hyperparameter cells have zero posterior mass")]
    AllCellsZero,

    #[error("integrand vanishes numerically across the search range")]
    VanishingIntegrand,

    #[error("hypothesis k = {0} excluded by data")]
    HypothesisExcluded(usize),

    #[error("unknown model index k = {0}")]
    UnknownModel(usize),

    #[error("improper likelihood evidence")]
    ImproperLikelihoodEvidence,

    #[error("ratio carries physical unit {0} and cannot rank hypotheses")]
    DimensionedRatio(String),

    #[error("support not hit by any Monte Carlo sample")]
    SupportNotHit,

    #[error("too few Monte Carlo samples: {0} (need at least 1000)")]
    TooFewSamples(usize),

    #[error("initial state has zero target probability")]
    ZeroProbabilityInit,

    #[error("stuck chain: no proposal accepted in {0} steps")]
    StuckChain(usize),

    #[error("observations are identical; the flip construction needs non-identical observations")]
    IdenticalObservations,

    #[error("no room to move the prior while keeping the likelihood support inside it")]
    NoFlipRoom,

    #[error("sampling is not available for this density kind")]
    NotSamplable,
}

pub type Result<T> = core::result::Result<T, Error>;
