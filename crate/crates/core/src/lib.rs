//! Exact analysis of multi-agent maximum coverage games with uncertain
//! resource values and deterministic information signaling.
//!
//! The crate enumerates pure Nash and Bayes-Nash equilibria, computes optimal
//! welfare, price of anarchy and stability, and the value of informing agents
//! (the ratio of informed to uninformed equilibrium welfare, for the best and
//! worst equilibria). Everything is generic over a [`Scalar`]; the aliases
//! below fix the exact big-rational backend used by default.

pub mod equilibrium;
pub mod error;
pub mod instances;
pub mod metrics;
pub mod model;
pub mod partition;
pub mod scalar;
pub mod search;

pub use error::{CoverError, ErrorKind, Result};
pub use model::{
    make_fg, make_fmc, posterior_mean, potential, utility, welfare, Action, Allocation, CoverageGame,
    JointStrategy, RuleKind, SignalingPolicy, UtilityRule, ValueDistribution, ValueVector,
};
pub use scalar::Scalar;

/// Arbitrary-precision exact rational.
pub type Rational = num_rational::BigRational;

pub type ExactValues = ValueVector<Rational>;
pub type ExactDistribution = ValueDistribution<Rational>;
pub type ExactRule = UtilityRule<Rational>;
pub type ExactBundle = instances::InstanceBundle<Rational>;
pub type ExactNashSet = equilibrium::NashSet<Rational>;
pub type ExactBayesNashSet = equilibrium::BayesNashSet<Rational>;
pub type ExactReport = metrics::MetricReport<Rational>;

pub type FloatValues = ValueVector<f64>;
pub type FloatDistribution = ValueDistribution<f64>;
pub type FloatRule = UtilityRule<f64>;

/// Default cap on the (pruned) joint action space enumerated per game.
pub const DEFAULT_JOINT_CAP: u64 = 10_000_000;

/// Default cap on Bayes-Nash strategies materialized at once.
pub const DEFAULT_STRATEGY_CAP: u64 = 1_000_000;
