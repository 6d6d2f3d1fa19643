//! Explanations of models over data.

pub mod dataset;
pub mod explain;
pub mod family;
pub mod games;
pub mod model;
pub mod stability;

pub use dataset::{Dataset, Table};
pub use explain::{explain, ExplainConfig, ExplanationMatrix, GameSource, Structure, Unit, UnitKind, ValueChoice};
pub use family::{Generated, LatentLinear, SyntheticFamily};
pub use games::{analytic_conditional_game, empirical_marginal_game, monte_carlo_conditional_game, population_marginal_game};
pub use model::{ModelOracle, Polynomial, SubprocessModel};
pub use stability::{stability_report, StabilityReport};
