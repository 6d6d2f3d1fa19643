//! Game-theoretic group explainers: single and coalitional game values,
//! partition trees with recursive values, MIC-based feature clustering, and
//! marginal/conditional games built from data and a model.

pub mod axioms;
pub mod cluster;
pub mod coalition;
pub mod data;
pub mod error;
pub mod game;
pub mod mic;
#[doc(hidden)]
pub mod oracles;
pub mod tree;
pub mod values;

pub use coalition::{CoalitionalKind, CoalitionalResult, CoalitionalValueSpec, CustomSpec, Intermediate};
pub use error::{Error, Result};
pub use game::{Game, Partition, PlayerSet};
pub use tree::{PartitionTree, RecursiveValues};
pub use values::{Banzhaf, GameValue, Shapley, ValueVector, WeightedValueSpec};
