//! Event tree modeling and analysis.
//!
//! A [`SystemModel`] lists components and their ordered outcome spaces. From
//! it the engine generates the complete, sequence-preserving event tree,
//! reduces it with complete-cylinder [`ReductionDirective`]s, partitions the
//! resulting paths, and sums path probabilities over a partition.
//!
//! Probability arithmetic is generic over the scalar type: `f64` for
//! everyday use and exact rationals when a result must be checked without
//! rounding. The aliases at the crate root pick the common instantiations.

use std::fmt::{Debug, Display};

use num_traits::{Num, ToPrimitive};

pub mod cases;
pub mod document;
pub mod error;
pub mod eval;
pub mod model;
pub mod oracle;
pub mod partition;
pub mod probability;
pub mod reduction;
pub mod redundancy;
pub mod render;
pub mod tree;

pub use error::{Error, Result};
pub use eval::{partition_probability, path_probability, total_probability};
pub use model::{
    validate_model, ComponentDef, Severity, StateLabel, SystemModel, ValidationReport, Violation,
    ViolationKind,
};
pub use oracle::{oracle_brute_force, oracle_monte_carlo, MonteCarloEstimate};
pub use partition::{parse_index_ranges, partition, PartitionQuery, PartitionResult};
pub use probability::{
    exp_reliability, exp_unreliability, table_from_failure_rates, validate_probabilities,
    ProbabilityTable,
};
pub use reduction::{apply_reduction, ReductionDirective};
pub use redundancy::{add_parallel_redundancy, redundant_table};
pub use render::{histogram_data, paths_report, to_dot, LabelStyle, RenderOptions};
pub use tree::{enumerate_paths, generate_complete, EventTree, NodeId, Path};

/// Scalar usable as a probability: a numeric field with ordering, printable,
/// and convertible to `f64` for sampling and reporting.
pub trait Probability:
    Num + Clone + PartialOrd + Debug + Display + ToPrimitive + Send + Sync + 'static
{
}

impl<T> Probability for T where
    T: Num + Clone + PartialOrd + Debug + Display + ToPrimitive + Send + Sync + 'static
{
}

/// Exact rational probabilities.
pub type Exact = num_rational::BigRational;

/// Double-precision table, the one the file formats carry.
pub type Probabilities = ProbabilityTable<f64>;

/// Table over exact rationals.
pub type ExactProbabilities = ProbabilityTable<Exact>;
