//! Decision-tree extraction from black-box binary classifiers.
//!
//! A surrogate tree is grown from membership queries on a training set whose
//! size comes from a PAC bound that tolerates `k` training mistakes. The
//! crate also carries the exact evaluation machinery (true error over finite
//! spaces, fidelity), a Monte-Carlo check of the guarantee, and an
//! occupational gender-bias probe for masked language models.

pub mod bounds;
pub mod case_study;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod extraction;
pub mod feature;
pub mod oracle;
pub mod tree;

pub use bounds::{sample_size, tree_size_estimate, HypothesisCount, Rounding};
pub use error::{Error, Result};
pub use extraction::{trepac, ExtractionConfig, ExtractionReport, TerminationReason};
pub use feature::{CandidateSplit, Constraint, FeatureSpace, TabularExample};
pub use oracle::{Distribution, MembershipOracle, TrainingSet};
pub use tree::{DecisionTree, NodePath, TreeDocument};
