//! Error and fidelity metrics.
//!
//! True error is computed exactly over the finite example space of a
//! [`Distribution`], either by direct enumeration or by summing per-leaf
//! disagreement mass. Both routes have a float and an exact-rational form.

mod validate;

use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::feature::{satisfies_all, TabularExample};
use crate::oracle::{Distribution, MembershipOracle, TrainingSet};
use crate::tree::DecisionTree;

pub use validate::{random_target_tree, validate_pac, TrialOutcome, ValidationConfig, ValidationReport};

/// Number of training items the tree gets wrong, counting multiplicity.
pub fn training_misclassified(tree: &DecisionTree, samples: &TrainingSet) -> Result<usize> {
    let mut wrong = 0;
    for item in &samples.items {
        if tree.classify(&item.example)? != item.label {
            wrong += 1;
        }
    }
    Ok(wrong)
}

pub fn training_error(tree: &DecisionTree, samples: &TrainingSet) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("training error of an empty training set"));
    }
    Ok(training_misclassified(tree, samples)? as f64 / samples.len() as f64)
}

fn target_labels(target: &MembershipOracle, dist: &Distribution) -> Result<Vec<u8>> {
    if dist.is_empty() {
        return Err(Error::domain("distribution has an empty example space"));
    }
    target.query_batch(dist.examples())
}

/// Indices of the examples on which tree and target disagree.
pub fn disagreements(tree: &DecisionTree, target: &MembershipOracle, dist: &Distribution) -> Result<Vec<usize>> {
    let labels = target_labels(target, dist)?;
    let mut out = Vec::new();
    for (i, (example, label)) in dist.examples().iter().zip(labels).enumerate() {
        if tree.classify(example)? != label {
            out.push(i);
        }
    }
    Ok(out)
}

/// `D(μ(tree) ⊕ μ(target))` by enumeration.
pub fn true_error_enumerate(tree: &DecisionTree, target: &MembershipOracle, dist: &Distribution) -> Result<f64> {
    Ok(disagreements(tree, target, dist)?
        .into_iter()
        .map(|i| dist.weight(i))
        .sum())
}

pub fn true_error_enumerate_exact(
    tree: &DecisionTree,
    target: &MembershipOracle,
    dist: &Distribution,
) -> Result<BigRational> {
    Ok(disagreements(tree, target, dist)?
        .into_iter()
        .map(|i| dist.weight_exact(i))
        .sum())
}

/// Per-leaf disagreement sets: for each leaf, the examples that satisfy its
/// full path constraint and whose target label differs from the leaf class.
fn leaf_error_indices(tree: &DecisionTree, target: &MembershipOracle, dist: &Distribution) -> Result<Vec<usize>> {
    let labels = target_labels(target, dist)?;
    let mut out = Vec::new();
    for leaf in tree.leaves() {
        let path = tree.constraints_to_reach(leaf)?;
        let class = leaf.class().unwrap_or(0);
        for (i, example) in dist.examples().iter().enumerate() {
            if labels[i] != class && satisfies_all(example, &path)? {
                out.push(i);
            }
        }
    }
    Ok(out)
}

/// True error as the sum over 0-leaves of the target-positive mass they
/// reach plus the sum over 1-leaves of the target-negative mass they reach.
pub fn true_error_by_leaves(tree: &DecisionTree, target: &MembershipOracle, dist: &Distribution) -> Result<f64> {
    Ok(leaf_error_indices(tree, target, dist)?
        .into_iter()
        .map(|i| dist.weight(i))
        .sum())
}

pub fn true_error_by_leaves_exact(
    tree: &DecisionTree,
    target: &MembershipOracle,
    dist: &Distribution,
) -> Result<BigRational> {
    Ok(leaf_error_indices(tree, target, dist)?
        .into_iter()
        .map(|i| dist.weight_exact(i))
        .sum())
}

/// Share of `examples` on which tree and target agree.
pub fn fidelity(tree: &DecisionTree, target: &MembershipOracle, examples: &[TabularExample]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::domain("fidelity over an empty example set"));
    }
    let labels = target.query_batch(examples)?;
    let mut agree = 0usize;
    for (example, label) in examples.iter().zip(labels) {
        if tree.classify(example)? == label {
            agree += 1;
        }
    }
    Ok(agree as f64 / examples.len() as f64)
}

/// `1 − true error`.
pub fn probabilistic_fidelity(tree: &DecisionTree, target: &MembershipOracle, dist: &Distribution) -> Result<f64> {
    Ok(1.0 - true_error_enumerate(tree, target, dist)?)
}

pub fn probabilistic_fidelity_exact(
    tree: &DecisionTree,
    target: &MembershipOracle,
    dist: &Distribution,
) -> Result<BigRational> {
    Ok(BigRational::one() - true_error_enumerate_exact(tree, target, dist)?)
}

/// All metrics for one tree against one target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub training_error: Option<f64>,
    pub true_error: f64,
    pub true_misclassified: usize,
    pub fidelity: f64,
    pub probabilistic_fidelity: f64,
}

impl EvalResult {
    pub const CSV_HEADER: &'static str =
        "training_error,true_error,true_misclassified,fidelity,probabilistic_fidelity";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.training_error.map(|v| v.to_string()).unwrap_or_default(),
            self.true_error,
            self.true_misclassified,
            self.fidelity,
            self.probabilistic_fidelity
        )
    }
}

pub fn evaluate(
    tree: &DecisionTree,
    target: &MembershipOracle,
    dist: &Distribution,
    training: Option<&TrainingSet>,
) -> Result<EvalResult> {
    let wrong = disagreements(tree, target, dist)?;
    let true_error_exact: BigRational = wrong.iter().map(|&i| dist.weight_exact(i)).sum();
    let true_error = true_error_exact.to_f64().unwrap_or(f64::NAN);
    let training_error = training.map(|t| training_error(tree, t)).transpose()?;
    Ok(EvalResult {
        training_error,
        true_error,
        true_misclassified: wrong.len(),
        fidelity: (dist.len() - wrong.len()) as f64 / dist.len() as f64,
        probabilistic_fidelity: (BigRational::one() - true_error_exact).to_f64().unwrap_or(f64::NAN),
    })
}
