use std::ops::Sub;

use num_traits::Zero;

use crate::error::Result;
use crate::feature::{CandidateSplit, Constraint};
use crate::tree::DecisionTree;

/// Greedy top-down growth driven by an exact error function.
///
/// Each round scans every (leaf, split) pair in leaf-path then candidate
/// order and applies the pair with the largest error decrease; on ties the
/// last pair scanned wins. A pair is only eligible when its decrease is at
/// least zero, so growth stops early if every split would make the tree
/// worse. Intended for small enumerable spaces where the true error is
/// computable.
pub fn topdown<E, F>(mut error: F, size_limit: usize, splits: &[CandidateSplit]) -> Result<DecisionTree>
where
    E: Clone + PartialOrd + Sub<Output = E> + Zero,
    F: FnMut(&DecisionTree) -> Result<E>,
{
    let mut tree = DecisionTree::root_only();
    while tree.size_of() < size_limit {
        let current = error(&tree)?;
        let mut best_delta = E::zero();
        let mut best: Option<DecisionTree> = None;
        let leaves: Vec<_> = tree.leaves().cloned().collect();
        for leaf in &leaves {
            for split in splits {
                let candidate = tree.split_leaf(leaf, Constraint::split(split.clone()))?;
                let delta = current.clone() - error(&candidate)?;
                if delta >= best_delta {
                    best_delta = delta;
                    best = Some(candidate);
                }
            }
        }
        match best {
            Some(next) => tree = next,
            None => break,
        }
    }
    Ok(tree)
}
