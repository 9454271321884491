use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;

use trepac::bounds::{sample_size, HypothesisCount, Rounding};
use trepac::evaluation::{
    probabilistic_fidelity_exact, training_misclassified, true_error_by_leaves_exact, true_error_enumerate_exact,
};
use trepac::extraction::{grow_tree, ExtractionConfig, TerminationReason};
use trepac::feature::{satisfies, satisfies_all, CandidateSplit, Constraint, FeatureSpace};
use trepac::tree::{TreeDocument, TreeMeta};
use trepac::{DecisionTree, Distribution, MembershipOracle, TrainingSet};

/// Grows a tree by splitting `leaves[i % len]` on feature `f % features`,
/// negated when the flag is set.
fn build_tree(features: usize, ops: &[(usize, usize, bool)]) -> DecisionTree {
    let mut tree = DecisionTree::root_only();
    for &(i, f, negated) in ops {
        let leaves: Vec<_> = tree.leaves().cloned().collect();
        let leaf = &leaves[i % leaves.len()];
        let split = Constraint::split(CandidateSplit::eq(f % features, 1));
        let c = if negated { Constraint::not(split) } else { split };
        tree = tree.split_leaf(leaf, c).unwrap();
    }
    tree
}

fn ops(max: usize) -> impl Strategy<Value = Vec<(usize, usize, bool)>> {
    prop::collection::vec((0usize..64, 0usize..64, any::<bool>()), 0..=max)
}

fn exact_distribution(space: &FeatureSpace, raw: &[u32]) -> Distribution {
    let examples = space.enumerate().unwrap();
    let weights: Vec<u64> = (0..examples.len()).map(|i| u64::from(raw[i % raw.len()])).collect();
    let total: u64 = weights.iter().sum();
    let weights = weights
        .into_iter()
        .map(|w| BigRational::new(BigInt::from(w), BigInt::from(total)))
        .collect();
    Distribution::exact(examples, weights).unwrap()
}

fn constraint(depth: u32) -> BoxedStrategy<Constraint> {
    let leaf = prop_oneof![
        Just(Constraint::True),
        Just(Constraint::False),
        (0usize..4).prop_map(|f| Constraint::split(CandidateSplit::eq(f, 1))),
    ];
    leaf.prop_recursive(depth, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Constraint::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Constraint::and(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Constraint::or(a, b)),
        ]
    })
    .boxed()
}

proptest! {
    #[test]
    fn leaf_decomposition_matches_enumeration(
        features in 1usize..=6,
        tree_ops in ops(6),
        target_ops in ops(4),
        raw in prop::collection::vec(1u32..20, 1..8),
    ) {
        let space = FeatureSpace::binary("b", features);
        let dist = exact_distribution(&space, &raw);
        let tree = build_tree(features, &tree_ops);
        let target = MembershipOracle::from_tree(build_tree(features, &target_ops));
        prop_assert_eq!(
            true_error_by_leaves_exact(&tree, &target, &dist).unwrap(),
            true_error_enumerate_exact(&tree, &target, &dist).unwrap()
        );
        let total = true_error_enumerate_exact(&tree, &target, &dist).unwrap()
            + probabilistic_fidelity_exact(&tree, &target, &dist).unwrap();
        prop_assert!(total.is_one());
    }

    #[test]
    fn leaf_regions_partition_the_space(features in 1usize..=6, tree_ops in ops(8)) {
        let space = FeatureSpace::binary("b", features);
        let tree = build_tree(features, &tree_ops);
        let paths: Vec<_> = tree
            .leaves()
            .map(|l| (l.clone(), tree.constraints_to_reach(l).unwrap()))
            .collect();
        for e in space.enumerate().unwrap() {
            let hits: Vec<_> = paths
                .iter()
                .filter(|(_, p)| satisfies_all(&e, p).unwrap())
                .map(|(l, _)| l.clone())
                .collect();
            prop_assert_eq!(hits.len(), 1);
            prop_assert_eq!(&hits[0], &tree.reached_leaf(&e).unwrap());
            prop_assert_eq!(hits[0].class().unwrap_or(0), tree.classify(&e).unwrap());
        }
    }

    #[test]
    fn de_morgan(a in constraint(3), b in constraint(3), bits in prop::collection::vec(0u8..2, 4)) {
        let e = trepac::TabularExample::from_bits(&bits);
        let lhs = Constraint::not(Constraint::and(a.clone(), b.clone()));
        let rhs = Constraint::or(Constraint::not(a.clone()), Constraint::not(b.clone()));
        prop_assert_eq!(satisfies(&e, &lhs).unwrap(), satisfies(&e, &rhs).unwrap());
        let lhs = Constraint::not(Constraint::or(a.clone(), b.clone()));
        let rhs = Constraint::and(Constraint::not(a.clone()), Constraint::not(b));
        prop_assert_eq!(satisfies(&e, &lhs).unwrap(), satisfies(&e, &rhs).unwrap());
        prop_assert_eq!(
            satisfies(&e, &Constraint::not(Constraint::not(a.clone()))).unwrap(),
            satisfies(&e, &a).unwrap()
        );
    }

    #[test]
    fn node_order_does_not_matter(features in 1usize..=5, tree_ops in ops(6), target_ops in ops(3)) {
        let space = FeatureSpace::binary("b", features);
        let dist = exact_distribution(&space, &[1]);
        let tree = build_tree(features, &tree_ops);
        let target = MembershipOracle::from_tree(build_tree(features, &target_ops));
        let mut entries: Vec<_> = tree.nodes().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        entries.reverse();
        let rebuilt = DecisionTree::from_nodes(entries.into_iter().collect::<BTreeMap<_, _>>()).unwrap();
        prop_assert_eq!(
            true_error_enumerate_exact(&rebuilt, &target, &dist).unwrap(),
            true_error_enumerate_exact(&tree, &target, &dist).unwrap()
        );
    }

    #[test]
    fn self_labelled_training_error_is_zero(features in 1usize..=6, tree_ops in ops(6)) {
        let space = FeatureSpace::binary("b", features);
        let tree = build_tree(features, &tree_ops);
        let samples = TrainingSet::labelled_by(space.enumerate().unwrap(), |e| tree.classify(e)).unwrap();
        prop_assert_eq!(training_misclassified(&tree, &samples).unwrap(), 0);
    }

    #[test]
    fn budget_and_size_limit_hold(
        features in 1usize..=6,
        target_ops in ops(5),
        picks in prop::collection::vec(0usize..64, 1..80),
        size_limit in 1usize..8,
        k in 0u64..6,
    ) {
        let space = FeatureSpace::binary("b", features);
        let examples = space.enumerate().unwrap();
        let target = build_tree(features, &target_ops);
        let drawn = picks.iter().map(|&i| examples[i % examples.len()].clone());
        let samples = TrainingSet::labelled_by(drawn, |e| target.classify(e)).unwrap();
        let splits: Vec<_> = (0..features).map(|f| CandidateSplit::eq(f, 1)).collect();
        let config = ExtractionConfig::new(size_limit, k, samples.len(), splits, 0);
        let grown = grow_tree(&samples, &config).unwrap();
        prop_assert!(grown.tree.size_of() <= size_limit);
        prop_assert_eq!(grown.training_misclassified, training_misclassified(&grown.tree, &samples).unwrap());
        if grown.queue_exhausted || grown.termination_reason == TerminationReason::QueueEmpty {
            prop_assert!(grown.training_misclassified as u64 <= k);
        }
        if grown.termination_reason == TerminationReason::ErrorBudgetMet {
            prop_assert!(grown.training_misclassified as u64 <= k);
        }
    }

    #[test]
    fn sample_size_is_monotone(
        eps in 0.01f64..0.49,
        delta in 0.01f64..0.49,
        k in 0u64..30,
        n in 1u64..30,
        features in 1u32..40,
    ) {
        let m = |eps: f64, delta: f64, k: u64, n: u64| {
            sample_size(eps, delta, k, &HypothesisCount::trees(n, features), Rounding::Ceil).unwrap()
        };
        let base = m(eps, delta, k, n);
        prop_assert!(base >= (k as f64 / eps).ceil() as u64);
        prop_assert!(m(eps, delta, k + 1, n) >= base);
        prop_assert!(m(eps, delta, k, n + 1) >= base);
        prop_assert!(m(eps, delta * 0.5, k, n) >= base);
        prop_assert!(m(eps * 0.9, delta, k, n) >= base);
        let nearest = sample_size(eps, delta, k, &HypothesisCount::trees(n, features), Rounding::Nearest).unwrap();
        prop_assert!(nearest <= base && base <= nearest + 1);
    }

    #[test]
    fn documents_round_trip(features in 1usize..=6, tree_ops in ops(8), seed in any::<u64>()) {
        let tree = build_tree(features, &tree_ops);
        let doc = TreeDocument::new(tree, TreeMeta { seed: Some(seed), ..Default::default() });
        let text = doc.to_json_string().unwrap();
        let back = TreeDocument::from_json_str(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(back.to_json_string().unwrap(), text);
    }
}
