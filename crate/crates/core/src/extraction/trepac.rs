use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::extraction::entropy::{choose, SplitChoice, SplitCounts};
use crate::feature::CandidateSplit;
use crate::oracle::{build_training_set, Distribution, MembershipOracle, TrainingSet};
use crate::tree::{DecisionTree, NodePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueueDiscipline {
    /// Breadth-first expansion.
    #[default]
    Fifo,
}

impl fmt::Display for QueueDiscipline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("fifo")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionConfig {
    /// Maximum number of internal nodes.
    pub size_limit: usize,
    /// Tolerated training misclassifications.
    pub k: u64,
    pub training_size: usize,
    pub candidate_splits: Vec<CandidateSplit>,
    pub seed: u64,
    pub queue_discipline: QueueDiscipline,
}

impl ExtractionConfig {
    pub fn new(size_limit: usize, k: u64, training_size: usize, candidate_splits: Vec<CandidateSplit>, seed: u64) -> Self {
        ExtractionConfig {
            size_limit,
            k,
            training_size,
            candidate_splits,
            seed,
            queue_discipline: QueueDiscipline::Fifo,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size_limit < 1 {
            return Err(Error::config("size_limit must be at least 1"));
        }
        if self.training_size < 1 {
            return Err(Error::config("training_size must be at least 1"));
        }
        if self.candidate_splits.is_empty() {
            return Err(Error::config("the candidate split set is empty"));
        }
        Ok(())
    }

    /// A child is queued when `misclassified · (size_limit + 1) > k`.
    fn exceeds_cutoff(&self, misclassified: usize) -> bool {
        misclassified as u128 * (self.size_limit as u128 + 1) > u128::from(self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    QueueEmpty,
    SizeLimit,
    ErrorBudgetMet,
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminationReason::QueueEmpty => "queue_empty",
            TerminationReason::SizeLimit => "size_limit",
            TerminationReason::ErrorBudgetMet => "error_budget_met",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionReport {
    pub tree: DecisionTree,
    pub training_size: usize,
    pub training_error: f64,
    pub training_misclassified: usize,
    pub termination_reason: TerminationReason,
    pub oracle_calls: u64,
    pub querying_secs: f64,
    pub extraction_secs: f64,
    /// Popped nodes that no sample reached.
    pub empty_nodes: usize,
    /// Popped nodes whose samples all matched the node's class.
    pub pure_nodes: usize,
    /// Splits chosen among several candidates of equal entropy.
    pub tied_splits: usize,
    /// Every leaf misclassifies at most `k / (size_limit + 1)` samples.
    pub leaves_within_cutoff: bool,
    /// The queue was empty when the loop stopped, whatever the reported
    /// reason. Such runs misclassify at most `k` training samples.
    pub queue_exhausted: bool,
    pub queue_discipline: QueueDiscipline,
    pub distribution: String,
}

/// Result of running the extraction loop on a fixed training set.
#[derive(Debug, Clone, PartialEq)]
pub struct GrownTree {
    pub tree: DecisionTree,
    pub training_misclassified: usize,
    pub termination_reason: TerminationReason,
    pub empty_nodes: usize,
    pub pure_nodes: usize,
    pub tied_splits: usize,
    pub leaves_within_cutoff: bool,
    pub queue_exhausted: bool,
    pub splits: Vec<(NodePath, SplitChoice)>,
}

fn misclassified(labels: &[u8], indices: &[usize], class: u8) -> usize {
    indices.iter().filter(|&&i| labels[i] != class).count()
}

/// The extraction loop on an already labelled training set.
pub fn grow_tree(samples: &TrainingSet, config: &ExtractionConfig) -> Result<GrownTree> {
    config.validate()?;
    let splits = &config.candidate_splits;
    let labels: Vec<u8> = samples.items.iter().map(|s| s.label).collect();
    // satisfied[i][s]: sample i satisfies candidate s.
    let satisfied: Vec<Vec<bool>> = samples
        .items
        .iter()
        .map(|s| splits.iter().map(|c| c.test(&s.example)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let mut tree = DecisionTree::root_only();
    let mut queue = VecDeque::from([NodePath::root()]);
    let mut reaching: HashMap<NodePath, Vec<usize>> = HashMap::new();
    reaching.insert(NodePath::root(), (0..labels.len()).collect());

    let mut total_mis = misclassified(&labels, &reaching[&NodePath::root()], 0);
    let mut out = GrownTree {
        tree: DecisionTree::root_only(),
        training_misclassified: 0,
        termination_reason: TerminationReason::QueueEmpty,
        empty_nodes: 0,
        pure_nodes: 0,
        tied_splits: 0,
        leaves_within_cutoff: true,
        queue_exhausted: false,
        splits: Vec::new(),
    };

    while !queue.is_empty() && tree.size_of() < config.size_limit && total_mis as u64 > config.k {
        let node = queue.pop_front().expect("non-empty queue");
        let indices = reaching.get(&node).cloned().unwrap_or_default();
        if indices.is_empty() {
            out.empty_nodes += 1;
            continue;
        }
        let class = node.class().unwrap_or(0);
        let node_mis = misclassified(&labels, &indices, class);
        if node_mis == 0 {
            out.pure_nodes += 1;
            continue;
        }

        let counts = (0..splits.len()).map(|s| {
            let mut c = SplitCounts::default();
            for &i in &indices {
                match (satisfied[i][s], labels[i] == 1) {
                    (true, true) => c.sat_pos += 1,
                    (true, false) => c.sat_neg += 1,
                    (false, true) => c.unsat_pos += 1,
                    (false, false) => c.unsat_neg += 1,
                }
            }
            c
        });
        let choice = choose(splits, counts).expect("candidates are non-empty");
        if choice.tied > 1 {
            out.tied_splits += 1;
        }

        tree.split_leaf_in_place(&node, choice.constraint());
        let (to_one, to_zero): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| satisfied[i][choice.index] != choice.negated);

        total_mis -= node_mis;
        for (bit, child_indices) in [(false, to_zero), (true, to_one)] {
            let child = node.child(bit);
            let child_mis = misclassified(&labels, &child_indices, u8::from(bit));
            total_mis += child_mis;
            if config.exceeds_cutoff(child_mis) {
                queue.push_back(child.clone());
            }
            reaching.insert(child, child_indices);
        }
        reaching.remove(&node);
        out.splits.push((node, choice));
    }

    out.termination_reason = if total_mis as u64 <= config.k {
        TerminationReason::ErrorBudgetMet
    } else if tree.size_of() >= config.size_limit {
        TerminationReason::SizeLimit
    } else {
        TerminationReason::QueueEmpty
    };
    out.leaves_within_cutoff = tree.leaves().all(|leaf| {
        let indices = reaching.get(leaf).map(Vec::as_slice).unwrap_or_default();
        !config.exceeds_cutoff(misclassified(&labels, indices, leaf.class().unwrap_or(0)))
    });
    out.queue_exhausted = queue.is_empty();
    out.training_misclassified = total_mis;
    out.tree = tree;
    Ok(out)
}

/// Extracts a decision tree from `oracle`.
///
/// Draws `training_size` examples from `dist` once (seeded by
/// `config.seed`), labels them through the oracle, then grows the tree
/// breadth-first until the queue empties, the size limit is reached, or at
/// most `k` training samples are misclassified.
pub fn trepac(
    oracle: &MembershipOracle,
    config: &ExtractionConfig,
    dist: &Distribution,
) -> Result<ExtractionReport> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let calls_before = oracle.call_count();
    let started = Instant::now();
    let mut samples = build_training_set(oracle, dist, config.training_size, &mut rng)?;
    samples.source_seed = Some(config.seed);
    let querying_secs = started.elapsed().as_secs_f64();
    let oracle_calls = oracle.call_count() - calls_before;

    let mut report = extract_from_training_set(&samples, config)?;
    report.querying_secs = querying_secs;
    report.oracle_calls = oracle_calls;
    report.distribution = dist.describe();
    Ok(report)
}

/// Runs the extraction loop on a pre-built training set.
pub fn extract_from_training_set(samples: &TrainingSet, config: &ExtractionConfig) -> Result<ExtractionReport> {
    let started = Instant::now();
    let grown = grow_tree(samples, config)?;
    let extraction_secs = started.elapsed().as_secs_f64();
    Ok(ExtractionReport {
        training_size: samples.len(),
        training_error: grown.training_misclassified as f64 / samples.len() as f64,
        training_misclassified: grown.training_misclassified,
        termination_reason: grown.termination_reason,
        oracle_calls: 0,
        querying_secs: 0.0,
        extraction_secs,
        empty_nodes: grown.empty_nodes,
        pure_nodes: grown.pure_nodes,
        tied_splits: grown.tied_splits,
        leaves_within_cutoff: grown.leaves_within_cutoff,
        queue_exhausted: grown.queue_exhausted,
        queue_discipline: config.queue_discipline,
        distribution: String::new(),
        tree: grown.tree,
    })
}
