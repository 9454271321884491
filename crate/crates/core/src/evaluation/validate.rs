//! Monte-Carlo check of the sample-size guarantee.
//!
//! Each trial draws a random target tree, extracts a tree from it with the
//! bound-derived training size, and measures the exact true error. The
//! guarantee holds empirically when the share of trials with true error above
//! `ε` stays within `δ` plus a three-sigma binomial allowance.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{sample_size, HypothesisCount, Rounding};
use crate::error::{Error, Result};
use crate::evaluation::disagreements;
use crate::extraction::{trepac, ExtractionConfig};
use crate::feature::{satisfies_all, CandidateSplit, Constraint, TabularExample};
use crate::oracle::{Distribution, MembershipOracle};
use crate::tree::DecisionTree;

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationConfig {
    /// Internal nodes of each target tree; also the extraction size limit and
    /// the tree size behind the hypothesis count `n^|F|`.
    pub n: usize,
    pub num_features: u32,
    pub epsilon: f64,
    pub delta: f64,
    pub k: u64,
    pub trials: usize,
    pub seed: u64,
    pub rounding: Rounding,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl ValidationConfig {
    pub fn new(n: usize, num_features: u32, epsilon: f64, delta: f64, k: u64, trials: usize, seed: u64) -> Self {
        ValidationConfig {
            n,
            num_features,
            epsilon,
            delta,
            k,
            trials,
            seed,
            rounding: Rounding::Ceil,
            workers: None,
        }
    }

    pub fn training_size(&self) -> Result<u64> {
        sample_size(
            self.epsilon,
            self.delta,
            self.k,
            &HypothesisCount::trees(self.n as u64, self.num_features),
            self.rounding,
        )
    }

    /// `δ + 3·sqrt(δ(1−δ)/trials)`.
    pub fn pass_threshold(&self) -> f64 {
        self.delta + 3.0 * (self.delta * (1.0 - self.delta) / self.trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub target_size: usize,
    pub extracted_size: usize,
    pub true_error: f64,
    pub true_misclassified: usize,
    pub training_misclassified: usize,
    pub termination_reason: String,
    pub leaves_within_cutoff: bool,
    pub queue_exhausted: bool,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub config: ValidationConfig,
    pub training_size: u64,
    pub failures: usize,
    pub failure_fraction: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Runs whose queue emptied but that misclassified more than `k`
    /// training samples. Always zero for a correct extractor.
    pub budget_violations: usize,
    pub trials: Vec<TrialOutcome>,
}

impl ValidationReport {
    pub const TRIAL_CSV_HEADER: &'static str = "trial,target_size,extracted_size,true_error,true_misclassified,training_misclassified,termination_reason,failed";

    pub fn summary_csv(&self) -> String {
        format!(
            "n,k,epsilon,delta,m,trials,failures,failure_fraction,threshold,result\n{},{},{},{},{},{},{},{},{},{}\n",
            self.config.n,
            self.config.k,
            self.config.epsilon,
            self.config.delta,
            self.training_size,
            self.config.trials,
            self.failures,
            self.failure_fraction,
            self.threshold,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }

    pub fn trials_csv(&self) -> String {
        let mut out = format!("{}\n", Self::TRIAL_CSV_HEADER);
        for t in &self.trials {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                t.trial,
                t.target_size,
                t.extracted_size,
                t.true_error,
                t.true_misclassified,
                t.training_misclassified,
                t.termination_reason,
                t.failed
            ));
        }
        out
    }
}

/// Grows a random tree with `n` internal nodes: repeatedly splits a uniformly
/// chosen leaf with a uniformly chosen candidate, rejecting splits that leave
/// either child without examples from `examples`.
pub fn random_target_tree<R: Rng + ?Sized>(
    splits: &[CandidateSplit],
    examples: &[TabularExample],
    n: usize,
    rng: &mut R,
) -> Result<DecisionTree> {
    if splits.is_empty() {
        return Err(Error::config("the candidate split set is empty"));
    }
    let mut tree = DecisionTree::root_only();
    while tree.size_of() < n {
        // Leaves that admit at least one non-vacuous split.
        let mut options = Vec::new();
        for leaf in tree.leaves() {
            let path = tree.constraints_to_reach(leaf)?;
            let region: Vec<&TabularExample> = examples
                .iter()
                .filter(|e| satisfies_all(e, &path).unwrap_or(false))
                .collect();
            let mut usable = Vec::new();
            for split in splits {
                let sat = region.iter().filter(|e| split.test(e).unwrap_or(false)).count();
                if sat > 0 && sat < region.len() {
                    usable.push(split);
                }
            }
            if !usable.is_empty() {
                options.push((leaf.clone(), usable));
            }
        }
        let (leaf, usable) = options
            .choose(rng)
            .ok_or_else(|| Error::domain(format!("cannot grow a target with {n} non-vacuous splits")))?;
        let split = (*usable.choose(rng).expect("non-empty")).clone();
        tree = tree.split_leaf(leaf, Constraint::split(split))?;
    }
    Ok(tree)
}

/// Runs `config.trials` independent trials. `make_target` receives the
/// trial's own RNG stream, so results do not depend on scheduling.
pub fn validate_pac<G>(
    dist: &Distribution,
    splits: &[CandidateSplit],
    config: &ValidationConfig,
    make_target: G,
) -> Result<ValidationReport>
where
    G: Fn(&mut ChaCha8Rng) -> Result<DecisionTree> + Sync,
{
    if config.trials == 0 {
        return Err(Error::config("at least one trial is required"));
    }
    if dist.is_empty() {
        return Err(Error::Unsupported("exact true error needs a non-empty finite space".into()));
    }
    let m = config.training_size()?;

    let run = |trial: usize| -> Result<TrialOutcome> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(trial as u64);
        let target = make_target(&mut rng)?;
        let target_size = target.size_of();
        let oracle = MembershipOracle::from_tree(target);
        let extraction = ExtractionConfig::new(
            config.n.max(1),
            config.k,
            m as usize,
            splits.to_vec(),
            rng.next_u64(),
        );
        let report = trepac(&oracle, &extraction, dist)?;
        let wrong = disagreements(&report.tree, &oracle, dist)?;
        let true_error: f64 = wrong.iter().map(|&i| dist.weight(i)).sum();
        Ok(TrialOutcome {
            trial,
            target_size,
            extracted_size: report.tree.size_of(),
            true_error,
            true_misclassified: wrong.len(),
            training_misclassified: report.training_misclassified,
            termination_reason: report.termination_reason.to_string(),
            leaves_within_cutoff: report.leaves_within_cutoff,
            queue_exhausted: report.queue_exhausted,
            failed: true_error > config.epsilon,
        })
    };

    let trials: Vec<TrialOutcome> = match config.workers {
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::config(e.to_string()))?
            .install(|| (0..config.trials).into_par_iter().map(run).collect::<Result<_>>())?,
        None => (0..config.trials).into_par_iter().map(run).collect::<Result<_>>()?,
    };

    let failures = trials.iter().filter(|t| t.failed).count();
    let failure_fraction = failures as f64 / config.trials as f64;
    let threshold = config.pass_threshold();
    let budget_violations = trials
        .iter()
        .filter(|t| t.queue_exhausted && t.training_misclassified as u64 > config.k)
        .count();
    Ok(ValidationReport {
        config: config.clone(),
        training_size: m,
        failures,
        failure_fraction,
        threshold,
        pass: failure_fraction <= threshold,
        budget_violations,
        trials,
    })
}
