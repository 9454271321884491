//! Membership-query oracles and i.i.d. training-set construction.

mod distribution;
mod fixture;
pub mod remote;

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use crate::error::{Error, Result};
use crate::feature::{ClassifiedExample, TabularExample};
use crate::tree::DecisionTree;

pub use distribution::{parse_rational, Distribution, FLOAT_TOLERANCE};
pub use fixture::FixtureTable;
pub use remote::{RemoteConfig, RemoteOracle};

#[derive(Debug)]
pub enum Backend {
    /// Labels come from classifying with a known tree.
    TargetTree(DecisionTree),
    /// Labels come from a recorded table.
    Fixture(FixtureTable),
    /// Labels come from a model server.
    Remote(RemoteOracle),
}

/// `MQ`: answers the target's label for any example of the space.
///
/// Every backend is deterministic per example, and all of them may be queried
/// from several threads; the remote backend funnels requests through its own
/// batching queue.
#[derive(Debug)]
pub struct MembershipOracle {
    backend: Backend,
    model_id: String,
    calls: AtomicU64,
}

impl MembershipOracle {
    pub fn new(backend: Backend, model_id: impl Into<String>) -> Self {
        MembershipOracle {
            backend,
            model_id: model_id.into(),
            calls: AtomicU64::new(0),
        }
    }

    pub fn from_tree(tree: DecisionTree) -> Self {
        Self::new(Backend::TargetTree(tree), "target-tree")
    }

    pub fn from_fixture(table: FixtureTable) -> Self {
        let id = table.model_id.clone();
        Self::new(Backend::Fixture(table), id)
    }

    pub fn from_remote(config: RemoteConfig) -> Result<Self> {
        let id = config.model.clone();
        Ok(Self::new(Backend::Remote(RemoteOracle::new(config)?), id))
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    /// Number of membership queries answered so far.
    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Preferred number of examples per [`query_batch`](Self::query_batch) call.
    pub fn batch_size(&self) -> usize {
        match &self.backend {
            Backend::Remote(r) => r.config().batch_size,
            _ => 1,
        }
    }

    pub fn query(&self, example: &TabularExample) -> Result<u8> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        match &self.backend {
            Backend::TargetTree(tree) => tree.classify(example),
            Backend::Fixture(table) => table
                .get(example)
                .ok_or_else(|| Error::MissingLabel(example.to_string())),
            Backend::Remote(remote) => Ok(remote.classify(std::slice::from_ref(example))?[0]),
        }
    }

    pub fn query_batch(&self, examples: &[TabularExample]) -> Result<Vec<u8>> {
        match &self.backend {
            Backend::Remote(remote) => {
                let labels = remote.classify(examples)?;
                self.calls.fetch_add(examples.len() as u64, Ordering::Relaxed);
                Ok(labels)
            }
            _ => examples.iter().map(|e| self.query(e)).collect(),
        }
    }
}

/// A multiset of classified examples; duplicates keep their multiplicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingSet {
    pub items: Vec<ClassifiedExample>,
    pub source_seed: Option<u64>,
}

impl TrainingSet {
    pub fn new(items: Vec<ClassifiedExample>, source_seed: Option<u64>) -> Self {
        TrainingSet { items, source_seed }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Labels every example of `examples` with `labeller`; handy for tests.
    pub fn labelled_by(
        examples: impl IntoIterator<Item = TabularExample>,
        labeller: impl Fn(&TabularExample) -> Result<u8>,
    ) -> Result<Self> {
        let items = examples
            .into_iter()
            .map(|e| {
                let label = labeller(&e)?;
                ClassifiedExample::new(e, label)
            })
            .collect::<Result<_>>()?;
        Ok(TrainingSet::new(items, None))
    }
}

/// Draws `m` examples i.i.d. from `dist` (with replacement) and labels them
/// through `oracle`.
pub fn build_training_set<R: Rng + ?Sized>(
    oracle: &MembershipOracle,
    dist: &Distribution,
    m: usize,
    rng: &mut R,
) -> Result<TrainingSet> {
    if m == 0 {
        return Err(Error::domain("training size must be at least 1"));
    }
    let drawn = (0..m)
        .map(|_| dist.draw(rng).cloned())
        .collect::<Result<Vec<_>>>()?;

    let mut items = Vec::with_capacity(m);
    for chunk in drawn.chunks(oracle.batch_size().max(1)) {
        let labels = oracle.query_batch(chunk).map_err(|e| Error::PartialTrainingSet {
            completed: items.len(),
            requested: m,
            source: Box::new(e),
        })?;
        for (example, label) in chunk.iter().zip(labels) {
            items.push(ClassifiedExample { example: example.clone(), label });
        }
    }
    Ok(TrainingSet::new(items, None))
}
