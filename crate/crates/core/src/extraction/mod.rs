//! Tree extraction: the PAC-sized, membership-query driven extractor and the
//! exhaustive error-driven grower used as a reference.

mod entropy;
mod topdown;
mod trepac;

pub use entropy::{best_split, binary_entropy, SplitChoice, SplitCounts, TIE_TOLERANCE};
pub use topdown::topdown;
pub use trepac::{
    extract_from_training_set, grow_tree, trepac, ExtractionConfig, ExtractionReport, GrownTree,
    QueueDiscipline, TerminationReason,
};
