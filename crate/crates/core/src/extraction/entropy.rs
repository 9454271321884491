use crate::error::{Error, Result};
use crate::feature::{CandidateSplit, ClassifiedExample, Constraint};

/// Splits whose weighted entropies differ by less than this are tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Binary entropy `G(q) = −q·log₂q − (1−q)·log₂(1−q)`, with `0·log 0 = 0`.
pub fn binary_entropy(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!("entropy argument must lie in [0, 1], got {q}")));
    }
    Ok(entropy_unchecked(q))
}

fn entropy_unchecked(q: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(q) + term(1.0 - q)
}

/// Label counts on both sides of a split.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SplitCounts {
    pub sat_pos: usize,
    pub sat_neg: usize,
    pub unsat_pos: usize,
    pub unsat_neg: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.sat_pos + self.sat_neg + self.unsat_pos + self.unsat_neg
    }

    /// Size-weighted entropy of the two children.
    pub fn weighted_entropy(&self) -> f64 {
        let total = self.total() as f64;
        if total == 0.0 {
            return 0.0;
        }
        let side = |pos: usize, neg: usize| {
            let n = (pos + neg) as f64;
            if n == 0.0 {
                0.0
            } else {
                n / total * entropy_unchecked(pos as f64 / n)
            }
        };
        side(self.sat_pos, self.sat_neg) + side(self.unsat_pos, self.unsat_neg)
    }

    /// Whether the split should be attached negated. Leaf classes are fixed
    /// by path bit, so the side sent to child 1 should be the one whose
    /// labels are mostly positive; among the two orientations the one with
    /// fewer misclassified samples wins, ties keep the split as-is.
    pub fn negate(&self) -> bool {
        let as_is = self.sat_neg + self.unsat_pos;
        let negated = self.sat_pos + self.unsat_neg;
        negated < as_is
    }
}

/// The chosen split for a node.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitChoice {
    /// Position in the candidate list.
    pub index: usize,
    pub split: CandidateSplit,
    pub negated: bool,
    pub weighted_entropy: f64,
    pub counts: SplitCounts,
    /// Number of candidates tied with the winner (1 = unique).
    pub tied: usize,
}

impl SplitChoice {
    /// The constraint attached to the node.
    pub fn constraint(&self) -> Constraint {
        let c = Constraint::split(self.split.clone());
        if self.negated {
            Constraint::not(c)
        } else {
            c
        }
    }
}

/// Picks the lowest weighted entropy among `candidates` given per-candidate
/// counts. The first minimum in candidate order wins.
pub(crate) fn choose(
    candidates: &[CandidateSplit],
    counts: impl IntoIterator<Item = SplitCounts>,
) -> Option<SplitChoice> {
    let mut best: Option<SplitChoice> = None;
    for (index, counts) in counts.into_iter().enumerate() {
        let h = counts.weighted_entropy();
        match &mut best {
            Some(b) if h < b.weighted_entropy - TIE_TOLERANCE => {
                *b = SplitChoice {
                    index,
                    split: candidates[index].clone(),
                    negated: counts.negate(),
                    weighted_entropy: h,
                    counts,
                    tied: 1,
                };
            }
            Some(b) => {
                if (h - b.weighted_entropy).abs() <= TIE_TOLERANCE {
                    b.tied += 1;
                }
            }
            None => {
                best = Some(SplitChoice {
                    index,
                    split: candidates[index].clone(),
                    negated: counts.negate(),
                    weighted_entropy: h,
                    counts,
                    tied: 1,
                })
            }
        }
    }
    best
}

/// Best candidate split for the samples reaching a node.
///
/// Returns `Ok(None)` when there are no samples (the node stays a leaf).
pub fn best_split(
    samples: &[ClassifiedExample],
    candidates: &[CandidateSplit],
) -> Result<Option<SplitChoice>> {
    if candidates.is_empty() {
        return Err(Error::config("the candidate split set is empty"));
    }
    if samples.is_empty() {
        return Ok(None);
    }
    let counts = candidates
        .iter()
        .map(|split| {
            let mut c = SplitCounts::default();
            for s in samples {
                match (split.test(&s.example)?, s.label == 1) {
                    (true, true) => c.sat_pos += 1,
                    (true, false) => c.sat_neg += 1,
                    (false, true) => c.unsat_pos += 1,
                    (false, false) => c.unsat_neg += 1,
                }
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(choose(candidates, counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::TabularExample;

    fn sample(bits: &[u8], label: u8) -> ClassifiedExample {
        ClassifiedExample::new(TabularExample::from_bits(bits), label).unwrap()
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        // −0.25·log₂0.25 − 0.75·log₂0.75 = 0.5 + 0.311278...
        let expected = 0.811_278_124_459_132_9;
        assert!((binary_entropy(0.25).unwrap() - expected).abs() < 1e-12);
        assert!((binary_entropy(0.75).unwrap() - expected).abs() < 1e-12);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn perfect_separation() {
        let mut samples = Vec::new();
        for i in 0..8u8 {
            let mut bits = [0u8; 22];
            bits[14] = i % 2;
            bits[(i % 5) as usize] = 1;
            samples.push(sample(&bits, i % 2));
        }
        let candidates: Vec<_> = (0..22).map(|i| CandidateSplit::eq(i, 1)).collect();
        let choice = best_split(&samples, &candidates).unwrap().unwrap();
        assert_eq!(choice.split, CandidateSplit::eq(14, 1));
        assert!(!choice.negated);
        assert_eq!(choice.weighted_entropy, 0.0);
    }

    #[test]
    fn constant_labels_pick_first_candidate() {
        let samples = vec![sample(&[1, 0, 1], 1), sample(&[0, 1, 1], 1), sample(&[0, 0, 0], 1)];
        let candidates: Vec<_> = (0..3).map(|i| CandidateSplit::eq(i, 1)).collect();
        let choice = best_split(&samples, &candidates).unwrap().unwrap();
        assert_eq!(choice.index, 0);
        assert_eq!(choice.weighted_entropy, 0.0);
        assert_eq!(choice.tied, 3);
    }

    #[test]
    fn hand_computed_four_samples() {
        // f0=1 → {1, 1}; f0=0 → {0, 1}. f1 is constant 0.
        let samples = vec![
            sample(&[1, 0], 1),
            sample(&[1, 0], 1),
            sample(&[0, 0], 0),
            sample(&[0, 0], 1),
        ];
        let candidates = vec![CandidateSplit::eq(0, 1), CandidateSplit::eq(1, 1)];
        let choice = best_split(&samples, &candidates).unwrap().unwrap();
        assert_eq!(choice.index, 0);
        assert!(!choice.negated);
        assert!((choice.weighted_entropy - 0.5).abs() < 1e-15);
        // f1: all on the unsatisfied side, G(3/4).
        let f1 = SplitCounts { sat_pos: 0, sat_neg: 0, unsat_pos: 3, unsat_neg: 1 };
        assert!((f1.weighted_entropy() - 0.811_278_124_459_132_9).abs() < 1e-12);
    }

    #[test]
    fn orientation_flips_for_negative_satisfying_side() {
        let samples = vec![sample(&[1], 0), sample(&[1], 0), sample(&[0], 1)];
        let choice = best_split(&samples, &[CandidateSplit::eq(0, 1)]).unwrap().unwrap();
        assert!(choice.negated);
        assert_eq!(choice.constraint(), Constraint::not(Constraint::split(CandidateSplit::eq(0, 1))));
    }

    #[test]
    fn empty_inputs() {
        assert!(best_split(&[], &[CandidateSplit::eq(0, 1)]).unwrap().is_none());
        assert!(best_split(&[sample(&[1], 1)], &[]).is_err());
    }
}
