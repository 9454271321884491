use std::collections::BTreeMap;

use crate::case_study::{CLASS_NAMES, OCCUPATION_OFFSET};
use crate::feature::{Comparator, FeatureSpace, Value};
use crate::tree::{extract_rules, DecisionTree, Literal, RuleOptions};

pub const RULES_CSV_HEADER: &str = "rule,occupation,class,count,frequency";

/// How often `occupation → class` appears among single-occupation rules.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleFrequency {
    pub occupation: String,
    pub class: u8,
    pub count: usize,
    pub frequency: f64,
}

impl RuleFrequency {
    /// `nurse → female` style label, spaces in names replaced by `_`.
    pub fn rule(&self) -> String {
        format!("{} -> {}", self.occupation.replace(' ', "_"), CLASS_NAMES[self.class as usize])
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.rule(),
            self.occupation.replace(' ', "_"),
            CLASS_NAMES[self.class as usize],
            self.count,
            self.frequency
        )
    }
}

/// Counts leaf rules whose antecedent, after dropping negated one-hot
/// literals implied by a positive one, is a single `occupation = 1` literal.
/// Frequencies are normalized over all such rules; ties in count keep
/// occupation order, then class order.
pub fn rule_frequency(trees: &[&DecisionTree], space: &FeatureSpace) -> Vec<RuleFrequency> {
    let options = RuleOptions { simplify_one_hot: true };
    let mut counts: BTreeMap<(usize, u8), usize> = BTreeMap::new();
    for tree in trees {
        for rule in extract_rules(tree, Some(space), options) {
            if let [Literal::Split { split, positive: true }] = rule.antecedent.as_slice() {
                if split.feature >= OCCUPATION_OFFSET
                    && split.op == Comparator::Eq
                    && split.value == Value::Int(1)
                {
                    *counts.entry((split.feature, rule.consequent)).or_default() += 1;
                }
            }
        }
    }
    let total: usize = counts.values().sum();
    let mut out: Vec<RuleFrequency> = counts
        .into_iter()
        .map(|((feature, class), count)| RuleFrequency {
            occupation: space.feature_name(feature).to_owned(),
            class,
            count,
            frequency: count as f64 / total as f64,
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count));
    out
}
