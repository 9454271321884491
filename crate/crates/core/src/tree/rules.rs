use std::fmt;

use crate::feature::{CandidateSplit, Constraint, FeatureSpace, Value};
use crate::tree::{DecisionTree, NodePath};

/// One conjunct of a rule antecedent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    /// `split` when `positive`, otherwise its negation.
    Split { split: CandidateSplit, positive: bool },
    /// A node formula that does not flatten into split literals.
    Formula(Constraint),
}

impl Literal {
    pub fn display(&self, space: Option<&FeatureSpace>) -> String {
        match self {
            Literal::Split { split, positive: true } => split.display(space),
            Literal::Split { split, positive: false } => format!("not ({})", split.display(space)),
            Literal::Formula(c) => c.display(space),
        }
    }
}

/// `antecedent → consequent` for one leaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub leaf: NodePath,
    /// Literals in root-to-leaf order.
    pub antecedent: Vec<Literal>,
    pub consequent: u8,
}

impl Rule {
    pub fn display(&self, space: Option<&FeatureSpace>) -> String {
        let lhs = if self.antecedent.is_empty() {
            "true".to_owned()
        } else {
            self.antecedent
                .iter()
                .map(|l| l.display(space))
                .collect::<Vec<_>>()
                .join(" and ")
        };
        format!("{lhs} -> {}", self.consequent)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display(None))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RuleOptions {
    /// Drop `not (g = 1)` literals implied by a `h = 1` literal from the same
    /// one-hot group.
    pub simplify_one_hot: bool,
}

fn flatten(c: &Constraint, positive: bool, out: &mut Vec<Literal>) {
    match (c, positive) {
        (Constraint::True, true) | (Constraint::False, false) => {}
        (Constraint::Split(s), _) => out.push(Literal::Split {
            split: s.clone(),
            positive,
        }),
        (Constraint::Not(inner), _) => flatten(inner, !positive, out),
        (Constraint::And(a, b), true) | (Constraint::Or(a, b), false) => {
            flatten(a, positive, out);
            flatten(b, positive, out);
        }
        (other, true) => out.push(Literal::Formula(other.clone())),
        (other, false) => out.push(Literal::Formula(Constraint::not(other.clone()))),
    }
}

fn is_one(split: &CandidateSplit) -> bool {
    split.op == crate::feature::Comparator::Eq && split.value == Value::Int(1)
}

fn simplify(literals: Vec<Literal>, space: &FeatureSpace) -> Vec<Literal> {
    let set_groups: Vec<&[usize]> = literals
        .iter()
        .filter_map(|l| match l {
            Literal::Split { split, positive: true } if is_one(split) => space.group_of(split.feature),
            _ => None,
        })
        .collect();
    let mut out: Vec<Literal> = Vec::with_capacity(literals.len());
    for lit in literals {
        let implied = match &lit {
            Literal::Split { split, positive: false } if is_one(split) => {
                set_groups.iter().any(|g| g.contains(&split.feature))
            }
            _ => false,
        };
        if !implied && !out.contains(&lit) {
            out.push(lit);
        }
    }
    out
}

/// One rule per leaf, in leaf path order.
pub fn extract_rules(
    tree: &DecisionTree,
    space: Option<&FeatureSpace>,
    options: RuleOptions,
) -> Vec<Rule> {
    tree.leaves()
        .map(|leaf| {
            let mut star = tree
                .constraints_to_reach(leaf)
                .expect("leaf comes from the tree");
            star.reverse();
            let mut antecedent = Vec::new();
            for c in &star {
                flatten(c, true, &mut antecedent);
            }
            if options.simplify_one_hot {
                if let Some(space) = space {
                    antecedent = simplify(antecedent, space);
                }
            }
            Rule {
                leaf: leaf.clone(),
                antecedent,
                consequent: leaf.class().unwrap_or(0),
            }
        })
        .collect()
}
