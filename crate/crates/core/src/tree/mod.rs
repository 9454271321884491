//! Decision trees as maps from binary node paths to constraint sets.
//!
//! A node is a finite bit string (the empty string is the root). Internal
//! nodes hold a non-empty constraint set read as a conjunction; examples
//! satisfying it continue to child `n1`, the others to `n0`. Leaves hold the
//! empty set and their class is the last bit of their path, so the root-only
//! tree classifies every example as 0.

mod document;
mod render;
mod rules;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::feature::{satisfies_all, Constraint, TabularExample};

pub use document::{TreeDocument, TreeMeta, DOCUMENT_VERSION};
pub use render::render_text;
pub use rules::{extract_rules, Literal, Rule, RuleOptions};

/// A path from the root: `0` follows the negative branch, `1` the positive.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePath(Vec<bool>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// Class of the node, the last bit. The root has none.
    pub fn class(&self) -> Option<u8> {
        self.0.last().map(|&b| u8::from(b))
    }

    pub fn parent(&self) -> Option<NodePath> {
        if self.is_root() {
            None
        } else {
            Some(NodePath(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn child(&self, bit: bool) -> NodePath {
        let mut bits = self.0.clone();
        bits.push(bit);
        NodePath(bits)
    }

    pub fn sibling(&self) -> Option<NodePath> {
        let last = *self.0.last()?;
        let mut bits = self.0.clone();
        *bits.last_mut().unwrap() = !last;
        Some(NodePath(bits))
    }

    pub fn is_prefix_of(&self, other: &NodePath) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for NodePath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse {
                    path: s.to_owned(),
                    message: format!("invalid path character {other:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(NodePath)
    }
}

impl Serialize for NodePath {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodePath {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A binary decision tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionTree {
    nodes: BTreeMap<NodePath, Vec<Constraint>>,
}

impl Default for DecisionTree {
    fn default() -> Self {
        Self::root_only()
    }
}

impl DecisionTree {
    /// `{(∅, ∅)}`.
    pub fn root_only() -> Self {
        let mut nodes = BTreeMap::new();
        nodes.insert(NodePath::root(), Vec::new());
        DecisionTree { nodes }
    }

    /// Builds a tree from an explicit node map, checking every structural
    /// invariant. The error names the first offending node.
    pub fn from_nodes(nodes: BTreeMap<NodePath, Vec<Constraint>>) -> Result<Self> {
        let tree = DecisionTree { nodes };
        tree.validate()?;
        Ok(tree)
    }

    fn validate(&self) -> Result<()> {
        let violation = |path: &NodePath, message: &str| Error::Parse {
            path: path.to_string(),
            message: message.to_owned(),
        };
        if !self.nodes.contains_key(&NodePath::root()) {
            return Err(violation(&NodePath::root(), "tree has no root"));
        }
        for path in self.nodes.keys() {
            if let Some(parent) = path.parent() {
                if !self.nodes.contains_key(&parent) {
                    return Err(violation(path, "parent node is missing"));
                }
                let sibling = path.sibling().expect("non-root path has a sibling");
                if !self.nodes.contains_key(&sibling) {
                    return Err(violation(&sibling, "child is missing while its sibling exists"));
                }
            }
        }
        for (path, constraints) in &self.nodes {
            let internal = self.nodes.contains_key(&path.child(false));
            if internal && constraints.is_empty() {
                return Err(violation(path, "internal node has an empty constraint set"));
            }
            if !internal && !constraints.is_empty() {
                return Err(violation(path, "leaf carries constraints"));
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &BTreeMap<NodePath, Vec<Constraint>> {
        &self.nodes
    }

    pub fn contains(&self, node: &NodePath) -> bool {
        self.nodes.contains_key(node)
    }

    pub fn constraint_at(&self, node: &NodePath) -> Option<&[Constraint]> {
        self.nodes.get(node).map(Vec::as_slice)
    }

    pub fn is_leaf(&self, node: &NodePath) -> bool {
        self.nodes.contains_key(node) && !self.nodes.contains_key(&node.child(false))
    }

    pub fn leaves(&self) -> impl Iterator<Item = &NodePath> + '_ {
        self.nodes.keys().filter(move |p| self.is_leaf(p))
    }

    pub fn internal_nodes(&self) -> impl Iterator<Item = &NodePath> + '_ {
        self.nodes.keys().filter(move |p| !self.is_leaf(p))
    }

    /// Number of internal nodes.
    pub fn size_of(&self) -> usize {
        (self.nodes.len() - 1) / 2
    }

    pub fn depth(&self) -> usize {
        self.nodes.keys().map(NodePath::depth).max().unwrap_or(0)
    }

    /// `constr*(node)`: the constraints an example must satisfy to reach
    /// `node`, innermost first. A step into child 0 contributes the negated
    /// conjunction of the parent's set, a step into child 1 the conjunction
    /// itself.
    pub fn constraints_to_reach(&self, node: &NodePath) -> Result<Vec<Constraint>> {
        if !self.contains(node) {
            return Err(Error::Lookup(format!("node \"{node}\" is not in the tree")));
        }
        let mut out = Vec::with_capacity(node.depth());
        let mut current = node.clone();
        while let Some(parent) = current.parent() {
            let here = Constraint::all(self.nodes[&parent].iter().cloned());
            let step = if current.class() == Some(1) {
                here
            } else {
                Constraint::not(here)
            };
            out.push(step);
            current = parent;
        }
        Ok(out)
    }

    /// The unique leaf an example reaches, found by descending from the root.
    pub fn reached_leaf(&self, example: &TabularExample) -> Result<NodePath> {
        let mut node = NodePath::root();
        loop {
            let constraints = &self.nodes[&node];
            if !self.nodes.contains_key(&node.child(false)) {
                return Ok(node);
            }
            let bit = satisfies_all(example, constraints)?;
            node = node.child(bit);
        }
    }

    /// 1 iff the example reaches a leaf whose path ends in 1.
    pub fn classify(&self, example: &TabularExample) -> Result<u8> {
        Ok(self.reached_leaf(example)?.class().unwrap_or(0))
    }

    /// Replaces leaf `leaf` by an internal node carrying `constraint`, with two
    /// fresh leaves underneath.
    pub fn split_leaf(&self, leaf: &NodePath, constraint: Constraint) -> Result<DecisionTree> {
        if !self.contains(leaf) {
            return Err(Error::Structure(format!("node \"{leaf}\" is not in the tree")));
        }
        if !self.is_leaf(leaf) {
            return Err(Error::Structure(format!("node \"{leaf}\" is internal")));
        }
        let mut nodes = self.nodes.clone();
        nodes.insert(leaf.clone(), vec![constraint]);
        nodes.insert(leaf.child(false), Vec::new());
        nodes.insert(leaf.child(true), Vec::new());
        Ok(DecisionTree { nodes })
    }

    pub(crate) fn split_leaf_in_place(&mut self, leaf: &NodePath, constraint: Constraint) {
        debug_assert!(self.is_leaf(leaf));
        self.nodes.insert(leaf.clone(), vec![constraint]);
        self.nodes.insert(leaf.child(false), Vec::new());
        self.nodes.insert(leaf.child(true), Vec::new());
    }
}
