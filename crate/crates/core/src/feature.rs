//! Feature spaces, tabular examples, candidate splits and constraints.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single feature value.
///
/// Integers and reals are both numeric and compare with each other; text
/// values only support equality.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(v) => Some(*v as f64),
            Value::Real(v) => Some(*v),
            Value::Text(_) => None,
        }
    }

    fn numeric_cmp(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            _ => Some(self.as_f64()?.total_cmp(&other.as_f64()?)),
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Text(a), Value::Text(b)) => a == b,
            (Value::Text(_), _) | (_, Value::Text(_)) => false,
            _ => self.numeric_cmp(other) == Some(Ordering::Equal),
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Value::Text(s) => {
                1u8.hash(state);
                s.hash(state);
            }
            // Int(1) == Real(1.0), so both hash through the float image.
            _ => {
                0u8.hash(state);
                let v = self.as_f64().unwrap_or_default();
                let v = if v == 0.0 { 0.0 } else { v };
                v.to_bits().hash(state);
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Real(v) => write!(f, "{v}"),
            Value::Text(s) => write!(f, "{s}"),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_owned())
    }
}

/// The set of values a feature may take.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// A finite value set. Order comparisons are allowed only when every
    /// value is numeric.
    Finite { values: Vec<Value> },
    /// A numeric interval. Bounds may be omitted (unbounded); splits are
    /// generated only from the supplied thresholds.
    Range {
        #[serde(default)]
        min: Option<f64>,
        #[serde(default)]
        max: Option<f64>,
        #[serde(default)]
        thresholds: Vec<f64>,
    },
}

impl Domain {
    pub fn binary() -> Self {
        Domain::Finite {
            values: vec![Value::Int(0), Value::Int(1)],
        }
    }

    pub fn is_ordered(&self) -> bool {
        match self {
            Domain::Finite { values } => values.iter().all(|v| v.as_f64().is_some()),
            Domain::Range { .. } => true,
        }
    }

    pub fn contains(&self, value: &Value) -> bool {
        match self {
            Domain::Finite { values } => values.contains(value),
            Domain::Range { min, max, .. } => match value.as_f64() {
                Some(v) => min.map_or(true, |lo| v >= lo) && max.map_or(true, |hi| v <= hi),
                None => false,
            },
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Domain::Finite { values } => values.is_empty(),
            Domain::Range { min, max, .. } => matches!((min, max), (Some(lo), Some(hi)) if lo > hi),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub domain: Domain,
}

impl Feature {
    pub fn new(name: impl Into<String>, domain: Domain) -> Self {
        Feature {
            name: name.into(),
            domain,
        }
    }
}

/// An ordered list of named features.
///
/// `one_hot_groups` optionally lists blocks of binary features of which
/// exactly one is set in every valid example; enumeration honours them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpace {
    #[serde(default)]
    pub id: String,
    pub features: Vec<Feature>,
    #[serde(default)]
    pub one_hot_groups: Vec<Vec<usize>>,
}

impl FeatureSpace {
    pub fn new(id: impl Into<String>, features: Vec<Feature>) -> Result<Self> {
        Self::with_groups(id, features, Vec::new())
    }

    pub fn with_groups(
        id: impl Into<String>,
        features: Vec<Feature>,
        one_hot_groups: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let space = FeatureSpace {
            id: id.into(),
            features,
            one_hot_groups,
        };
        space.validate()?;
        Ok(space)
    }

    /// `count` binary features named `f0`, `f1`, ...
    pub fn binary(id: impl Into<String>, count: usize) -> Self {
        let features = (0..count)
            .map(|i| Feature::new(format!("f{i}"), Domain::binary()))
            .collect();
        FeatureSpace {
            id: id.into(),
            features,
            one_hot_groups: Vec::new(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let space: FeatureSpace =
            toml::from_str(text).map_err(|e| Error::config(format!("feature space: {e}")))?;
        space.validate()?;
        Ok(space)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        for feature in &self.features {
            if !names.insert(feature.name.as_str()) {
                return Err(Error::config(format!("duplicate feature name {:?}", feature.name)));
            }
            if feature.domain.is_empty() {
                return Err(Error::config(format!("feature {:?} has an empty domain", feature.name)));
            }
        }
        let mut seen = HashSet::new();
        for group in &self.one_hot_groups {
            for &idx in group {
                let feature = self.features.get(idx).ok_or_else(|| {
                    Error::config(format!("one-hot group refers to missing feature {idx}"))
                })?;
                if feature.domain != Domain::binary() {
                    return Err(Error::config(format!(
                        "one-hot feature {:?} must have domain {{0, 1}}",
                        feature.name
                    )));
                }
                if !seen.insert(idx) {
                    return Err(Error::config(format!("feature {idx} appears in two one-hot groups")));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn feature_name(&self, index: usize) -> &str {
        self.features.get(index).map_or("?", |f| f.name.as_str())
    }

    /// One-hot group containing `index`, if any.
    pub fn group_of(&self, index: usize) -> Option<&[usize]> {
        self.one_hot_groups
            .iter()
            .find(|g| g.contains(&index))
            .map(Vec::as_slice)
    }

    /// Checks arity, per-position domain membership and one-hot groups.
    pub fn check_example(&self, example: &TabularExample) -> Result<()> {
        if example.len() != self.len() {
            return Err(Error::domain(format!(
                "example has {} values, feature space has {}",
                example.len(),
                self.len()
            )));
        }
        for (i, (value, feature)) in example.values().iter().zip(&self.features).enumerate() {
            if !feature.domain.contains(value) {
                return Err(Error::domain(format!(
                    "value {value} at position {i} is outside the domain of {:?}",
                    feature.name
                )));
            }
        }
        for group in &self.one_hot_groups {
            let ones = group
                .iter()
                .filter(|&&i| example.values()[i] == Value::Int(1))
                .count();
            if ones != 1 {
                return Err(Error::domain(format!(
                    "one-hot group {group:?} has {ones} set positions"
                )));
            }
        }
        Ok(())
    }

    /// All valid examples, in lexicographic order of domain positions.
    pub fn enumerate(&self) -> Result<Vec<TabularExample>> {
        let domains = self
            .features
            .iter()
            .map(|f| match &f.domain {
                Domain::Finite { values } => Ok(values.as_slice()),
                Domain::Range { .. } => Err(Error::Unsupported(format!(
                    "feature {:?} has a numeric range domain and cannot be enumerated",
                    f.name
                ))),
            })
            .collect::<Result<Vec<_>>>()?;

        let mut group_of = vec![None; self.len()];
        let mut group_last = vec![0usize; self.one_hot_groups.len()];
        for (g, group) in self.one_hot_groups.iter().enumerate() {
            for &i in group {
                group_of[i] = Some(g);
            }
            group_last[g] = group.iter().copied().max().unwrap_or(0);
        }

        let mut out = Vec::new();
        let mut current = Vec::with_capacity(self.len());
        let mut ones = vec![0usize; self.one_hot_groups.len()];
        enumerate_rec(&domains, &group_of, &group_last, &mut ones, &mut current, &mut out);
        Ok(out)
    }
}

fn enumerate_rec(
    domains: &[&[Value]],
    group_of: &[Option<usize>],
    group_last: &[usize],
    ones: &mut [usize],
    current: &mut Vec<Value>,
    out: &mut Vec<TabularExample>,
) {
    let pos = current.len();
    if pos == domains.len() {
        out.push(TabularExample::new(current.clone()));
        return;
    }
    for value in domains[pos] {
        let is_one = *value == Value::Int(1);
        if let Some(g) = group_of[pos] {
            if is_one && ones[g] == 1 {
                continue;
            }
            let after = ones[g] + usize::from(is_one);
            if pos == group_last[g] && after != 1 {
                continue;
            }
            ones[g] = after;
        }
        current.push(value.clone());
        enumerate_rec(domains, group_of, group_last, ones, current, out);
        current.pop();
        if let Some(g) = group_of[pos] {
            ones[g] -= usize::from(is_one);
        }
    }
}

/// A value tuple positionally aligned with a [`FeatureSpace`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TabularExample(Vec<Value>);

impl TabularExample {
    pub fn new(values: Vec<Value>) -> Self {
        TabularExample(values)
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        TabularExample(bits.iter().map(|&b| Value::Int(i64::from(b))).collect())
    }

    pub fn values(&self) -> &[Value] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Value> {
        self.0.get(index)
    }

    /// Comma-separated rendering used by fixture files and remote cache keys.
    pub fn to_csv_fields(&self) -> String {
        self.0
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for TabularExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.to_csv_fields())
    }
}

/// A labelled example.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClassifiedExample {
    pub example: TabularExample,
    pub label: u8,
}

impl ClassifiedExample {
    pub fn new(example: TabularExample, label: u8) -> Result<Self> {
        if label > 1 {
            return Err(Error::domain(format!("label must be 0 or 1, got {label}")));
        }
        Ok(ClassifiedExample { example, label })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
        }
    }

    fn holds(self, ord: Ordering) -> bool {
        match self {
            Comparator::Eq => ord == Ordering::Equal,
            Comparator::Lt => ord == Ordering::Less,
            Comparator::Le => ord != Ordering::Greater,
            Comparator::Ge => ord != Ordering::Less,
            Comparator::Gt => ord == Ordering::Greater,
        }
    }
}

/// An atomic test `feature ∘ value`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CandidateSplit {
    pub feature: usize,
    pub op: Comparator,
    pub value: Value,
}

impl CandidateSplit {
    pub fn eq(feature: usize, value: impl Into<Value>) -> Self {
        CandidateSplit {
            feature,
            op: Comparator::Eq,
            value: value.into(),
        }
    }

    pub fn new(feature: usize, op: Comparator, value: impl Into<Value>) -> Self {
        CandidateSplit {
            feature,
            op,
            value: value.into(),
        }
    }

    /// Checks the split against a feature space: feature exists, value lies in
    /// its domain, and order comparators only target ordered domains.
    pub fn check(&self, space: &FeatureSpace) -> Result<()> {
        let feature = space
            .features
            .get(self.feature)
            .ok_or_else(|| Error::domain(format!("split refers to missing feature {}", self.feature)))?;
        if self.op != Comparator::Eq && !feature.domain.is_ordered() {
            return Err(Error::domain(format!(
                "comparator {} needs an ordered domain, {:?} is unordered",
                self.op.symbol(),
                feature.name
            )));
        }
        if !feature.domain.contains(&self.value) {
            return Err(Error::domain(format!(
                "split value {} is outside the domain of {:?}",
                self.value, feature.name
            )));
        }
        Ok(())
    }

    pub fn test(&self, example: &TabularExample) -> Result<bool> {
        let value = example.get(self.feature).ok_or_else(|| {
            Error::domain(format!("example has no value at position {}", self.feature))
        })?;
        if self.op == Comparator::Eq {
            return Ok(*value == self.value);
        }
        match value.numeric_cmp(&self.value) {
            Some(ord) => Ok(self.op.holds(ord)),
            None => Err(Error::domain(format!(
                "comparator {} applied to non-numeric value {value}",
                self.op.symbol()
            ))),
        }
    }

    pub fn display(&self, space: Option<&FeatureSpace>) -> String {
        let name = match space {
            Some(s) => s.feature_name(self.feature).to_owned(),
            None => format!("f{}", self.feature),
        };
        format!("{name} {} {}", self.op.symbol(), self.value)
    }
}

impl fmt::Display for CandidateSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display(None))
    }
}

/// A boolean formula over candidate splits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    True,
    False,
    Split(CandidateSplit),
    Not(Box<Constraint>),
    And(Box<Constraint>, Box<Constraint>),
    Or(Box<Constraint>, Box<Constraint>),
}

impl Constraint {
    pub fn split(split: CandidateSplit) -> Self {
        Constraint::Split(split)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(c: Constraint) -> Self {
        Constraint::Not(Box::new(c))
    }

    pub fn and(a: Constraint, b: Constraint) -> Self {
        Constraint::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Constraint, b: Constraint) -> Self {
        Constraint::Or(Box::new(a), Box::new(b))
    }

    /// Right-nested conjunction of `parts`; `True` when empty.
    pub fn all(parts: impl IntoIterator<Item = Constraint>) -> Self {
        let mut parts: Vec<_> = parts.into_iter().collect();
        let Some(mut acc) = parts.pop() else {
            return Constraint::True;
        };
        while let Some(c) = parts.pop() {
            acc = Constraint::and(c, acc);
        }
        acc
    }

    pub fn splits(&self) -> Vec<&CandidateSplit> {
        let mut out = Vec::new();
        self.collect_splits(&mut out);
        out
    }

    fn collect_splits<'a>(&'a self, out: &mut Vec<&'a CandidateSplit>) {
        match self {
            Constraint::True | Constraint::False => {}
            Constraint::Split(s) => out.push(s),
            Constraint::Not(c) => c.collect_splits(out),
            Constraint::And(a, b) | Constraint::Or(a, b) => {
                a.collect_splits(out);
                b.collect_splits(out);
            }
        }
    }

    pub fn display(&self, space: Option<&FeatureSpace>) -> String {
        match self {
            Constraint::True => "true".into(),
            Constraint::False => "false".into(),
            Constraint::Split(s) => s.display(space),
            Constraint::Not(c) => format!("not ({})", c.display(space)),
            Constraint::And(a, b) => format!("({}) and ({})", a.display(space), b.display(space)),
            Constraint::Or(a, b) => format!("({}) or ({})", a.display(space), b.display(space)),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display(None))
    }
}

/// The satisfaction relation `example ⊨ constraint`.
pub fn satisfies(example: &TabularExample, constraint: &Constraint) -> Result<bool> {
    Ok(match constraint {
        Constraint::True => true,
        Constraint::False => false,
        Constraint::Split(s) => s.test(example)?,
        Constraint::Not(c) => !satisfies(example, c)?,
        Constraint::And(a, b) => satisfies(example, a)? && satisfies(example, b)?,
        Constraint::Or(a, b) => satisfies(example, a)? || satisfies(example, b)?,
    })
}

/// `example` satisfies every member of a constraint set (conjunction view).
pub fn satisfies_all(example: &TabularExample, constraints: &[Constraint]) -> Result<bool> {
    for c in constraints {
        if !satisfies(example, c)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Candidate splits Φ for a feature space, in (feature index, value) order.
///
/// Binary `{0, 1}` features yield the single split `f = 1`; other finite
/// domains yield one equality split per value; numeric ranges yield one
/// `f <= t` split per configured threshold.
pub fn enumerate_candidate_splits(space: &FeatureSpace) -> Result<Vec<CandidateSplit>> {
    let mut out = Vec::new();
    for (i, feature) in space.features.iter().enumerate() {
        match &feature.domain {
            Domain::Finite { values } if feature.domain == Domain::binary() => {
                debug_assert_eq!(values.len(), 2);
                out.push(CandidateSplit::eq(i, 1));
            }
            Domain::Finite { values } => {
                out.extend(values.iter().map(|v| CandidateSplit::eq(i, v.clone())));
            }
            Domain::Range { thresholds, .. } => {
                if thresholds.is_empty() {
                    return Err(Error::config(format!(
                        "numeric feature {:?} needs a threshold list",
                        feature.name
                    )));
                }
                out.extend(
                    thresholds
                        .iter()
                        .map(|&t| CandidateSplit::new(i, Comparator::Le, Value::Real(t))),
                );
            }
        }
    }
    Ok(out)
}
