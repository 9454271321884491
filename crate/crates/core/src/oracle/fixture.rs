//! Recorded label tables.
//!
//! File format: one example per line as comma-separated feature values
//! followed by the label, e.g. `0,0,0,0,1,0,1,...,1,0,1`. Blank lines and
//! lines starting with `#` are ignored; a `# model: <id>` line names the
//! model the labels were recorded from.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::feature::{FeatureSpace, TabularExample, Value};

#[derive(Debug, Clone, Default)]
pub struct FixtureTable {
    pub model_id: String,
    labels: HashMap<TabularExample, u8>,
    order: Vec<TabularExample>,
}

/// Splits a row into an example (checked against `space`) and its last field.
pub(crate) fn parse_row<'a>(line: &'a str, space: &FeatureSpace) -> Result<(TabularExample, &'a str)> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != space.len() + 1 {
        return Err(Error::config(format!(
            "expected {} fields, found {}",
            space.len() + 1,
            fields.len()
        )));
    }
    let (last, values) = fields.split_last().expect("non-empty");
    let values = values.iter().map(|f| parse_value(f)).collect();
    let example = TabularExample::new(values);
    space.check_example(&example)?;
    Ok((example, last))
}

fn parse_value(field: &str) -> Value {
    if let Ok(v) = field.parse::<i64>() {
        Value::Int(v)
    } else if let Ok(v) = field.parse::<f64>() {
        Value::Real(v)
    } else {
        Value::Text(field.to_owned())
    }
}

impl FixtureTable {
    pub fn new(model_id: impl Into<String>) -> Self {
        FixtureTable {
            model_id: model_id.into(),
            ..Default::default()
        }
    }

    pub fn insert(&mut self, example: TabularExample, label: u8) -> Result<()> {
        if label > 1 {
            return Err(Error::domain(format!("label must be 0 or 1, got {label}")));
        }
        match self.labels.get(&example) {
            Some(&old) if old != label => Err(Error::config(format!(
                "conflicting labels for example {example}"
            ))),
            Some(_) => Ok(()),
            None => {
                self.order.push(example.clone());
                self.labels.insert(example, label);
                Ok(())
            }
        }
    }

    pub fn get(&self, example: &TabularExample) -> Option<u8> {
        self.labels.get(example).copied()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Rows in insertion order.
    pub fn rows(&self) -> impl Iterator<Item = (&TabularExample, u8)> + '_ {
        self.order.iter().map(move |e| (e, self.labels[e]))
    }

    pub fn parse(text: &str, space: &FeatureSpace, default_model: &str) -> Result<Self> {
        let mut table = FixtureTable::new(default_model);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(model) = comment.trim().strip_prefix("model:") {
                    table.model_id = model.trim().to_owned();
                }
                continue;
            }
            let at = |e: Error| Error::config(format!("fixture line {}: {e}", lineno + 1));
            let (example, label) = parse_row(line, space).map_err(at)?;
            let label = match label {
                "0" => 0,
                "1" => 1,
                other => return Err(at(Error::domain(format!("label {other:?} is not 0 or 1")))),
            };
            table.insert(example, label).map_err(at)?;
        }
        Ok(table)
    }

    pub fn read(path: impl AsRef<Path>, space: &FeatureSpace) -> Result<Self> {
        let path = path.as_ref();
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse(&std::fs::read_to_string(path)?, space, &stem)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# model: {}", self.model_id);
        for (example, label) in self.rows() {
            let _ = writeln!(out, "{},{label}", example.to_csv_fields());
        }
        out
    }
}
