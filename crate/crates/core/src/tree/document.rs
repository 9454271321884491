use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature::Constraint;
use crate::tree::{DecisionTree, NodePath};

pub const DOCUMENT_VERSION: u32 = 1;

/// Provenance stored next to a serialized tree.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TreeMeta {
    #[serde(default)]
    pub feature_space_id: String,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub k: Option<u64>,
    #[serde(default)]
    pub m: Option<u64>,
    #[serde(default)]
    pub n: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub model_id: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeEntry {
    path: NodePath,
    constraint: Vec<Constraint>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawDocument {
    version: u32,
    meta: TreeMeta,
    nodes: Vec<NodeEntry>,
}

/// A tree plus its metadata, as stored on disk (JSON).
#[derive(Debug, Clone, PartialEq)]
pub struct TreeDocument {
    pub meta: TreeMeta,
    pub tree: DecisionTree,
}

impl TreeDocument {
    pub fn new(tree: DecisionTree, meta: TreeMeta) -> Self {
        TreeDocument { meta, tree }
    }

    pub fn to_json_string(&self) -> Result<String> {
        let raw = RawDocument {
            version: DOCUMENT_VERSION,
            meta: self.meta.clone(),
            nodes: self
                .tree
                .nodes()
                .iter()
                .map(|(path, constraint)| NodeEntry {
                    path: path.clone(),
                    constraint: constraint.clone(),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&raw)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: String::new(),
            message: e.to_string(),
        })?;
        if raw.version != DOCUMENT_VERSION {
            return Err(Error::Parse {
                path: String::new(),
                message: format!("unsupported document version {}", raw.version),
            });
        }
        let mut nodes = BTreeMap::new();
        for entry in raw.nodes {
            let path = entry.path.to_string();
            if nodes.insert(entry.path, entry.constraint).is_some() {
                return Err(Error::Parse {
                    path,
                    message: "duplicate node entry".into(),
                });
            }
        }
        Ok(TreeDocument {
            meta: raw.meta,
            tree: DecisionTree::from_nodes(nodes)?,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }
}
