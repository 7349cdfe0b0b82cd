//! Versioned TOML model files.
//!
//! ```toml
//! version = "agb-model/1"
//! algorithm = "agb"
//! loss = "squared"
//! task = "regression"
//! nu = 0.1
//! init = 0.25
//!
//! [[trees]]
//! [[trees.nodes]]
//! kind = "split"
//! feature = 0
//! threshold = 2.5
//! left = 1
//! right = 2
//!
//! [[trees.nodes]]
//! kind = "leaf"
//! leaf = 0
//! weight = -5.0
//! mean_target = -5.0
//! ```
//!
//! Floats are written in the shortest form that parses back to the same
//! double. The momentum schedule is not stored; it is recomputed from the
//! number of trees on load.

use std::path::Path;

use agb_core::boosting::Algorithm;
use agb_core::data::Task;
use agb_core::losses::LossKind;
use agb_core::model::BoostedModel;
use agb_core::trees::{Node, Tree};
use serde::{Deserialize, Serialize};

use crate::write::atomic_write;
use crate::{Error, Result};

/// Value of the `version` field.
pub const FORMAT_VERSION: &str = "agb-model/1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    version: String,
    algorithm: String,
    loss: String,
    task: String,
    nu: f64,
    init: f64,
    #[serde(default)]
    trees: Vec<TreeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDoc {
    nodes: Vec<NodeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum NodeDoc {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        leaf: usize,
        weight: f64,
        mean_target: f64,
    },
}

fn parse_task(s: &str) -> Result<Task> {
    match s {
        "regression" => Ok(Task::Regression),
        "classification" => Ok(Task::BinaryClassification),
        other => Err(Error::ModelFormat(format!("unknown task '{other}'"))),
    }
}

/// Renders a model as a model file.
///
/// Models trained with a custom momentum schedule are rejected because the
/// format always implies the standard one.
pub fn serialize(model: &BoostedModel) -> Result<String> {
    if model.has_custom_schedule() {
        return Err(Error::ModelFormat(
            "models trained with a custom momentum schedule cannot be saved".into(),
        ));
    }
    let trees = model
        .trees()
        .iter()
        .map(|tree| TreeDoc {
            nodes: tree
                .nodes()
                .iter()
                .map(|node| match *node {
                    Node::Internal {
                        feature,
                        threshold,
                        left,
                        right,
                    } => NodeDoc::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    },
                    Node::Leaf {
                        leaf_id,
                        weight,
                        mean_target,
                    } => NodeDoc::Leaf {
                        leaf: leaf_id,
                        weight,
                        mean_target,
                    },
                })
                .collect(),
        })
        .collect();
    let doc = ModelDoc {
        version: FORMAT_VERSION.into(),
        algorithm: model.algorithm().name().into(),
        loss: model.loss().name().into(),
        task: model.task().name().into(),
        nu: model.nu(),
        init: model.init(),
        trees,
    };
    toml::to_string(&doc).map_err(|e| Error::ModelFormat(e.to_string()))
}

/// Parses and validates a model file.
pub fn deserialize(text: &str) -> Result<BoostedModel> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::ModelFormat(e.message().to_owned()))?;
    // check the version before the rest so that future layouts get a clear message
    match table.get("version") {
        Some(toml::Value::String(v)) if v == FORMAT_VERSION => {}
        Some(toml::Value::String(v)) => {
            return Err(Error::Version {
                found: v.clone(),
                expected: FORMAT_VERSION,
            })
        }
        _ => return Err(Error::ModelFormat("missing string field 'version'".into())),
    }
    let doc: ModelDoc = table
        .try_into()
        .map_err(|e: toml::de::Error| Error::ModelFormat(e.message().to_owned()))?;
    let algorithm: Algorithm = doc.algorithm.parse()?;
    let loss: LossKind = doc.loss.parse()?;
    let task = parse_task(&doc.task)?;
    let trees = doc
        .trees
        .into_iter()
        .enumerate()
        .map(|(s, t)| {
            let nodes = t
                .nodes
                .into_iter()
                .map(|n| match n {
                    NodeDoc::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => Node::Internal {
                        feature,
                        threshold,
                        left,
                        right,
                    },
                    NodeDoc::Leaf {
                        leaf,
                        weight,
                        mean_target,
                    } => Node::Leaf {
                        leaf_id: leaf,
                        weight,
                        mean_target,
                    },
                })
                .collect();
            Tree::from_nodes(nodes).map_err(|e| Error::ModelFormat(format!("tree {s}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoostedModel::new(
        algorithm, loss, doc.nu, doc.init, task, trees,
    )?)
}

/// Writes `model` to `path` atomically.
pub fn save(model: &BoostedModel, path: impl AsRef<Path>) -> Result<()> {
    atomic_write(path.as_ref(), serialize(model)?.as_bytes())
}

/// Reads a model file.
pub fn load(path: impl AsRef<Path>) -> Result<BoostedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    deserialize(&text)
}
