//! Versioned JSON documents: `model.json`, `probs.json`, `tree.json`,
//! `directives.json` and `partition.json`.
//!
//! Ordered collections are JSON arrays and their order is meaningful: it
//! fixes the node order of generated trees.

use std::collections::BTreeSet;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{ComponentDef, StateLabel, SystemModel};
use crate::partition::{parse_index_ranges, PartitionQuery};
use crate::probability::{ProbabilityTable, DEFAULT_TOLERANCE};
use crate::reduction::ReductionDirective;
use crate::tree::{Edge, EventTree, Node, NodeId, NodeKind};

pub const MODEL_FORMAT: &str = "etma-model/1";
pub const PROBS_FORMAT: &str = "etma-probs/1";
pub const TREE_FORMAT: &str = "etma-tree/1";
pub const DIRECTIVES_FORMAT: &str = "etma-directives/1";
pub const PARTITION_FORMAT: &str = "etma-partition/1";

fn parse<T: DeserializeOwned>(what: &'static str, text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
        what,
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

fn check_format(expected: &'static str, found: &str) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::Format {
            expected,
            found: found.to_owned(),
        })
    }
}

fn to_pretty<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents always serialize");
    s.push('\n');
    s
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format: String,
    name: String,
    components: Vec<ComponentDef>,
}

pub fn model_from_json(text: &str) -> Result<SystemModel> {
    let doc: ModelDoc = parse("model", text)?;
    check_format(MODEL_FORMAT, &doc.format)?;
    Ok(SystemModel::new(doc.name, doc.components))
}

pub fn model_to_json(model: &SystemModel) -> String {
    to_pretty(&ModelDoc {
        format: MODEL_FORMAT.to_owned(),
        name: model.name.clone(),
        components: model.components.clone(),
    })
}

/// SHA-256 over the compact canonical model document, hex encoded.
pub fn model_hash(model: &SystemModel) -> String {
    let doc = ModelDoc {
        format: MODEL_FORMAT.to_owned(),
        name: model.name.clone(),
        components: model.components.clone(),
    };
    let bytes = serde_json::to_vec(&doc).expect("documents always serialize");
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize, Deserialize)]
struct ProbEntry {
    component: String,
    state: String,
    p: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbsDoc {
    format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    entries: Vec<ProbEntry>,
}

/// Parses a table. A pair listed twice is a parse error, since a map cannot
/// hold both values.
pub fn probs_from_json(text: &str) -> Result<ProbabilityTable<f64>> {
    let doc: ProbsDoc = parse("probabilities", text)?;
    check_format(PROBS_FORMAT, &doc.format)?;
    let mut table = ProbabilityTable::new(doc.tolerance.unwrap_or(DEFAULT_TOLERANCE));
    for (i, e) in doc.entries.into_iter().enumerate() {
        let label = format!("{}_{}", e.component, e.state);
        if table.insert(e.component, e.state, e.p).is_some() {
            return Err(Error::Parse {
                what: "probabilities",
                path: format!("entries[{i}]"),
                message: format!("duplicate entry for {label}"),
            });
        }
    }
    Ok(table)
}

pub fn probs_to_json(table: &ProbabilityTable<f64>) -> String {
    to_pretty(&ProbsDoc {
        format: PROBS_FORMAT.to_owned(),
        tolerance: Some(*table.tolerance()),
        entries: table
            .iter()
            .map(|(c, s, p)| ProbEntry {
                component: c.to_owned(),
                state: s.to_owned(),
                p: *p,
            })
            .collect(),
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DirectivesDoc {
    format: String,
    directives: Vec<ReductionDirective>,
}

pub fn directives_from_json(text: &str) -> Result<Vec<ReductionDirective>> {
    let doc: DirectivesDoc = parse("directives", text)?;
    check_format(DIRECTIVES_FORMAT, &doc.format)?;
    Ok(doc.directives)
}

pub fn directives_to_json(directives: &[ReductionDirective]) -> String {
    to_pretty(&DirectivesDoc {
        format: DIRECTIVES_FORMAT.to_owned(),
        directives: directives.to_vec(),
    })
}

#[derive(Serialize, Deserialize)]
struct ModelRef {
    name: String,
    hash: String,
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    state: String,
    child: usize,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    /// `null` for a terminal.
    component: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    edges: Vec<EdgeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeDoc {
    format: String,
    model_ref: ModelRef,
    model: ModelDoc,
    #[serde(default)]
    directives: Vec<ReductionDirective>,
    root: usize,
    nodes: Vec<NodeDoc>,
}

pub fn tree_to_json(tree: &EventTree) -> String {
    let model = tree.model();
    to_pretty(&TreeDoc {
        format: TREE_FORMAT.to_owned(),
        model_ref: ModelRef {
            name: model.name.clone(),
            hash: model_hash(model),
        },
        model: ModelDoc {
            format: MODEL_FORMAT.to_owned(),
            name: model.name.clone(),
            components: model.components.clone(),
        },
        directives: tree.directives().to_vec(),
        root: tree.root().0,
        nodes: tree
            .nodes()
            .iter()
            .map(|n| NodeDoc {
                component: n.component().map(str::to_owned),
                edges: n
                    .edges
                    .iter()
                    .map(|e| EdgeDoc {
                        state: e.state.clone(),
                        child: e.child.0,
                    })
                    .collect(),
            })
            .collect(),
    })
}

pub fn tree_from_json(text: &str) -> Result<EventTree> {
    let doc: TreeDoc = parse("tree", text)?;
    check_format(TREE_FORMAT, &doc.format)?;
    check_format(MODEL_FORMAT, &doc.model.format)?;
    let model = SystemModel::new(doc.model.name, doc.model.components);
    let found = model_hash(&model);
    if found != doc.model_ref.hash {
        return Err(Error::ModelHash {
            expected: doc.model_ref.hash,
            found,
        });
    }
    let nodes = doc
        .nodes
        .into_iter()
        .map(|n| Node {
            kind: match n.component {
                Some(c) => NodeKind::Component(c),
                None => NodeKind::Terminal,
            },
            edges: n
                .edges
                .into_iter()
                .map(|e| Edge {
                    state: e.state,
                    child: NodeId(e.child),
                })
                .collect(),
        })
        .collect();
    EventTree::from_parts(model, nodes, NodeId(doc.root), doc.directives)
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IndexValue {
    Index(usize),
    Range(String),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LabelValue {
    Label(StateLabel),
    Text(String),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Mode {
    Indices,
    ContainsAll,
    ContainsAny,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    format: Option<String>,
    mode: Mode,
    values: serde_json::Value,
}

/// Parses a partition. Index values may be integers or range strings such
/// as `"7-10"`; label values may be `{component, state}` objects or
/// `"COMP=STATE"` strings. The format tag is optional.
pub fn partition_from_json(text: &str) -> Result<PartitionQuery> {
    let doc: PartitionDoc = parse("partition", text)?;
    if let Some(f) = &doc.format {
        check_format(PARTITION_FORMAT, f)?;
    }
    let values_err = |e: serde_json::Error| Error::Parse {
        what: "partition",
        path: "values".into(),
        message: e.to_string(),
    };
    match doc.mode {
        Mode::Indices => {
            let values: Vec<IndexValue> =
                serde_json::from_value(doc.values).map_err(values_err)?;
            let mut set = BTreeSet::new();
            for v in values {
                match v {
                    IndexValue::Index(i) => {
                        set.insert(i);
                    }
                    IndexValue::Range(r) => set.extend(parse_index_ranges(&r)?),
                }
            }
            Ok(PartitionQuery::Indices(set))
        }
        Mode::ContainsAll | Mode::ContainsAny => {
            let values: Vec<LabelValue> =
                serde_json::from_value(doc.values).map_err(values_err)?;
            let labels = values
                .into_iter()
                .map(|v| match v {
                    LabelValue::Label(l) => Ok(l),
                    LabelValue::Text(t) => StateLabel::parse(&t),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(match doc.mode {
                Mode::ContainsAll => PartitionQuery::ContainsAll(labels),
                _ => PartitionQuery::ContainsAny(labels),
            })
        }
    }
}

pub fn partition_to_json(query: &PartitionQuery) -> String {
    let (mode, values) = match query {
        PartitionQuery::Indices(set) => (Mode::Indices, serde_json::json!(set)),
        PartitionQuery::ContainsAll(l) => (Mode::ContainsAll, serde_json::json!(l)),
        PartitionQuery::ContainsAny(l) => (Mode::ContainsAny, serde_json::json!(l)),
    };
    to_pretty(&PartitionDoc {
        format: Some(PARTITION_FORMAT.to_owned()),
        mode,
        values,
    })
}
