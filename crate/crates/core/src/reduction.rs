//! Complete-cylinder reduction.
//!
//! A directive names a concrete event prefix and the downstream components
//! the paths below that prefix still depend on. Every other downstream
//! component is spliced out. An empty `retain` truncates the paths at the
//! prefix (branch deletion); retaining a later component while dropping an
//! interior one removes just that node (node deletion).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{StateLabel, SystemModel};
use crate::tree::{Edge, EventTree, Node, NodeId, NodeKind};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReductionDirective {
    pub prefix: Vec<StateLabel>,
    #[serde(default)]
    pub retain: Vec<String>,
}

impl ReductionDirective {
    pub fn new(prefix: Vec<StateLabel>, retain: Vec<String>) -> Self {
        Self { prefix, retain }
    }

    /// Branch deletion: everything below `prefix` goes.
    pub fn truncate(prefix: Vec<StateLabel>) -> Self {
        Self::new(prefix, Vec::new())
    }

    fn starts_with(&self, other: &ReductionDirective) -> bool {
        other.prefix.len() <= self.prefix.len()
            && other
                .prefix
                .iter()
                .zip(&self.prefix)
                .all(|(a, b)| a.same_event(b))
    }

    /// Checks the directive against the model's component order. `index` is
    /// only used in the error.
    pub fn validate(&self, model: &SystemModel, index: usize) -> Result<()> {
        let invalid = |reason: String| Error::InvalidDirective { index, reason };
        if self.prefix.is_empty() {
            return Err(invalid("prefix is empty".into()));
        }
        let mut last = None;
        for ev in &self.prefix {
            let (pos, _) = model
                .resolve(ev)
                .map_err(|e| invalid(format!("prefix event {ev}: {e}")))?;
            if last.is_some_and(|l| l >= pos) {
                return Err(invalid(format!("prefix event {ev} is out of model order")));
            }
            last = Some(pos);
        }
        for comp in &self.retain {
            let pos = model
                .position(comp)
                .ok_or_else(|| invalid(format!("retained component `{comp}` is unknown")))?;
            if last.is_some_and(|l| l >= pos) {
                return Err(invalid(format!(
                    "retained component `{comp}` must come after the prefix, in model order"
                )));
            }
            last = Some(pos);
        }
        Ok(())
    }
}

/// Validates each directive and rejects nested prefixes. Exact duplicates
/// are dropped; the returned list keeps first occurrences in input order.
pub fn check_directives(
    model: &SystemModel,
    directives: &[ReductionDirective],
) -> Result<Vec<ReductionDirective>> {
    for (i, d) in directives.iter().enumerate() {
        d.validate(model, i)?;
    }
    let mut kept: Vec<(usize, &ReductionDirective)> = Vec::new();
    'outer: for (i, d) in directives.iter().enumerate() {
        for &(j, k) in &kept {
            if d == k {
                continue 'outer;
            }
            let (long, short) = if d.prefix.len() >= k.prefix.len() { (d, k) } else { (k, d) };
            if long.starts_with(short) {
                let reason = if d.prefix.len() == k.prefix.len() {
                    "same prefix with different retained components".to_owned()
                } else {
                    let short_text: Vec<String> = short.prefix.iter().map(|e| e.to_string()).collect();
                    format!("prefix [{}] contains the other", short_text.join(", "))
                };
                return Err(Error::DirectiveConflict {
                    first: j,
                    second: i,
                    reason,
                });
            }
        }
        kept.push((i, d));
    }
    Ok(kept.into_iter().map(|(_, d)| d.clone()).collect())
}

enum Target {
    Node(NodeId),
    /// An earlier cylinder already ended the path inside the prefix.
    Truncated,
}

fn resolve(tree: &EventTree, d: &ReductionDirective, index: usize) -> Result<Target> {
    let mut id = tree.root();
    for ev in &d.prefix {
        let node = tree.node(id);
        match &node.kind {
            NodeKind::Terminal => return Ok(Target::Truncated),
            NodeKind::Component(c) if *c == ev.component => {
                let edge = node.edges.iter().find(|e| e.state == ev.state).ok_or_else(|| {
                    Error::PrefixNotFound {
                        index,
                        event: ev.clone(),
                    }
                })?;
                id = edge.child;
            }
            NodeKind::Component(_) => {
                return Err(Error::PrefixNotFound {
                    index,
                    event: ev.clone(),
                })
            }
        }
    }
    Ok(Target::Node(id))
}

/// Applies a set of non-overlapping directives in one pass. Paths outside
/// every prefix keep their structure; the result is renumbered in
/// preorder.
pub fn apply_reduction(tree: &EventTree, directives: &[ReductionDirective]) -> Result<EventTree> {
    if directives.is_empty() {
        return Ok(tree.clone());
    }
    let directives = check_directives(tree.model(), directives)?;

    let mut targets: HashMap<NodeId, &[String]> = HashMap::new();
    for (i, d) in directives.iter().enumerate() {
        if let Target::Node(id) = resolve(tree, d, i)? {
            targets.insert(id, &d.retain);
        }
    }

    let mut nodes = Vec::with_capacity(tree.nodes().len());
    copy(tree, tree.root(), &targets, &mut nodes);

    let mut history = tree.directives().to_vec();
    for d in directives {
        if !history.contains(&d) {
            history.push(d);
        }
    }
    Ok(EventTree::from_arena(tree.model().clone(), nodes, history))
}

fn copy(
    tree: &EventTree,
    id: NodeId,
    targets: &HashMap<NodeId, &[String]>,
    out: &mut Vec<Node>,
) -> NodeId {
    if let Some(keep) = targets.get(&id) {
        return splice(tree, id, keep, out);
    }
    let node = tree.node(id);
    let new_id = NodeId(out.len());
    out.push(Node {
        kind: node.kind.clone(),
        edges: Vec::with_capacity(node.edges.len()),
    });
    for e in &node.edges {
        let child = copy(tree, e.child, targets, out);
        out[new_id.0].edges.push(Edge {
            state: e.state.clone(),
            child,
        });
    }
    new_id
}

/// Copies the subtree at `id` keeping only components in `keep`. A dropped
/// component's states all continue into the same remainder, so its first
/// branch stands in for all of them.
fn splice(tree: &EventTree, id: NodeId, keep: &[String], out: &mut Vec<Node>) -> NodeId {
    let node = tree.node(id);
    match &node.kind {
        NodeKind::Terminal => {
            let new_id = NodeId(out.len());
            out.push(Node::terminal());
            new_id
        }
        NodeKind::Component(c) if keep.contains(c) => {
            let new_id = NodeId(out.len());
            out.push(Node {
                kind: node.kind.clone(),
                edges: Vec::with_capacity(node.edges.len()),
            });
            for e in &node.edges {
                let child = splice(tree, e.child, keep, out);
                out[new_id.0].edges.push(Edge {
                    state: e.state.clone(),
                    child,
                });
            }
            new_id
        }
        NodeKind::Component(_) => splice(tree, node.edges[0].child, keep, out),
    }
}
