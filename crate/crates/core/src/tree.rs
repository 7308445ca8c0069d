//! Arena-backed event tree, complete generation, and path enumeration.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{validate_model, StateLabel, SystemModel};
use crate::reduction::ReductionDirective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Component(String),
    Terminal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub state: String,
    pub child: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    pub edges: Vec<Edge>,
}

impl Node {
    pub fn terminal() -> Self {
        Self {
            kind: NodeKind::Terminal,
            edges: Vec::new(),
        }
    }

    pub fn component(&self) -> Option<&str> {
        match &self.kind {
            NodeKind::Component(c) => Some(c),
            NodeKind::Terminal => None,
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.kind, NodeKind::Terminal)
    }
}

/// Rooted ordered tree. Component nodes branch over every declared state of
/// their component; terminal nodes end a path.
///
/// Trees built here store nodes in depth-first preorder, so node ids are
/// stable for identical inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTree {
    nodes: Vec<Node>,
    root: NodeId,
    model: SystemModel,
    directives: Vec<ReductionDirective>,
}

impl EventTree {
    /// Assembles a tree from raw parts and checks that it is a well-formed
    /// arborescence consistent with `model`.
    pub fn from_parts(
        model: SystemModel,
        nodes: Vec<Node>,
        root: NodeId,
        directives: Vec<ReductionDirective>,
    ) -> Result<Self> {
        let tree = Self {
            nodes,
            root,
            model,
            directives,
        };
        tree.check()?;
        Ok(tree)
    }

    pub(crate) fn from_arena(
        model: SystemModel,
        nodes: Vec<Node>,
        directives: Vec<ReductionDirective>,
    ) -> Self {
        Self {
            nodes,
            root: NodeId(0),
            model,
            directives,
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn model(&self) -> &SystemModel {
        &self.model
    }

    /// Every directive applied so far, in application order.
    pub fn directives(&self) -> &[ReductionDirective] {
        &self.directives
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_terminal()).count()
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::MalformedTree(msg));
        if self.root.0 >= self.nodes.len() {
            return bad(format!("root {} out of range", self.root));
        }
        let mut seen = vec![false; self.nodes.len()];
        // (node, model position of its component's predecessor on the path)
        let mut stack = vec![(self.root, None::<usize>)];
        while let Some((id, prev)) = stack.pop() {
            if seen[id.0] {
                return bad(format!("node {id} reachable more than once"));
            }
            seen[id.0] = true;
            let node = &self.nodes[id.0];
            match &node.kind {
                NodeKind::Terminal => {
                    if !node.edges.is_empty() {
                        return bad(format!("terminal {id} has outgoing edges"));
                    }
                }
                NodeKind::Component(c) => {
                    let Some(pos) = self.model.position(c) else {
                        return bad(format!("node {id} names unknown component `{c}`"));
                    };
                    if prev.is_some_and(|p| p >= pos) {
                        return bad(format!("component `{c}` at {id} breaks model order"));
                    }
                    let declared = &self.model.components[pos].states;
                    let states: Vec<&String> = node.edges.iter().map(|e| &e.state).collect();
                    if states.len() != declared.len()
                        || states.iter().zip(declared).any(|(a, b)| *a != b)
                    {
                        return bad(format!(
                            "edges of {id} do not match the declared states of `{c}`"
                        ));
                    }
                    for e in node.edges.iter().rev() {
                        if e.child.0 >= self.nodes.len() {
                            return bad(format!("edge from {id} to missing {}", e.child));
                        }
                        stack.push((e.child, Some(pos)));
                    }
                }
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            return bad(format!("node n{orphan} unreachable from root"));
        }
        Ok(())
    }
}

/// One root-to-leaf sequence of events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub index: usize,
    pub events: Vec<StateLabel>,
}

impl Path {
    pub fn contains(&self, label: &StateLabel) -> bool {
        self.events.iter().any(|e| e.same_event(label))
    }
}

/// Builds the tree whose paths are the Cartesian product of all outcome
/// spaces, components in declared order, states in declared order.
pub fn generate_complete(model: &SystemModel) -> Result<EventTree> {
    if model.components.is_empty() {
        return Err(Error::Domain("model has no components".into()));
    }
    let report = validate_model(model);
    if let Some(v) = report.errors().next() {
        return Err(Error::Domain(format!("invalid model: {v}")));
    }
    let mut nodes = Vec::new();
    build_complete(model, 0, &mut nodes);
    Ok(EventTree::from_arena(model.clone(), nodes, Vec::new()))
}

fn build_complete(model: &SystemModel, depth: usize, nodes: &mut Vec<Node>) -> NodeId {
    let id = NodeId(nodes.len());
    let Some(comp) = model.components.get(depth) else {
        nodes.push(Node::terminal());
        return id;
    };
    nodes.push(Node {
        kind: NodeKind::Component(comp.id.clone()),
        edges: Vec::with_capacity(comp.states.len()),
    });
    for state in &comp.states {
        let child = build_complete(model, depth + 1, nodes);
        nodes[id.0].edges.push(Edge {
            state: state.clone(),
            child,
        });
    }
    id
}

/// Depth-first, declared-edge-order listing of every path.
pub fn enumerate_paths(tree: &EventTree) -> Vec<Path> {
    let mut paths = Vec::new();
    let mut prefix: Vec<StateLabel> = Vec::new();
    walk(tree, tree.root(), &mut prefix, &mut paths);
    paths
}

fn walk(tree: &EventTree, id: NodeId, prefix: &mut Vec<StateLabel>, out: &mut Vec<Path>) {
    let node = tree.node(id);
    match &node.kind {
        NodeKind::Terminal => out.push(Path {
            index: out.len(),
            events: prefix.clone(),
        }),
        NodeKind::Component(c) => {
            for e in &node.edges {
                prefix.push(StateLabel::new(c.clone(), e.state.clone()));
                walk(tree, e.child, prefix, out);
                prefix.pop();
            }
        }
    }
}

/// Map from terminal node to the index of the path it ends.
pub(crate) fn leaf_indices(tree: &EventTree) -> Vec<Option<usize>> {
    let mut out = vec![None; tree.nodes().len()];
    let mut next = 0;
    let mut stack = vec![tree.root()];
    while let Some(id) = stack.pop() {
        let node = tree.node(id);
        if node.is_terminal() {
            out[id.0] = Some(next);
            next += 1;
        }
        stack.extend(node.edges.iter().rev().map(|e| e.child));
    }
    out
}

/// Checks pairwise distinctness of paths; small inputs only.
pub fn paths_are_distinct(paths: &[Path]) -> bool {
    let mut seen = HashSet::new();
    paths.iter().all(|p| seen.insert(&p.events))
}
