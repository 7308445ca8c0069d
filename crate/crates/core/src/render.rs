//! Text renderings of trees and results: Graphviz DOT, path listings, and
//! histogram CSV.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::eval::path_probability;
use crate::model::StateLabel;
use crate::probability::ProbabilityTable;
use crate::tree::{leaf_indices, EventTree, NodeKind, Path};
use crate::Probability;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelStyle {
    /// `CT=O`
    Full,
    /// `CT_O`
    #[default]
    Compact,
}

impl LabelStyle {
    pub fn label(self, ev: &StateLabel) -> String {
        match self {
            LabelStyle::Full => format!("{}={}", ev.component, ev.state),
            LabelStyle::Compact => format!("{}_{}", ev.component, ev.state),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOptions {
    pub label_style: LabelStyle,
    pub include_path_indices: bool,
    /// Only honored by the `*_with_table` renderers.
    pub include_probabilities: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            label_style: LabelStyle::Compact,
            include_path_indices: true,
            include_probabilities: false,
        }
    }
}

fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for ch in text.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// DOT digraph of the tree, laid out left to right. Node ids are arena
/// indices; edge labels are state ids.
pub fn to_dot(tree: &EventTree, options: &RenderOptions) -> String {
    render_dot(tree, options, |_| None)
}

/// As [`to_dot`], with each leaf labeled by its path probability when
/// `include_probabilities` is set.
pub fn to_dot_with_table<T: Probability>(
    tree: &EventTree,
    options: &RenderOptions,
    table: &ProbabilityTable<T>,
) -> Result<String> {
    if !options.include_probabilities {
        return Ok(to_dot(tree, options));
    }
    let paths = crate::tree::enumerate_paths(tree);
    let probs = paths
        .iter()
        .map(|p| path_probability(p, table).map(|v| v.to_string()))
        .collect::<Result<Vec<_>>>()?;
    Ok(render_dot(tree, options, |i| Some(probs[i].clone())))
}

fn render_dot(
    tree: &EventTree,
    options: &RenderOptions,
    probability: impl Fn(usize) -> Option<String>,
) -> String {
    let leaves = leaf_indices(tree);
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(&tree.model().name));
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [fontname=\"Helvetica\"];\n");
    out.push_str("  edge [fontname=\"Helvetica\"];\n");
    for (i, node) in tree.nodes().iter().enumerate() {
        match &node.kind {
            NodeKind::Component(c) => {
                let _ = writeln!(out, "  n{i} [label={}, shape=circle];", quote(c));
            }
            NodeKind::Terminal => {
                let path = leaves[i].expect("every terminal ends a path");
                let mut label = if options.include_path_indices {
                    format!("Path_{path}")
                } else {
                    String::new()
                };
                if let Some(p) = probability(path) {
                    if !label.is_empty() {
                        label.push('\n');
                    }
                    label.push_str(&format!("P = {p}"));
                }
                let _ = writeln!(out, "  n{i} [label={}, shape=box];", quote(&label));
            }
        }
    }
    for (i, node) in tree.nodes().iter().enumerate() {
        for e in &node.edges {
            let _ = writeln!(out, "  n{i} -> n{} [label={}];", e.child.0, quote(&e.state));
        }
    }
    out.push_str("}\n");
    out
}

fn path_line(path: &Path, style: LabelStyle) -> String {
    let events: Vec<String> = path.events.iter().map(|e| style.label(e)).collect();
    format!("Path_{} = [{}]", path.index, events.join(", "))
}

/// One `Path_k = [..]` line per path, in index order.
pub fn paths_report(paths: &[Path], style: LabelStyle) -> String {
    paths
        .iter()
        .map(|p| path_line(p, style) + "\n")
        .collect()
}

/// As [`paths_report`], with the path probability after each line.
pub fn paths_report_with_table<T: Probability>(
    paths: &[Path],
    style: LabelStyle,
    table: &ProbabilityTable<T>,
) -> Result<String> {
    let mut out = String::new();
    for p in paths {
        let prob = path_probability(p, table)?;
        let _ = writeln!(out, "{}  P = {prob}", path_line(p, style));
    }
    Ok(out)
}

/// `label,probability_percent` CSV, rows in input order.
pub fn histogram_data(rows: &[(String, f64)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Csv(e.to_string());
    w.write_record(["label", "probability_percent"]).map_err(csv_err)?;
    for (label, p) in rows {
        w.write_record([label.as_str(), &(p * 100.0).to_string()])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Csv(e.to_string()))
}
