//! System model: components, their ordered outcome spaces, and the
//! structural checks an outcome space has to pass before a tree is built.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One outcome of one component, e.g. `CT_O`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateLabel {
    pub component: String,
    pub state: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display: Option<String>,
}

impl StateLabel {
    pub fn new(component: impl Into<String>, state: impl Into<String>) -> Self {
        Self {
            component: component.into(),
            state: state.into(),
            display: None,
        }
    }

    /// Same component and state, ignoring the display text.
    pub fn same_event(&self, other: &StateLabel) -> bool {
        self.component == other.component && self.state == other.state
    }

    /// Parses `COMP=STATE`, or `COMP_STATE` split at the last underscore.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let split = text.split_once('=').or_else(|| text.rsplit_once('_'));
        match split {
            Some((c, s)) if !c.is_empty() && !s.is_empty() => Ok(Self::new(c, s)),
            _ => Err(Error::Domain(format!(
                "cannot read `{text}` as an event; use COMPONENT=STATE"
            ))),
        }
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.component, self.state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDef {
    pub id: String,
    pub states: Vec<String>,
    /// Failures per year, used by the exponential helpers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_rate: Option<f64>,
}

impl ComponentDef {
    pub fn new<S: Into<String>>(id: impl Into<String>, states: impl IntoIterator<Item = S>) -> Self {
        Self {
            id: id.into(),
            states: states.into_iter().map(Into::into).collect(),
            failure_rate: None,
        }
    }

    pub fn with_failure_rate(mut self, lambda: f64) -> Self {
        self.failure_rate = Some(lambda);
        self
    }

    pub fn state_index(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }
}

/// Ordered list of components. The order fixes the node order of every
/// tree generated from the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    pub name: String,
    pub components: Vec<ComponentDef>,
}

impl SystemModel {
    pub fn new(name: impl Into<String>, components: Vec<ComponentDef>) -> Self {
        Self {
            name: name.into(),
            components,
        }
    }

    pub fn component(&self, id: &str) -> Option<&ComponentDef> {
        self.components.iter().find(|c| c.id == id)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.components.iter().position(|c| c.id == id)
    }

    /// Resolves a label to `(component position, state position)`.
    pub fn resolve(&self, label: &StateLabel) -> Result<(usize, usize)> {
        let pos = self
            .position(&label.component)
            .ok_or_else(|| Error::UnknownComponent(label.component.clone()))?;
        let state = self.components[pos]
            .state_index(&label.state)
            .ok_or_else(|| Error::UnknownState {
                component: label.component.clone(),
                state: label.state.clone(),
            })?;
        Ok((pos, state))
    }

    /// Number of paths of the complete tree, `None` on overflow.
    pub fn complete_path_count(&self) -> Option<u128> {
        self.components
            .iter()
            .try_fold(1u128, |acc, c| acc.checked_mul(c.states.len() as u128))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    NoComponents,
    EmptyComponentId { index: usize },
    DuplicateComponent,
    NoStates,
    EmptyStateId { index: usize },
    DuplicateState,
    /// Two labels equal up to case; they are distinct strings but probably
    /// not distinct outcomes.
    CaseOnlyDistinct { other: String },
    InvalidFailureRate { value: String },
    UnknownComponent,
    UnknownState,
    ProbabilityOutOfRange { value: String },
    MissingEntry,
    NoEntries,
    SumMismatch { sum: String, tolerance: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub severity: Severity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

impl Violation {
    fn error(component: Option<&str>, state: Option<&str>, kind: ViolationKind) -> Self {
        Self {
            severity: Severity::Error,
            component: component.map(str::to_owned),
            state: state.map(str::to_owned),
            kind,
        }
    }

    fn warning(component: Option<&str>, state: Option<&str>, kind: ViolationKind) -> Self {
        Self {
            severity: Severity::Warning,
            ..Self::error(component, state, kind)
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{level}")?;
        match (&self.component, &self.state) {
            (Some(c), Some(s)) => write!(f, " [{c}/{s}]")?,
            (Some(c), None) => write!(f, " [{c}]")?,
            _ => {}
        }
        let msg = match &self.kind {
            ViolationKind::NoComponents => "model has no components".to_owned(),
            ViolationKind::EmptyComponentId { index } => {
                format!("component #{index} has an empty id")
            }
            ViolationKind::DuplicateComponent => "duplicate component id".to_owned(),
            ViolationKind::NoStates => "component declares no states".to_owned(),
            ViolationKind::EmptyStateId { index } => format!("state #{index} has an empty id"),
            ViolationKind::DuplicateState => "duplicate state".to_owned(),
            ViolationKind::CaseOnlyDistinct { other } => {
                format!("state differs from `{other}` only by case")
            }
            ViolationKind::InvalidFailureRate { value } => {
                format!("failure rate {value} must be finite and non-negative")
            }
            ViolationKind::UnknownComponent => "entry references an unknown component".to_owned(),
            ViolationKind::UnknownState => "entry references an unknown state".to_owned(),
            ViolationKind::ProbabilityOutOfRange { value } => {
                format!("probability {value} outside [0, 1]")
            }
            ViolationKind::MissingEntry => "state has no probability entry".to_owned(),
            ViolationKind::NoEntries => "component has no probability entries".to_owned(),
            ViolationKind::SumMismatch { sum, tolerance } => {
                format!("state probabilities sum to {sum}, not 1 (tolerance {tolerance})")
            }
        };
        write!(f, ": {msg}")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations
            .iter()
            .filter(|v| v.severity == Severity::Error)
    }

    pub(crate) fn push(&mut self, v: Violation) {
        self.violations.push(v);
    }
}

/// Obligation the modeler carries that no check here can discharge.
pub const RESIDUAL_OBLIGATION: &str = "declared states are assumed complete and mutually exclusive; \
     only distinctness and probability normalization are checked";

/// Checks distinctness, non-emptiness and finiteness of every outcome space.
pub fn validate_model(model: &SystemModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    if model.components.is_empty() {
        report.push(Violation::error(None, None, ViolationKind::NoComponents));
    }

    let mut seen_ids = HashSet::new();
    for (index, comp) in model.components.iter().enumerate() {
        let id = comp.id.as_str();
        if id.trim().is_empty() {
            report.push(Violation::error(
                None,
                None,
                ViolationKind::EmptyComponentId { index },
            ));
        } else if !seen_ids.insert(id) {
            report.push(Violation::error(Some(id), None, ViolationKind::DuplicateComponent));
        }

        if comp.states.is_empty() {
            report.push(Violation::error(Some(id), None, ViolationKind::NoStates));
        }
        let mut seen_states: Vec<&str> = Vec::with_capacity(comp.states.len());
        for (si, state) in comp.states.iter().enumerate() {
            if state.trim().is_empty() {
                report.push(Violation::error(
                    Some(id),
                    None,
                    ViolationKind::EmptyStateId { index: si },
                ));
                continue;
            }
            if seen_states.contains(&state.as_str()) {
                report.push(Violation::error(Some(id), Some(state), ViolationKind::DuplicateState));
            } else if let Some(other) = seen_states
                .iter()
                .find(|s| s.eq_ignore_ascii_case(state))
            {
                report.push(Violation::warning(
                    Some(id),
                    Some(state),
                    ViolationKind::CaseOnlyDistinct {
                        other: (*other).to_owned(),
                    },
                ));
            }
            seen_states.push(state);
        }

        if let Some(rate) = comp.failure_rate {
            if !rate.is_finite() || rate < 0.0 {
                report.push(Violation::error(
                    Some(id),
                    None,
                    ViolationKind::InvalidFailureRate {
                        value: rate.to_string(),
                    },
                ));
            }
        }
    }
    report
}
