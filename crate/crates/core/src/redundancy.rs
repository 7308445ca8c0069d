//! 1-out-of-2 parallel redundancy: duplicate a two-state component and
//! rewrite the cylinders so the pair behaves like the original component.
//!
//! The first declared state is the success state. The pair succeeds when at
//! least one copy succeeds and fails only when both fail.

use crate::error::{Error, Result};
use crate::model::{ComponentDef, StateLabel, SystemModel};
use crate::probability::ProbabilityTable;
use crate::reduction::ReductionDirective;
use crate::Probability;

/// Ids of the two copies, `CT` -> `CT1`, `CT2`.
pub fn copy_ids(component: &str) -> (String, String) {
    (format!("{component}1"), format!("{component}2"))
}

/// State pairs of the copies whose parallel outcome equals `state`, in
/// declared order.
fn expansions<'a>(def: &'a ComponentDef, state: &str) -> Vec<(&'a str, &'a str)> {
    let (ok, fail) = (def.states[0].as_str(), def.states[1].as_str());
    if state == ok {
        vec![(ok, ok), (ok, fail), (fail, ok)]
    } else {
        vec![(fail, fail)]
    }
}

/// Returns the model with `component` replaced by two parallel copies and
/// the directives rewritten over the copies' joint states.
///
/// When the duplicated component comes first and no rewritten directive
/// already covers the both-fail branch, a truncation at that branch is
/// added.
pub fn add_parallel_redundancy(
    model: &SystemModel,
    directives: &[ReductionDirective],
    component: &str,
) -> Result<(SystemModel, Vec<ReductionDirective>)> {
    let pos = model
        .position(component)
        .ok_or_else(|| Error::UnknownComponent(component.to_owned()))?;
    let def = &model.components[pos];
    if def.states.len() != 2 {
        return Err(Error::UnsupportedRedundancy {
            component: component.to_owned(),
            states: def.states.len(),
        });
    }
    let (first, second) = copy_ids(component);
    for id in [&first, &second] {
        if model.position(id).is_some() {
            return Err(Error::IdCollision(id.clone()));
        }
    }

    let mut components = model.components.clone();
    let copy = |id: &str| ComponentDef {
        id: id.to_owned(),
        ..def.clone()
    };
    components.splice(pos..=pos, [copy(&first), copy(&second)]);
    let new_model = SystemModel::new(model.name.clone(), components);

    let mut rewritten = Vec::new();
    for d in directives {
        let retain: Vec<String> = d
            .retain
            .iter()
            .flat_map(|c| {
                if c == component {
                    vec![first.clone(), second.clone()]
                } else {
                    vec![c.clone()]
                }
            })
            .collect();
        match d.prefix.iter().position(|e| e.component == component) {
            None => rewritten.push(ReductionDirective::new(d.prefix.clone(), retain)),
            Some(at) => {
                for (s1, s2) in expansions(def, &d.prefix[at].state) {
                    let mut prefix = d.prefix[..at].to_vec();
                    prefix.push(StateLabel::new(first.clone(), s1));
                    prefix.push(StateLabel::new(second.clone(), s2));
                    prefix.extend_from_slice(&d.prefix[at + 1..]);
                    rewritten.push(ReductionDirective::new(prefix, retain.clone()));
                }
            }
        }
    }

    if pos == 0 {
        let fail = def.states[1].as_str();
        let both_fail = vec![
            StateLabel::new(first.clone(), fail),
            StateLabel::new(second.clone(), fail),
        ];
        let covered = rewritten.iter().any(|d| {
            d.prefix.len() >= 2 && d.prefix[..2].iter().zip(&both_fail).all(|(a, b)| a.same_event(b))
        });
        if !covered {
            rewritten.push(ReductionDirective::truncate(both_fail));
        }
    }
    Ok((new_model, rewritten))
}

/// Copies the duplicated component's probabilities to both copies.
pub fn redundant_table<T: Probability>(
    table: &ProbabilityTable<T>,
    component: &str,
) -> Result<ProbabilityTable<T>> {
    let mut out = table.clone();
    let entries = out
        .remove_component(component)
        .ok_or_else(|| Error::UnknownComponent(component.to_owned()))?;
    let (first, second) = copy_ids(component);
    for (state, p) in entries {
        out.insert(first.clone(), state.clone(), p.clone());
        out.insert(second.clone(), state, p);
    }
    Ok(out)
}
