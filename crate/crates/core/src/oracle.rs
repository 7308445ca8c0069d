//! Independent cross-checks for the engine.
//!
//! The brute-force oracle never builds a tree. It walks the complete outcome
//! space with a mixed-radix counter, maps each complete path onto the reduced
//! path its cylinder leaves behind, and aggregates the mass of every reduced
//! path. The Monte Carlo oracle samples component states and reads off the
//! reduced path a sample lands on.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{validate_model, StateLabel, SystemModel};
use crate::partition::PartitionQuery;
use crate::probability::ProbabilityTable;
use crate::reduction::{apply_reduction, check_directives, ReductionDirective};
use crate::tree::{generate_complete, leaf_indices, NodeKind};
use crate::Probability;

/// Default bound on the number of complete paths the oracle will visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

/// Two-sided 99% standard normal quantile.
const Z_99: f64 = 2.575829303548901;

/// Sums the query's mass over the reduced outcome space implied by
/// `directives`, by exhaustive enumeration of the complete space.
///
/// Directive prefixes must start at the first component, as they do when
/// written against a complete tree.
pub fn oracle_brute_force<T: Probability>(
    model: &SystemModel,
    directives: &[ReductionDirective],
    table: &ProbabilityTable<T>,
    query: &PartitionQuery,
    cap: u64,
) -> Result<T> {
    if let Some(v) = validate_model(model).errors().next() {
        return Err(Error::Domain(format!("invalid model: {v}")));
    }
    let total = model
        .complete_path_count()
        .filter(|&n| n <= cap as u128)
        .ok_or(Error::TooLarge {
            paths: model.complete_path_count().unwrap_or(u128::MAX),
            cap,
        })?;
    let directives = check_directives(model, directives)?;

    // Each cylinder as (state index per prefix position, retained positions).
    let mut cylinders = Vec::with_capacity(directives.len());
    for (i, d) in directives.iter().enumerate() {
        let mut states = Vec::with_capacity(d.prefix.len());
        for (depth, ev) in d.prefix.iter().enumerate() {
            let (pos, s) = model.resolve(ev)?;
            if pos != depth {
                return Err(Error::InvalidDirective {
                    index: i,
                    reason: format!("prefix event {ev} is not anchored at the first component"),
                });
            }
            states.push(s);
        }
        let retained: Vec<usize> = d
            .retain
            .iter()
            .map(|c| model.position(c).expect("validated"))
            .collect();
        cylinders.push((states, retained));
    }

    let probs: Vec<Vec<T>> = model
        .components
        .iter()
        .map(|c| {
            c.states
                .iter()
                .map(|s| {
                    table
                        .get(&c.id, s)
                        .cloned()
                        .ok_or_else(|| Error::MissingProbability(StateLabel::new(&c.id, s)))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    // Reduced paths as (component position, state index) lists, in order of
    // first appearance; that order matches depth-first enumeration.
    let mut slots: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    let mut reduced: Vec<(Vec<(usize, usize)>, T)> = Vec::new();
    let radix: Vec<usize> = model.components.iter().map(|c| c.states.len()).collect();
    let mut digits = vec![0usize; radix.len()];
    for _ in 0..total {
        let mass = digits
            .iter()
            .enumerate()
            .fold(T::one(), |acc, (pos, &s)| acc * probs[pos][s].clone());
        let cylinder = cylinders
            .iter()
            .find(|(prefix, _)| prefix.iter().enumerate().all(|(i, s)| digits[i] == *s));
        let key: Vec<(usize, usize)> = match cylinder {
            Some((prefix, retained)) => (0..prefix.len())
                .chain(retained.iter().copied())
                .map(|pos| (pos, digits[pos]))
                .collect(),
            None => digits.iter().copied().enumerate().collect(),
        };
        match slots.get(&key) {
            Some(&slot) => {
                let acc = &mut reduced[slot].1;
                *acc = acc.clone() + mass;
            }
            None => {
                slots.insert(key.clone(), reduced.len());
                reduced.push((key, mass));
            }
        }
        // Odometer increment, last component fastest.
        for pos in (0..digits.len()).rev() {
            digits[pos] += 1;
            if digits[pos] < radix[pos] {
                break;
            }
            digits[pos] = 0;
        }
    }

    let holds = |key: &[(usize, usize)], label: &StateLabel| -> bool {
        model
            .resolve(label)
            .map(|(pos, s)| key.contains(&(pos, s)))
            .unwrap_or(false)
    };
    let mut sum = T::zero();
    match query {
        PartitionQuery::Indices(indices) => {
            for &i in indices {
                let (_, mass) = reduced.get(i).ok_or(Error::IndexOutOfRange {
                    index: i,
                    count: reduced.len(),
                })?;
                sum = sum + mass.clone();
            }
        }
        PartitionQuery::ContainsAll(labels) => {
            for (key, mass) in &reduced {
                if labels.iter().all(|l| holds(key, l)) {
                    sum = sum + mass.clone();
                }
            }
        }
        PartitionQuery::ContainsAny(labels) => {
            for (key, mass) in &reduced {
                if labels.iter().any(|l| holds(key, l)) {
                    sum = sum + mass.clone();
                }
            }
        }
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    /// Half-width of the normal-approximation 99% confidence interval.
    pub half_width: f64,
    pub samples: u64,
}

impl MonteCarloEstimate {
    pub fn covers(&self, value: f64) -> bool {
        (self.estimate - value).abs() <= self.half_width
    }
}

/// Estimates the query's probability by sampling component states
/// independently from `table`. A `(seed, samples)` pair fixes the result.
pub fn oracle_monte_carlo<T: Probability>(
    model: &SystemModel,
    directives: &[ReductionDirective],
    table: &ProbabilityTable<T>,
    query: &PartitionQuery,
    samples: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if samples == 0 {
        return Err(Error::Domain("at least one sample is required".into()));
    }
    let tree = apply_reduction(&generate_complete(model)?, directives)?;
    let paths = crate::tree::enumerate_paths(&tree);
    let selected = crate::partition::partition(&paths, query)?.selected;
    let leaf_path = leaf_indices(&tree);

    // Cumulative state weights per component, indexed like the model.
    let mut cumulative: HashMap<&str, Vec<f64>> = HashMap::new();
    for c in &model.components {
        let mut acc = 0.0;
        let mut cdf = Vec::with_capacity(c.states.len());
        for s in &c.states {
            let p = table
                .get(&c.id, s)
                .ok_or_else(|| Error::MissingProbability(StateLabel::new(&c.id, s)))?
                .to_f64()
                .ok_or_else(|| Error::Domain(format!("probability of {}_{s} is not finite", c.id)))?;
            acc += p;
            cdf.push(acc);
        }
        cumulative.insert(&c.id, cdf);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..samples {
        let mut id = tree.root();
        loop {
            let node = tree.node(id);
            let NodeKind::Component(c) = &node.kind else {
                break;
            };
            let cdf = &cumulative[c.as_str()];
            let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
            let state = cdf.iter().position(|&x| u < x).unwrap_or(cdf.len() - 1);
            id = node.edges[state].child;
        }
        let path = leaf_path[id.0].expect("walk ends on a terminal");
        if selected.contains(&path) {
            hits += 1;
        }
    }
    let n = samples as f64;
    let estimate = hits as f64 / n;
    let half_width = Z_99 * (estimate * (1.0 - estimate) / n).sqrt();
    Ok(MonteCarloEstimate {
        estimate,
        half_width,
        samples,
    })
}
