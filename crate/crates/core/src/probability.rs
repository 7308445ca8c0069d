//! Per-state probability tables and the exponential failure helpers.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::model::{StateLabel, SystemModel, Violation, ValidationReport, ViolationKind, Severity};
use crate::Probability;

/// Default tolerance on the per-component sum-to-one check.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Probability of every (component, state) pair. Keyed by component, then
/// state.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable<T> {
    entries: BTreeMap<String, BTreeMap<String, T>>,
    tolerance: T,
}

impl Default for ProbabilityTable<f64> {
    fn default() -> Self {
        Self::new(DEFAULT_TOLERANCE)
    }
}

impl<T: Probability> ProbabilityTable<T> {
    pub fn new(tolerance: T) -> Self {
        Self {
            entries: BTreeMap::new(),
            tolerance,
        }
    }

    pub fn tolerance(&self) -> &T {
        &self.tolerance
    }

    pub fn set_tolerance(&mut self, tolerance: T) {
        self.tolerance = tolerance;
    }

    /// Inserts or replaces an entry, returning the previous value.
    pub fn insert(&mut self, component: impl Into<String>, state: impl Into<String>, p: T) -> Option<T> {
        self.entries
            .entry(component.into())
            .or_default()
            .insert(state.into(), p)
    }

    pub fn with(mut self, component: &str, state: &str, p: T) -> Self {
        self.insert(component, state, p);
        self
    }

    pub fn get(&self, component: &str, state: &str) -> Option<&T> {
        self.entries.get(component)?.get(state)
    }

    pub fn lookup(&self, label: &StateLabel) -> Result<&T> {
        self.get(&label.component, &label.state)
            .ok_or_else(|| Error::MissingProbability(label.clone()))
    }

    pub fn component_entries(&self, component: &str) -> Option<&BTreeMap<String, T>> {
        self.entries.get(component)
    }

    pub fn remove_component(&mut self, component: &str) -> Option<BTreeMap<String, T>> {
        self.entries.remove(component)
    }

    /// Every entry as `(component, state, p)` in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &T)> {
        self.entries.iter().flat_map(|(c, states)| {
            states.iter().map(move |(s, p)| (c.as_str(), s.as_str(), p))
        })
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Converts every value, e.g. to an exact rational type.
    pub fn map<U: Probability>(&self, mut f: impl FnMut(&T) -> U) -> ProbabilityTable<U> {
        ProbabilityTable {
            entries: self
                .entries
                .iter()
                .map(|(c, states)| {
                    (
                        c.clone(),
                        states.iter().map(|(s, p)| (s.clone(), f(p))).collect(),
                    )
                })
                .collect(),
            tolerance: f(&self.tolerance),
        }
    }
}

fn abs_diff<T: Probability>(a: &T, b: &T) -> T {
    if a >= b {
        a.clone() - b.clone()
    } else {
        b.clone() - a.clone()
    }
}

/// Checks the table against the model: unknown keys, values outside
/// `[0, 1]`, missing states, and per-component sums.
///
/// A component with no entries at all only draws a warning, since a table
/// may legitimately cover just the components a reduced tree still uses.
pub fn validate_probabilities<T: Probability>(
    model: &SystemModel,
    table: &ProbabilityTable<T>,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let (zero, one) = (T::zero(), T::one());

    for (component, states) in &table.entries {
        let Some(def) = model.component(component) else {
            report.push(Violation {
                severity: Severity::Error,
                component: Some(component.clone()),
                state: None,
                kind: ViolationKind::UnknownComponent,
            });
            continue;
        };
        for (state, p) in states {
            if def.state_index(state).is_none() {
                report.push(Violation {
                    severity: Severity::Error,
                    component: Some(component.clone()),
                    state: Some(state.clone()),
                    kind: ViolationKind::UnknownState,
                });
            }
            // NaN fails both comparisons, so test for the in-range case.
            if !(*p >= zero && *p <= one) {
                report.push(Violation {
                    severity: Severity::Error,
                    component: Some(component.clone()),
                    state: Some(state.clone()),
                    kind: ViolationKind::ProbabilityOutOfRange {
                        value: p.to_string(),
                    },
                });
            }
        }
    }

    for def in &model.components {
        let Some(states) = table.entries.get(&def.id) else {
            report.push(Violation {
                severity: Severity::Warning,
                component: Some(def.id.clone()),
                state: None,
                kind: ViolationKind::NoEntries,
            });
            continue;
        };
        let mut complete = true;
        for state in &def.states {
            if !states.contains_key(state) {
                complete = false;
                report.push(Violation {
                    severity: Severity::Error,
                    component: Some(def.id.clone()),
                    state: Some(state.clone()),
                    kind: ViolationKind::MissingEntry,
                });
            }
        }
        if !complete {
            continue;
        }
        let sum = def
            .states
            .iter()
            .fold(T::zero(), |acc, s| acc + states[s].clone());
        // NaN sums compare as None and are reported too.
        if !matches!(
            abs_diff(&sum, &one).partial_cmp(&table.tolerance),
            Some(Ordering::Less | Ordering::Equal)
        ) {
            report.push(Violation {
                severity: Severity::Error,
                component: Some(def.id.clone()),
                state: None,
                kind: ViolationKind::SumMismatch {
                    sum: sum.to_string(),
                    tolerance: table.tolerance.to_string(),
                },
            });
        }
    }
    report
}

fn check_rate_and_time<F: Float>(lambda: F, t: F) -> Result<()> {
    if lambda < F::zero() || !lambda.is_finite() {
        return Err(Error::Domain("failure rate must be finite and >= 0".into()));
    }
    if t < F::zero() || !t.is_finite() {
        return Err(Error::Domain("mission time must be finite and >= 0".into()));
    }
    Ok(())
}

fn round_to<F: Float>(x: F, decimals: Option<u32>) -> F {
    match decimals {
        None => x,
        Some(d) => {
            let scale = F::from(10.0f64.powi(d as i32)).unwrap_or_else(F::one);
            (x * scale).round() / scale
        }
    }
}

/// Probability of failure by time `t` under a constant failure rate:
/// `1 - exp(-lambda * t)`.
pub fn exp_unreliability<F: Float>(lambda: F, t: F) -> Result<F> {
    check_rate_and_time(lambda, t)?;
    Ok(-(-(lambda * t)).exp_m1())
}

/// Complement of [`exp_unreliability`].
pub fn exp_reliability<F: Float>(lambda: F, t: F) -> Result<F> {
    Ok(F::one() - exp_unreliability(lambda, t)?)
}

/// [`exp_unreliability`] rounded to `decimals` places, when given.
pub fn exp_unreliability_rounded<F: Float>(lambda: F, t: F, decimals: Option<u32>) -> Result<F> {
    Ok(round_to(exp_unreliability(lambda, t)?, decimals))
}

/// Builds a table for two-state components from their failure rates: the
/// first declared state gets the reliability at `t`, the second the
/// unreliability. With `decimals`, the failure probability is rounded first
/// and the success probability is its complement, so each pair still sums
/// to one.
pub fn table_from_failure_rates(
    model: &SystemModel,
    t: f64,
    decimals: Option<u32>,
) -> Result<ProbabilityTable<f64>> {
    let mut table = ProbabilityTable::default();
    for c in &model.components {
        let lambda = c
            .failure_rate
            .ok_or_else(|| Error::Domain(format!("component `{}` has no failure rate", c.id)))?;
        if c.states.len() != 2 {
            return Err(Error::Domain(format!(
                "component `{}` needs exactly two states to take a failure rate",
                c.id
            )));
        }
        let fail = exp_unreliability_rounded(lambda, t, decimals)?;
        table.insert(c.id.clone(), c.states[0].clone(), 1.0 - fail);
        table.insert(c.id.clone(), c.states[1].clone(), fail);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use num_rational::Ratio;

    /// 1 - exp(-x) by its alternating Taylor series, summed until terms
    /// vanish. Independent of the libm `exp_m1` path.
    fn series_unreliability(x: f64) -> f64 {
        let mut term = x;
        let mut sum = 0.0;
        let mut k = 1.0;
        while term.abs() > 1e-30 {
            sum += term;
            k += 1.0;
            term *= -x / k;
        }
        sum
    }

    #[test]
    fn series_oracle_values() {
        // Frozen from a 40-digit evaluation of 1 - exp(-x).
        assert!((series_unreliability(0.03) - 0.029554466451491825).abs() < 1e-17);
        assert!((series_unreliability(0.04) - 0.03921056084767679).abs() < 1e-17);
        assert!((1.0 - series_unreliability(0.02) - 0.9801986733067553).abs() < 1e-16);
    }

    #[test]
    fn unreliability_matches_series() {
        let u = exp_unreliability(0.06, 0.5).unwrap();
        assert!((u - 0.029554466451491825).abs() < 1e-15, "{u}");
        assert!((u - series_unreliability(0.03)).abs() < 1e-15);
        let u = exp_unreliability(0.08, 0.5).unwrap();
        assert!((u - 0.03921056084767679).abs() < 1e-15, "{u}");
        assert_eq!(exp_unreliability(0.0, 7.0).unwrap(), 0.0);
    }

    #[test]
    fn reliability_values() {
        let r = exp_reliability(0.06, 0.5).unwrap();
        assert!((r - 0.9704455335485082).abs() < 1e-15);
        assert_eq!(exp_reliability(0.0, 10.0).unwrap(), 1.0);
        let r = exp_reliability(0.04, 0.5).unwrap();
        assert!((r - 0.9801986733067553).abs() < 1e-15);
    }

    #[test]
    fn rounding_reproduces_percentages() {
        assert_eq!(exp_unreliability_rounded(0.06, 0.5, Some(2)).unwrap(), 0.03);
        assert_eq!(exp_unreliability_rounded(0.04, 0.5, Some(2)).unwrap(), 0.02);
        assert_eq!(exp_unreliability_rounded(0.08, 0.5, Some(2)).unwrap(), 0.04);
    }

    #[test]
    fn negative_inputs_are_domain_errors() {
        assert!(exp_unreliability(-0.1, 1.0).is_err());
        assert!(exp_unreliability(0.1, -1.0).is_err());
        assert!(exp_reliability(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn failure_rates_reproduce_table_ii() {
        let model = cases::trip_circuit_model();
        let derived = table_from_failure_rates(&model, 0.5, Some(2)).unwrap();
        let table = cases::trip_circuit_table();
        for (c, s, p) in table.iter() {
            let d = derived.get(c, s).unwrap();
            assert!((d - p).abs() < 1e-15, "{c}_{s}: {d} vs {p}");
        }
        assert!(validate_probabilities(&model, &derived).is_empty());
    }

    #[test]
    fn table_ii_is_valid() {
        let report =
            validate_probabilities(&cases::trip_circuit_model(), &cases::trip_circuit_table());
        assert!(report.is_empty(), "{report:?}");
    }

    #[test]
    fn sum_violation() {
        let model = cases::trip_circuit_model();
        let mut table = cases::trip_circuit_table();
        table.insert("CT", "O", 0.5);
        table.insert("CT", "F", 0.6);
        let report = validate_probabilities(&model, &table);
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0].kind, ViolationKind::SumMismatch { .. }));
        assert_eq!(report.violations[0].component.as_deref(), Some("CT"));
    }

    #[test]
    fn degenerate_distribution_is_legal() {
        let model = cases::trip_circuit_model();
        let mut table = cases::trip_circuit_table();
        table.insert("CT", "O", 1.0);
        table.insert("CT", "F", 0.0);
        assert!(validate_probabilities(&model, &table).is_empty());
    }

    #[test]
    fn unknown_missing_and_out_of_range() {
        let model = cases::trip_circuit_model();
        let mut table = cases::trip_circuit_table();
        table.insert("XX", "O", 0.5);
        table.insert("R", "Q", 0.0);
        table.insert("TC1", "O", 1.5);
        table.remove_component("CB2");
        table.entries.get_mut("CB1").unwrap().remove("F");
        let kinds: Vec<_> = validate_probabilities(&model, &table)
            .violations
            .into_iter()
            .map(|v| (v.severity, v.kind))
            .collect();
        assert!(kinds.contains(&(Severity::Error, ViolationKind::UnknownComponent)));
        assert!(kinds.contains(&(Severity::Error, ViolationKind::UnknownState)));
        assert!(kinds.contains(&(
            Severity::Error,
            ViolationKind::ProbabilityOutOfRange { value: "1.5".into() }
        )));
        assert!(kinds.contains(&(Severity::Error, ViolationKind::MissingEntry)));
        assert!(kinds.contains(&(Severity::Warning, ViolationKind::NoEntries)));
        assert!(kinds.iter().any(|(_, k)| matches!(k, ViolationKind::SumMismatch { .. })));
    }

    #[test]
    fn exact_rational_table() {
        let model = cases::three_event_model();
        let table = cases::three_event_uniform_table::<Ratio<i64>>();
        assert!(validate_probabilities(&model, &table).is_empty());
        let off = table.clone().with("A", "A1", Ratio::new(1, 2));
        assert!(validate_probabilities(&model, &off).has_errors());
    }
}
