//! Reference systems: the protection trip circuit (current transformer,
//! relay, two trip coils, two breakers) and the three-event teaching tree.

use num_traits::FromPrimitive;

use crate::model::{ComponentDef, StateLabel, SystemModel};
use crate::probability::ProbabilityTable;
use crate::reduction::ReductionDirective;
use crate::Probability;

pub fn trip_circuit_model() -> SystemModel {
    let rates = [
        ("CT", 0.06),
        ("R", 0.04),
        ("TC1", 0.08),
        ("TC2", 0.08),
        ("CB1", 0.06),
        ("CB2", 0.06),
    ];
    SystemModel::new(
        "trip-circuit",
        rates
            .into_iter()
            .map(|(id, lambda)| ComponentDef::new(id, ["O", "F"]).with_failure_rate(lambda))
            .collect(),
    )
}

/// Six-month failure probabilities, rounded to whole percent.
pub fn trip_circuit_table() -> ProbabilityTable<f64> {
    let mut table = ProbabilityTable::default();
    for (id, fail) in [
        ("CT", 0.03),
        ("R", 0.02),
        ("TC1", 0.04),
        ("TC2", 0.04),
        ("CB1", 0.03),
        ("CB2", 0.03),
    ] {
        table.insert(id, "O", 1.0 - fail);
        table.insert(id, "F", fail);
    }
    table
}

fn ev(component: &str, state: &str) -> StateLabel {
    StateLabel::new(component, state)
}

/// The five complete cylinders of the trip circuit.
pub fn trip_circuit_directives() -> Vec<ReductionDirective> {
    vec![
        ReductionDirective::truncate(vec![ev("CT", "F")]),
        ReductionDirective::truncate(vec![ev("CT", "O"), ev("R", "F")]),
        ReductionDirective::truncate(vec![
            ev("CT", "O"),
            ev("R", "O"),
            ev("TC1", "F"),
            ev("TC2", "F"),
        ]),
        ReductionDirective::new(
            vec![ev("CT", "O"), ev("R", "O"), ev("TC1", "F"), ev("TC2", "O")],
            vec!["CB2".into()],
        ),
        ReductionDirective::new(
            vec![ev("CT", "O"), ev("R", "O"), ev("TC1", "O"), ev("TC2", "F")],
            vec!["CB1".into()],
        ),
    ]
}

/// Path index sets over the reduced 11-path trip circuit.
pub mod trip_circuit_partitions {
    pub const BOTH_CB_FAIL: &[usize] = &[3, 5, 7, 8, 9, 10];
    pub const BOTH_CB_OPERATE: &[usize] = &[0];
    pub const CB1_FAILS: &[usize] = &[2, 3, 5, 6, 7, 8, 9, 10];
    pub const CB1_OPERATES: &[usize] = &[0, 1, 4];
    pub const CB2_FAILS: &[usize] = &[1, 3, 4, 5, 7, 8, 9, 10];
    pub const CB2_OPERATES: &[usize] = &[0, 2, 6];
}

/// Path index sets over the 31-path tree with a duplicated current
/// transformer.
pub mod redundant_partitions {
    pub const BOTH_CB_FAIL: &[usize] = &[3, 5, 7, 8, 9, 13, 15, 17, 18, 19, 23, 25, 27, 28, 29, 30];
    pub const BOTH_CB_OPERATE: &[usize] = &[0, 10, 20];
    pub const CB1_FAILS: &[usize] = &[
        2, 3, 5, 6, 7, 8, 9, 12, 13, 15, 16, 17, 18, 19, 22, 23, 25, 26, 27, 28, 29, 30,
    ];
    pub const CB1_OPERATES: &[usize] = &[0, 1, 4, 10, 11, 14, 20, 21, 24];
    pub const CB2_FAILS: &[usize] = &[
        1, 3, 4, 5, 7, 8, 9, 11, 13, 14, 15, 17, 18, 19, 21, 23, 24, 25, 27, 28, 29, 30,
    ];
    pub const CB2_OPERATES: &[usize] = &[0, 2, 6, 10, 12, 16, 20, 22, 26];
}

/// Three events: A with three outcomes, B and C with two.
pub fn three_event_model() -> SystemModel {
    SystemModel::new(
        "three-events",
        vec![
            ComponentDef::new("A", ["1", "2", "3"]),
            ComponentDef::new("B", ["1", "2"]),
            ComponentDef::new("C", ["1", "2"]),
        ],
    )
}

/// Uniform outcome probabilities for [`three_event_model`], in any scalar type.
pub fn three_event_uniform_table<T: Probability + FromPrimitive>() -> ProbabilityTable<T> {
    let third = T::one() / T::from_u8(3).expect("3 is representable");
    let half = T::one() / T::from_u8(2).expect("2 is representable");
    let mut table = ProbabilityTable::new(T::zero());
    for s in ["1", "2", "3"] {
        table.insert("A", s, third.clone());
    }
    for c in ["B", "C"] {
        for s in ["1", "2"] {
            table.insert(c, s, half.clone());
        }
    }
    table
}
