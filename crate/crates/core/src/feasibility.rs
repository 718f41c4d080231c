use alloc::vec::Vec;

use crate::model::{Dock, FirstStageDesign, Instance, ScenarioAssignment, Side, CAPACITY_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    /// More than one level on a door.
    Clique,
    /// More installed doors than the side's upper bound.
    Cover,
    Capacity,
    /// A node without a dock, or a scenario without an assignment.
    Assignment,
    /// An outsourced node while the side's flag is down.
    OutsourcingFlag,
    /// Index out of range, ineligible door, or mismatched shapes.
    Domain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Entity {
    Door { side: Side, door: usize },
    Node { side: Side, node: usize },
    Side(Side),
    Scenario,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Violation {
    pub family: Family,
    /// `None` for first-stage rows.
    pub scenario: Option<usize>,
    pub entity: Entity,
    /// Amount by which the row is exceeded; 1 for logical violations.
    pub excess: f64,
}

/// Every violated constraint of a candidate solution. The list is empty
/// exactly when the solution is feasible.
pub fn check_feasibility(
    instance: &Instance,
    design: &FirstStageDesign,
    assignments: &[ScenarioAssignment],
) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |family, scenario, entity, excess| out.push(Violation { family, scenario, entity, excess });

    for side in [Side::Strip, Side::Stack] {
        let sets = design.side(side);
        if sets.len() != instance.door_count(side) {
            push(Family::Domain, None, Entity::Side(side), 1.0);
            continue;
        }
        for (door, set) in sets.iter().enumerate() {
            if set.count() > 1 {
                push(Family::Clique, None, Entity::Door { side, door }, (set.count() - 1) as f64);
            }
            if set.iter().any(|k| k > instance.doors(side)[door].levels()) {
                push(Family::Domain, None, Entity::Door { side, door }, 1.0);
            }
        }
        let installed = design.installed_count(side);
        if installed > instance.max_doors(side) {
            push(Family::Cover, None, Entity::Side(side), (installed - instance.max_doors(side)) as f64);
        }
    }
    let design_ok = design.strip.len() == instance.door_count(Side::Strip)
        && design.stack.len() == instance.door_count(Side::Stack);

    for w in 0..instance.scenarios().len() {
        let Some(a) = assignments.get(w) else {
            push(Family::Assignment, Some(w), Entity::Scenario, 1.0);
            continue;
        };
        let s = instance.scenario(w);
        for side in [Side::Strip, Side::Stack] {
            let docks = a.side(side);
            if docks.len() != s.nodes(side) {
                push(Family::Domain, Some(w), Entity::Side(side), 1.0);
                continue;
            }
            let mut load = alloc::vec![0.0; instance.door_count(side)];
            let mut outsourced = false;
            for (node, dock) in docks.iter().enumerate() {
                match dock {
                    None => push(Family::Assignment, Some(w), Entity::Node { side, node }, 1.0),
                    Some(Dock::Outsourced) => outsourced = true,
                    Some(Dock::Door(d)) => {
                        if *d >= instance.door_count(side) || !instance.is_eligible(side, w, node, *d) {
                            push(Family::Domain, Some(w), Entity::Node { side, node }, 1.0);
                        }
                        if let Some(l) = load.get_mut(*d) {
                            *l += s.totals(side)[node];
                        }
                    }
                }
            }
            if outsourced && !a.flag(side) {
                push(Family::OutsourcingFlag, Some(w), Entity::Side(side), 1.0);
            }
            if design_ok {
                for (door, &l) in load.iter().enumerate() {
                    let cap = (1.0 - s.disruption(side)[door]) * design.nominal_capacity(instance, side, door);
                    if l > cap + CAPACITY_TOL {
                        push(Family::Capacity, Some(w), Entity::Door { side, door }, l - cap);
                    }
                }
            }
        }
    }
    if assignments.len() > instance.scenarios().len() {
        push(Family::Domain, Some(instance.scenarios().len()), Entity::Scenario, 1.0);
    }
    out
}
