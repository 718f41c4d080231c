//! Design descent: start from the largest admissible design and lower or
//! remove levels while the heuristic value of the scenarios improves.
//! Used to seed exact solvers with feasible points.

use alloc::vec::Vec;

use crate::lsh::{solve_omega_lsh, LshParams, OmegaSubmodel};
use crate::model::{FirstStageDesign, Instance, LevelSet, ScenarioAssignment, Side};

#[derive(Clone, Debug, PartialEq)]
pub struct DescentResult {
    pub design: FirstStageDesign,
    /// Aligned with the `scenarios` argument.
    pub assignments: Vec<ScenarioAssignment>,
    pub value: f64,
}

fn evaluate(
    instance: &Instance,
    design: &FirstStageDesign,
    scenarios: &[(usize, f64)],
    lsh: &LshParams,
) -> (f64, Vec<ScenarioAssignment>) {
    let mut value = design.install_cost(instance);
    let mut out = Vec::with_capacity(scenarios.len());
    for &(w, weight) in scenarios {
        let sub = OmegaSubmodel::from_design(instance, w, design, false);
        let r = solve_omega_lsh(&sub, lsh);
        value += weight * r.incumbent.expect("LSH always returns a value");
        out.push(r.solution.expect("LSH always returns a solution"));
    }
    (value, out)
}

/// Best-improvement descent over one-step level reductions, restricted to
/// the given doors.
pub fn descend_design(
    instance: &Instance,
    scenarios: &[(usize, f64)],
    strip_doors: &[usize],
    stack_doors: &[usize],
    lsh: &LshParams,
) -> DescentResult {
    let mut design = FirstStageDesign::empty(instance);
    for (side, doors) in [(Side::Strip, strip_doors), (Side::Stack, stack_doors)] {
        for &d in doors.iter().take(instance.max_doors(side)) {
            let top = instance.doors(side)[d].levels();
            if top >= 1 {
                design.side_mut(side)[d] = LevelSet::single(top);
            }
        }
    }
    let (mut value, mut assignments) = evaluate(instance, &design, scenarios, lsh);
    loop {
        let mut best: Option<(f64, FirstStageDesign, Vec<ScenarioAssignment>)> = None;
        for side in [Side::Strip, Side::Stack] {
            for d in 0..instance.door_count(side) {
                let Some(k) = design.level(side, d) else { continue };
                let mut cand = design.clone();
                cand.side_mut(side)[d] = if k > 1 { LevelSet::single(k - 1) } else { LevelSet::EMPTY };
                let (v, a) = evaluate(instance, &cand, scenarios, lsh);
                if v < value - 1e-9 * value.abs().max(1.0) && best.as_ref().is_none_or(|b| v < b.0) {
                    best = Some((v, cand, a));
                }
            }
        }
        match best {
            Some((v, d, a)) => {
                value = v;
                design = d;
                assignments = a;
            }
            None => break,
        }
    }
    DescentResult { design, assignments, value }
}
