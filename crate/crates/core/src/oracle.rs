//! Exhaustive enumeration of designs and assignments, for verification on
//! tiny instances.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::lsh::OmegaSubmodel;
use crate::model::{Dock, FirstStageDesign, Instance, LevelSet, ScenarioAssignment, Side, Solution};
use crate::solve::SolveResult;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleLimits {
    /// Largest number of enumerated leaves accepted.
    pub max_leaves: f64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self { max_leaves: 1e8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Error)]
pub enum OracleError {
    #[error("search space of about {estimate:.3e} leaves exceeds the limit of {limit:.3e}")]
    TooLarge { estimate: f64, limit: f64 },
}

/// Leaves the enumeration visits: designs times the summed per-scenario
/// assignment counts.
pub fn search_space(instance: &Instance) -> f64 {
    let designs: f64 = [Side::Strip, Side::Stack]
        .into_iter()
        .flat_map(|side| instance.doors(side).iter())
        .map(|d| (d.levels() + 1) as f64)
        .product();
    let per_design: f64 = (0..instance.scenarios().len())
        .map(|w| {
            let s = instance.scenario(w);
            [Side::Strip, Side::Stack]
                .into_iter()
                .flat_map(|side| (0..s.nodes(side)).map(move |node| (side, node)))
                .map(|(side, node)| (instance.eligible_doors(side, w, node).len() + 1) as f64)
                .product::<f64>()
        })
        .sum();
    designs * per_design
}

/// Advances a mixed-radix counter; false once it wraps to all zeros.
fn next(counter: &mut [usize], radix: &[usize]) -> bool {
    for (c, &r) in counter.iter_mut().zip(radix) {
        *c += 1;
        if *c < r {
            return true;
        }
        *c = 0;
    }
    false
}

fn best_assignment(sub: &OmegaSubmodel<'_>) -> (f64, ScenarioAssignment) {
    let inst = sub.instance;
    let s = inst.scenario(sub.scenario);
    let options: Vec<(Side, Vec<Dock>)> = [Side::Strip, Side::Stack]
        .into_iter()
        .flat_map(|side| {
            (0..s.nodes(side)).map(move |node| {
                let opts = inst
                    .eligible_doors(side, sub.scenario, node)
                    .iter()
                    .map(|&d| Dock::Door(d))
                    .chain(core::iter::once(Dock::Outsourced))
                    .collect();
                (side, opts)
            })
        })
        .collect();
    let radix: Vec<usize> = options.iter().map(|(_, o)| o.len()).collect();
    let mut counter = vec![0; options.len()];
    let mut best: Option<(f64, ScenarioAssignment)> = None;
    loop {
        let docks: Vec<Dock> = counter.iter().zip(&options).map(|(&c, (_, o))| o[c]).collect();
        let (origins, destinations) = docks.split_at(s.origins());
        let a = ScenarioAssignment::canonical(origins.to_vec(), destinations.to_vec());
        if sub.is_feasible(&a) {
            let v = sub.value(&a);
            if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                best = Some((v, a));
            }
        }
        if !next(&mut counter, &radix) {
            break;
        }
    }
    best.expect("all-outsourced assignment is always feasible")
}

/// Exact optimum by enumeration of every design (no level or one level per
/// door, cover rows respected) and every assignment of every scenario.
pub fn brute_force_oracle(instance: &Instance, limits: &OracleLimits) -> Result<SolveResult<Solution>, OracleError> {
    let estimate = search_space(instance);
    if estimate > limits.max_leaves {
        return Err(OracleError::TooLarge { estimate, limit: limits.max_leaves });
    }
    let doors: Vec<(Side, usize)> = [Side::Strip, Side::Stack]
        .into_iter()
        .flat_map(|side| (0..instance.door_count(side)).map(move |d| (side, d)))
        .collect();
    let radix: Vec<usize> = doors.iter().map(|&(side, d)| instance.doors(side)[d].levels() + 1).collect();
    let mut counter = vec![0; doors.len()];
    let mut best: Option<(f64, Solution)> = None;
    let mut leaves = 0u64;
    loop {
        let mut design = FirstStageDesign::empty(instance);
        for (&(side, d), &k) in doors.iter().zip(&counter) {
            if k > 0 {
                design.side_mut(side)[d] = LevelSet::single(k);
            }
        }
        let cover_ok = [Side::Strip, Side::Stack]
            .into_iter()
            .all(|side| design.installed_count(side) <= instance.max_doors(side));
        if cover_ok {
            let mut total = design.install_cost(instance);
            let mut assignments = Vec::with_capacity(instance.scenarios().len());
            for w in 0..instance.scenarios().len() {
                let sub = OmegaSubmodel::from_design(instance, w, &design, false);
                let (v, a) = best_assignment(&sub);
                total += instance.scenario(w).weight() * v;
                assignments.push(a);
                leaves += 1;
            }
            if best.as_ref().is_none_or(|(bv, _)| total < *bv) {
                best = Some((total, Solution { design, assignments }));
            }
        }
        if !next(&mut counter, &radix) {
            break;
        }
    }
    let (value, sol) = best.expect("the empty design is always enumerated");
    Ok(SolveResult::optimal(value, sol, leaves))
}
