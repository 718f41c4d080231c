//! Best-first LP-based branch-and-bound for [`GenericMilp`] models.
//!
//! Linear relaxations are solved with a dual simplex; children re-solve
//! from the parent's factorization after fixing the branching column.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use cddp_core::milp::{GenericMilp, Sense, VarKind};
use cddp_core::solve::SolveResult;
use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BbParams {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    /// Starting incumbent; ignored unless it satisfies every row.
    pub initial: Option<Vec<f64>>,
}

pub const INTEGRALITY_TOL: f64 = 1e-6;
const FEAS_TOL: f64 = 1e-6;

struct Node {
    bound: f64,
    depth: usize,
    seq: u64,
    /// Depth-first order until the first incumbent, best-first after.
    dive: bool,
    lp: Rc<minilp::Solution>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // max-heap: smallest bound first, then deepest, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        let by_bound = other.bound.total_cmp(&self.bound);
        let by_depth = self.depth.cmp(&other.depth);
        let first = if self.dive { by_depth.then(by_bound) } else { by_bound.then(by_depth) };
        first.then(other.seq.cmp(&self.seq))
    }
}

fn lp_of(milp: &GenericMilp) -> (Problem, Vec<Variable>) {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Variable> = milp.vars().iter().map(|v| p.add_var(v.objective, (v.lower, v.upper))).collect();
    for r in milp.rows() {
        let mut e = LinearExpr::empty();
        for &(j, a) in &r.coeffs {
            e.add(vars[j], a);
        }
        let op = match r.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Ge => ComparisonOp::Ge,
            Sense::Eq => ComparisonOp::Eq,
        };
        p.add_constraint(e, op, r.rhs);
    }
    (p, vars)
}

/// Relative pruning slack; none while there is no incumbent.
fn gap_tol(v: f64) -> f64 {
    if v.is_finite() {
        1e-9 * v.abs().max(1.0)
    } else {
        0.0
    }
}

/// Branching column: the most fractional binary, ties to the largest
/// absolute objective coefficient. `None` when the point is integral.
fn branch_var(milp: &GenericMilp, x: &[f64]) -> Option<usize> {
    let mut best: Option<(f64, f64, usize)> = None;
    for (j, v) in milp.vars().iter().enumerate() {
        if v.kind != VarKind::Binary {
            continue;
        }
        let frac = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
        if frac <= INTEGRALITY_TOL {
            continue;
        }
        let key = (frac, v.objective.abs());
        if best.is_none_or(|(f, o, _)| key.0 > f + 1e-12 || ((key.0 - f).abs() <= 1e-12 && key.1 > o)) {
            best = Some((key.0, key.1, j));
        }
    }
    best.map(|b| b.2)
}

/// Rounds binaries of an integral LP point; the rounded point is kept only
/// if it still satisfies the rows.
fn polish(milp: &GenericMilp, x: &[f64]) -> Option<(f64, Vec<f64>)> {
    let mut y = x.to_vec();
    for (j, v) in milp.vars().iter().enumerate() {
        if v.kind == VarKind::Binary {
            y[j] = y[j].round();
        }
    }
    milp.is_feasible(&y, FEAS_TOL).then(|| (milp.objective_value(&y), y))
}

pub fn solve_bb(milp: &GenericMilp, params: &BbParams) -> SolveResult<Vec<f64>> {
    let start = Instant::now();
    let finish = |mut r: SolveResult<Vec<f64>>| {
        r.wall_time = start.elapsed().as_secs_f64();
        r
    };
    let offset = milp.objective_offset;
    let mut incumbent: Option<(f64, Vec<f64>)> = params
        .initial
        .as_ref()
        .filter(|x| milp.is_feasible(x, FEAS_TOL))
        .map(|x| (milp.objective_value(x), x.clone()));

    if milp.vars().is_empty() {
        let ok = milp.rows().is_empty();
        return finish(if ok { SolveResult::optimal(offset, Vec::new(), 0) } else { SolveResult::infeasible(0) });
    }
    let (problem, vars) = lp_of(milp);
    let root = match problem.solve() {
        Ok(s) => s,
        Err(_) => return finish(SolveResult::infeasible(1)),
    };
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut dive = incumbent.is_none();
    heap.push(Node { bound: root.objective() + offset, depth: 0, seq, dive, lp: Rc::new(root) });
    let mut nodes = 0u64;
    let mut limited = false;

    loop {
        if dive && incumbent.is_some() {
            dive = false;
            let open = std::mem::take(&mut heap).into_vec();
            heap = open.into_iter().map(|n| Node { dive: false, ..n }).collect();
        }
        let Some(node) = heap.peek() else { break };
        let cutoff = incumbent.as_ref().map_or(f64::INFINITY, |(v, _)| *v);
        if node.bound >= cutoff - gap_tol(cutoff) {
            if !dive {
                // best-first: every open node is at least this bad
                heap.clear();
                break;
            }
            heap.pop();
            continue;
        }
        if params.time_limit.is_some_and(|t| start.elapsed() >= t) || params.node_limit.is_some_and(|n| nodes >= n)
        {
            limited = true;
            break;
        }
        let node = heap.pop().expect("peeked");
        nodes += 1;
        let x: Vec<f64> = vars.iter().map(|v| *node.lp.var_value(*v)).collect();
        match branch_var(milp, &x) {
            None => {
                let cand = polish(milp, &x).unwrap_or((node.bound, x));
                if cand.0 < cutoff {
                    incumbent = Some(cand);
                }
            }
            Some(j) => {
                for value in [0.0, 1.0] {
                    let lp = (*node.lp).clone();
                    if let Ok(child) = lp.fix_var(vars[j], value) {
                        let bound = (child.objective() + offset).max(node.bound);
                        if bound < cutoff - gap_tol(cutoff) {
                            seq += 1;
                            heap.push(Node { bound, depth: node.depth + 1, seq, dive, lp: Rc::new(child) });
                        }
                    }
                }
            }
        }
    }

    let open_min = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let result = if limited {
        // children never undercut their parent, so the open nodes cover
        // every unexplored point
        let bound = open_min;
        SolveResult::limited(incumbent, bound.is_finite().then_some(bound), nodes)
    } else {
        match incumbent {
            Some((v, x)) => SolveResult::optimal(v, x, nodes),
            None => SolveResult::infeasible(nodes),
        }
    };
    finish(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cddp_core::solve::SolveStatus;

    fn knapsack() -> GenericMilp {
        // max 5a + 4b + 3c  s.t. 2a + 3b + c <= 4 ; binaries
        let mut m = GenericMilp::new("k");
        let a = m.add_var("a", VarKind::Binary, (0.0, 1.0), -5.0, None);
        let b = m.add_var("b", VarKind::Binary, (0.0, 1.0), -4.0, None);
        let c = m.add_var("c", VarKind::Binary, (0.0, 1.0), -3.0, None);
        m.add_row("cap", [(a, 2.0), (b, 3.0), (c, 1.0)], Sense::Le, 4.0);
        m
    }

    #[test]
    fn small_knapsack() {
        let r = solve_bb(&knapsack(), &BbParams::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.incumbent.unwrap() + 8.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_binaries_give_the_unique_point() {
        let mut m = knapsack();
        for v in m.vars_mut() {
            v.lower = 1.0;
            v.upper = 1.0;
        }
        let r = solve_bb(&m, &BbParams::default());
        assert_eq!(r.status, SolveStatus::Infeasible);
        let mut m = knapsack();
        m.vars_mut()[1].upper = 0.0;
        m.vars_mut()[0].lower = 1.0;
        m.vars_mut()[2].lower = 1.0;
        let r = solve_bb(&m, &BbParams::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.solution.unwrap(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn forced_two_levels_is_infeasible() {
        let mut m = GenericMilp::new("clique");
        let a = m.add_var("a", VarKind::Binary, (1.0, 1.0), 1.0, None);
        let b = m.add_var("b", VarKind::Binary, (1.0, 1.0), 1.0, None);
        m.add_row("one", [(a, 1.0), (b, 1.0)], Sense::Le, 1.0);
        assert_eq!(solve_bb(&m, &BbParams::default()).status, SolveStatus::Infeasible);
    }

    #[test]
    fn node_limit_keeps_valid_bound() {
        let r = solve_bb(&knapsack(), &BbParams { node_limit: Some(1), ..Default::default() });
        assert!(r.bound.unwrap() <= -8.0 + 1e-9);
    }
}
