//! Combinatorial branch-and-bound on the quadratic model.
//!
//! The outer search fixes one door at a time (no level, or one of its
//! installable levels). Completed designs are scored by solving every
//! scenario's assignment problem with an inner branch-and-bound whose bound
//! prices each flow at its cheapest still-reachable dock pair.

use alloc::vec;
use alloc::vec::Vec;

use crate::lsh::OmegaSubmodel;
use crate::model::{Dock, FirstStageDesign, Instance, LevelSet, ScenarioAssignment, Side, Solution, CAPACITY_TOL};
use crate::solve::{SolveResult, SolveStatus};

/// Relative pruning slack; none while no incumbent exists.
fn prune_tol(best: f64) -> f64 {
    if best.is_finite() {
        1e-9 * best.abs().max(1.0)
    } else {
        0.0
    }
}

struct Cdap<'s, 'a> {
    sub: &'s OmegaSubmodel<'a>,
    order: Vec<(Side, usize)>,
    opts: [Vec<Vec<Dock>>; 2],
    flows: Vec<(usize, usize, f64)>,
    pair_min: Vec<f64>,
    docks: [Vec<Option<Dock>>; 2],
    residual: [Vec<f64>; 2],
    outsourced: [usize; 2],
    best: f64,
    best_sol: Option<ScenarioAssignment>,
    nodes: u64,
    limit: u64,
    aborted: bool,
}

impl<'s, 'a> Cdap<'s, 'a> {
    fn new(sub: &'s OmegaSubmodel<'a>, cutoff: f64, limit: u64) -> Self {
        let s = sub.instance.scenario(sub.scenario);
        let opts = [
            (0..s.origins()).map(|m| sub.options(Side::Strip, m)).collect::<Vec<_>>(),
            (0..s.destinations()).map(|n| sub.options(Side::Stack, n)).collect::<Vec<_>>(),
        ];
        let flows: Vec<(usize, usize, f64)> = s.flow().nonzeros().collect();
        let pair_min = flows
            .iter()
            .map(|&(m, n, _)| {
                opts[0][m]
                    .iter()
                    .flat_map(|&i| opts[1][n].iter().map(move |&j| (i, j)))
                    .map(|(i, j)| sub.instance.unit_cost(i, j))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        // heavy nodes first, sides interleaved
        let rank = |side: Side| {
            let loads = s.totals(side);
            let mut idx: Vec<usize> = (0..s.nodes(side)).collect();
            idx.sort_by(|a, b| loads[*b].total_cmp(&loads[*a]));
            idx
        };
        let (ro, rd) = (rank(Side::Strip), rank(Side::Stack));
        let mut order = Vec::with_capacity(ro.len() + rd.len());
        for k in 0..ro.len().max(rd.len()) {
            if let Some(&m) = ro.get(k) {
                order.push((Side::Strip, m));
            }
            if let Some(&n) = rd.get(k) {
                order.push((Side::Stack, n));
            }
        }
        Self {
            sub,
            order,
            opts,
            flows,
            pair_min,
            docks: [vec![None; s.origins()], vec![None; s.destinations()]],
            residual: [sub.strip_capacity.clone(), sub.stack_capacity.clone()],
            outsourced: [0, 0],
            best: cutoff,
            best_sol: None,
            nodes: 0,
            limit,
            aborted: false,
        }
    }

    fn bound(&self) -> f64 {
        let inst = self.sub.instance;
        let f0 = inst.outsourcing_penalty();
        let mut b = f0 * (usize::from(self.outsourced[0] > 0) + usize::from(self.outsourced[1] > 0)) as f64;
        for (k, &(m, n, h)) in self.flows.iter().enumerate() {
            let unit = match (self.docks[0][m], self.docks[1][n]) {
                (Some(i), Some(j)) => inst.unit_cost(i, j),
                (Some(i), None) => self.opts[1][n].iter().map(|&j| inst.unit_cost(i, j)).fold(f64::INFINITY, f64::min),
                (None, Some(j)) => self.opts[0][m].iter().map(|&i| inst.unit_cost(i, j)).fold(f64::INFINITY, f64::min),
                (None, None) => self.pair_min[k],
            };
            b += h * unit;
        }
        b
    }

    fn load(&self, side: Side, node: usize) -> f64 {
        self.sub.instance.scenario(self.sub.scenario).totals(side)[node]
    }

    fn set(&mut self, side: Side, node: usize, dock: Option<Dock>) {
        let load = self.load(side, node);
        let s = side as usize;
        match self.docks[s][node] {
            Some(Dock::Door(d)) => self.residual[s][d] += load,
            Some(Dock::Outsourced) => self.outsourced[s] -= 1,
            None => {}
        }
        match dock {
            Some(Dock::Door(d)) => self.residual[s][d] -= load,
            Some(Dock::Outsourced) => self.outsourced[s] += 1,
            None => {}
        }
        self.docks[s][node] = dock;
    }

    fn dfs(&mut self, depth: usize) {
        self.nodes += 1;
        if self.nodes > self.limit {
            self.aborted = true;
            return;
        }
        let b = self.bound();
        if b >= self.best - prune_tol(self.best) {
            return;
        }
        if depth == self.order.len() {
            self.best = b;
            self.best_sol = Some(ScenarioAssignment {
                origins: self.docks[0].clone(),
                destinations: self.docks[1].clone(),
                inbound_outsourcing: self.outsourced[0] > 0,
                outbound_outsourcing: self.outsourced[1] > 0,
            });
            return;
        }
        let (side, node) = self.order[depth];
        let load = self.load(side, node);
        let mut children: Vec<(f64, Dock)> = Vec::new();
        for k in 0..self.opts[side as usize][node].len() {
            let dock = self.opts[side as usize][node][k];
            if let Dock::Door(d) = dock {
                if load > self.residual[side as usize][d] + CAPACITY_TOL {
                    continue;
                }
            }
            self.set(side, node, Some(dock));
            children.push((self.bound(), dock));
            self.set(side, node, None);
        }
        children.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (cb, dock) in children {
            if cb >= self.best - prune_tol(self.best) || self.aborted {
                break;
            }
            self.set(side, node, Some(dock));
            self.dfs(depth + 1);
            self.set(side, node, None);
        }
    }
}

/// Exact assignment problem of one scenario. Only solutions strictly below
/// `cutoff` are sought; when none exists the status is `Infeasible` and the
/// bound is the cutoff.
pub fn solve_omega_exact(sub: &OmegaSubmodel<'_>, cutoff: Option<f64>, node_limit: u64) -> SolveResult<ScenarioAssignment> {
    let cut = cutoff.unwrap_or(f64::INFINITY);
    let mut search = Cdap::new(sub, cut, node_limit);
    let root = search.bound();
    search.dfs(0);
    let nodes = search.nodes;
    if search.aborted {
        let best = search.best_sol.map(|s| (search.best, s));
        return SolveResult::limited(best, Some(root), nodes);
    }
    match search.best_sol {
        Some(s) => SolveResult::optimal(search.best, s, nodes),
        None => {
            let mut r = SolveResult::infeasible(nodes);
            r.bound = cutoff;
            r
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BqParams {
    /// Node budget shared by the design search and the inner searches.
    pub node_limit: u64,
}

impl Default for BqParams {
    fn default() -> Self {
        Self { node_limit: 5_000_000 }
    }
}

/// Door visited at each depth of the design search.
fn door_order(instance: &Instance) -> Vec<(Side, usize)> {
    let mut v: Vec<(Side, usize)> = (0..instance.door_count(Side::Strip)).map(|d| (Side::Strip, d)).collect();
    v.extend((0..instance.door_count(Side::Stack)).map(|d| (Side::Stack, d)));
    v
}

struct Bq<'a> {
    instance: &'a Instance,
    doors: Vec<(Side, usize)>,
    design: FirstStageDesign,
    installed: [usize; 2],
    install_cost: f64,
    /// Per-scenario bound valid for every design: all doors at top level.
    scenario_floor: Vec<f64>,
    floor_total: f64,
    best: f64,
    best_sol: Option<Solution>,
    nodes: u64,
    limit: u64,
    aborted: bool,
}

impl<'a> Bq<'a> {
    fn tol(&self) -> f64 {
        prune_tol(self.best)
    }

    fn leaf(&mut self) {
        let inst = self.instance;
        let weights: Vec<f64> = inst.scenarios().iter().map(|s| s.weight()).collect();
        let mut spent = self.install_cost;
        let mut rest = self.floor_total;
        let mut assignments = Vec::with_capacity(weights.len());
        for (w, &weight) in weights.iter().enumerate() {
            rest -= weight * self.scenario_floor[w];
            let cutoff = (self.best - spent - rest) / weight;
            let sub = OmegaSubmodel::from_design(inst, w, &self.design, false);
            let budget = self.limit.saturating_sub(self.nodes);
            let r = solve_omega_exact(&sub, Some(cutoff), budget);
            self.nodes += r.nodes;
            match r.status {
                SolveStatus::Optimal => {
                    spent += weight * r.incumbent.expect("optimal has a value");
                    assignments.push(r.solution.expect("optimal has a solution"));
                }
                SolveStatus::Infeasible => return,
                _ => {
                    self.aborted = true;
                    return;
                }
            }
        }
        if spent < self.best - self.tol() {
            self.best = spent;
            self.best_sol = Some(Solution { design: self.design.clone(), assignments });
        }
    }

    fn dfs(&mut self, depth: usize) {
        self.nodes += 1;
        if self.nodes > self.limit {
            self.aborted = true;
        }
        if self.aborted || self.install_cost + self.floor_total >= self.best - self.tol() {
            return;
        }
        if depth == self.doors.len() {
            self.leaf();
            return;
        }
        let (side, door) = self.doors[depth];
        let spec = &self.instance.doors(side)[door];
        let levels = spec.levels();
        // no level first, then cheapest levels first
        self.dfs(depth + 1);
        if self.installed[side as usize] >= self.instance.max_doors(side) {
            return;
        }
        for k in 1..=levels {
            let cost = self.instance.doors(side)[door].install_costs[k];
            self.design.side_mut(side)[door] = LevelSet::single(k);
            self.installed[side as usize] += 1;
            self.install_cost += cost;
            self.dfs(depth + 1);
            self.install_cost -= cost;
            self.installed[side as usize] -= 1;
            self.design.side_mut(side)[door] = LevelSet::EMPTY;
            if self.aborted {
                return;
            }
        }
    }
}

/// Exact optimum of the quadratic model within a node budget.
pub fn solve_bq(instance: &Instance, params: &BqParams) -> SolveResult<Solution> {
    let top = FirstStageDesign {
        strip: instance.doors(Side::Strip).iter().map(|d| LevelSet::single(d.levels())).collect(),
        stack: instance.doors(Side::Stack).iter().map(|d| LevelSet::single(d.levels())).collect(),
    };
    let mut nodes = 0;
    let mut floor = Vec::with_capacity(instance.scenarios().len());
    for w in 0..instance.scenarios().len() {
        let sub = OmegaSubmodel::from_design(instance, w, &top, false);
        let r = solve_omega_exact(&sub, None, params.node_limit.saturating_sub(nodes));
        nodes += r.nodes;
        match (r.status, r.bound) {
            (SolveStatus::Optimal, Some(b)) => floor.push(b),
            (_, Some(b)) => floor.push(b),
            _ => floor.push(0.0),
        }
    }
    let floor_total: f64 = floor.iter().zip(instance.scenarios()).map(|(f, s)| f * s.weight()).sum();
    let mut bq = Bq {
        instance,
        doors: door_order(instance),
        design: FirstStageDesign::empty(instance),
        installed: [0, 0],
        install_cost: 0.0,
        scenario_floor: floor,
        floor_total,
        best: f64::INFINITY,
        best_sol: None,
        nodes,
        limit: params.node_limit,
        aborted: nodes >= params.node_limit,
    };
    if !bq.aborted {
        bq.dfs(0);
    }
    let nodes = bq.nodes;
    match (bq.aborted, bq.best_sol) {
        (false, Some(sol)) => SolveResult::optimal(bq.best, sol, nodes),
        (false, None) => SolveResult::infeasible(nodes),
        (true, best) => SolveResult::limited(best.map(|s| (bq.best, s)), Some(floor_total), nodes),
    }
}
