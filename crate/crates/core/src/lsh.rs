//! Single-scenario assignment problems under fixed door capacities, and the
//! local-search heuristic that solves them.
//!
//! Construction places nodes by decreasing load on the door of least
//! marginal cost that still has room, falling back to outsourcing. The
//! improvement phase applies first-improvement shift and swap moves,
//! alternating sides until neither side improves.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::lip::{design_capacity, Coupling, FirstStage, SubmodelSpec};
use crate::model::{Dock, FirstStageDesign, Instance, ScenarioAssignment, Side, CAPACITY_TOL};
use crate::solve::SolveResult;

/// Assignment problem of one scenario with door capacities fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaSubmodel<'a> {
    pub instance: &'a Instance,
    pub scenario: usize,
    /// Nominal capacities per strip door, before disruption.
    pub strip_nominal: Vec<f64>,
    pub stack_nominal: Vec<f64>,
    /// Net capacities `(1 - D) * nominal`.
    pub strip_capacity: Vec<f64>,
    pub stack_capacity: Vec<f64>,
}

impl<'a> OmegaSubmodel<'a> {
    pub fn with_nominal(instance: &'a Instance, w: usize, strip_nominal: Vec<f64>, stack_nominal: Vec<f64>) -> Self {
        let s = instance.scenario(w);
        let net = |side: Side, nominal: &[f64]| -> Vec<f64> {
            nominal.iter().zip(s.disruption(side)).map(|(c, d)| (1.0 - d) * c).collect()
        };
        Self {
            instance,
            scenario: w,
            strip_capacity: net(Side::Strip, &strip_nominal),
            stack_capacity: net(Side::Stack, &stack_nominal),
            strip_nominal,
            stack_nominal,
        }
    }

    /// Capacities from a design. Doors without a level get their basic
    /// capacity when `basic_fallback` is set and nothing otherwise.
    pub fn from_design(instance: &'a Instance, w: usize, design: &FirstStageDesign, basic_fallback: bool) -> Self {
        let nominal = |side: Side| -> Vec<f64> {
            (0..instance.door_count(side))
                .map(|d| design_capacity(instance, design, side, d, basic_fallback))
                .collect()
        };
        Self::with_nominal(instance, w, nominal(Side::Strip), nominal(Side::Stack))
    }

    /// The linearized form of this problem.
    pub fn spec(&self) -> SubmodelSpec {
        SubmodelSpec {
            name: alloc::format!("omega_{}", self.scenario + 1),
            scenarios: vec![(self.scenario, 1.0)],
            first_stage: FirstStage::Fixed {
                strip_capacity: self.strip_nominal.clone(),
                stack_capacity: self.stack_nominal.clone(),
            },
            coupling: Coupling::Both,
        }
    }

    pub fn capacity(&self, side: Side) -> &[f64] {
        match side {
            Side::Strip => &self.strip_capacity,
            Side::Stack => &self.stack_capacity,
        }
    }

    /// Docks a node may use: eligible doors with positive capacity, then
    /// the outsourcing door.
    pub fn options(&self, side: Side, node: usize) -> Vec<Dock> {
        let cap = self.capacity(side);
        let load = self.instance.scenario(self.scenario).totals(side)[node];
        self.instance
            .eligible_doors(side, self.scenario, node)
            .iter()
            .filter(|&&d| load <= cap[d] + CAPACITY_TOL)
            .map(|&d| Dock::Door(d))
            .chain(core::iter::once(Dock::Outsourced))
            .collect()
    }

    /// `F0 (flags) + sum G x y` of a complete assignment, unweighted.
    pub fn value(&self, a: &ScenarioAssignment) -> f64 {
        let inst = self.instance;
        let s = inst.scenario(self.scenario);
        let mut v = inst.outsourcing_penalty() * a.outsourcing_flags() as f64;
        for (m, n, h) in s.flow().nonzeros() {
            let (Some(i), Some(j)) = (a.origins[m], a.destinations[n]) else { continue };
            v += inst.unit_cost(i, j) * h;
        }
        v
    }

    /// Complete, eligible, within capacity, flags consistent.
    pub fn is_feasible(&self, a: &ScenarioAssignment) -> bool {
        let s = self.instance.scenario(self.scenario);
        [Side::Strip, Side::Stack].into_iter().all(|side| {
            let docks = a.side(side);
            if docks.len() != s.nodes(side) || docks.iter().any(Option::is_none) {
                return false;
            }
            if docks.contains(&Some(Dock::Outsourced)) && !a.flag(side) {
                return false;
            }
            let mut load = vec![0.0; self.instance.door_count(side)];
            for (node, d) in docks.iter().enumerate() {
                if let Some(Dock::Door(d)) = d {
                    if !self.instance.is_eligible(side, self.scenario, node, *d) {
                        return false;
                    }
                    load[*d] += s.totals(side)[node];
                }
            }
            load.iter().zip(self.capacity(side)).all(|(l, c)| *l <= c + CAPACITY_TOL)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LshParams {
    pub restarts: usize,
    pub seed: u64,
}

impl Default for LshParams {
    fn default() -> Self {
        Self { restarts: 5, seed: 0 }
    }
}

/// Working state of one side: dock per node and residual capacity.
struct SideState {
    docks: Vec<Option<Dock>>,
    residual: Vec<f64>,
    outsourced: usize,
}

struct Search<'s, 'a> {
    sub: &'s OmegaSubmodel<'a>,
    sides: [SideState; 2],
    /// Flow rows (strip view) and columns (stack view) as sparse lists.
    partners: [Vec<Vec<(usize, f64)>>; 2],
}

impl<'s, 'a> Search<'s, 'a> {
    fn new(sub: &'s OmegaSubmodel<'a>) -> Self {
        let s = sub.instance.scenario(sub.scenario);
        let mut by_origin = vec![Vec::new(); s.origins()];
        let mut by_dest = vec![Vec::new(); s.destinations()];
        for (m, n, h) in s.flow().nonzeros() {
            by_origin[m].push((n, h));
            by_dest[n].push((m, h));
        }
        let state = |side: Side| SideState {
            docks: vec![None; s.nodes(side)],
            residual: sub.capacity(side).to_vec(),
            outsourced: 0,
        };
        Self { sub, sides: [state(Side::Strip), state(Side::Stack)], partners: [by_origin, by_dest] }
    }

    fn unit(&self, side: Side, own: Dock, other: Dock) -> f64 {
        match side {
            Side::Strip => self.sub.instance.unit_cost(own, other),
            Side::Stack => self.sub.instance.unit_cost(other, own),
        }
    }

    /// Cost of `node` sitting at `dock` against the placed partners.
    fn node_cost(&self, side: Side, node: usize, dock: Dock) -> f64 {
        let other = &self.sides[side.other() as usize].docks;
        self.partners[side as usize][node]
            .iter()
            .filter_map(|&(p, h)| other[p].map(|d| h * self.unit(side, dock, d)))
            .sum()
    }

    fn load(&self, side: Side, node: usize) -> f64 {
        self.sub.instance.scenario(self.sub.scenario).totals(side)[node]
    }

    fn fits(&self, side: Side, node: usize, dock: Dock, freed: f64) -> bool {
        match dock {
            Dock::Outsourced => true,
            Dock::Door(d) => self.load(side, node) <= self.sides[side as usize].residual[d] + freed + CAPACITY_TOL,
        }
    }

    fn place(&mut self, side: Side, node: usize, dock: Dock) {
        let load = self.load(side, node);
        let st = &mut self.sides[side as usize];
        match st.docks[node].take() {
            Some(Dock::Door(d)) => st.residual[d] += load,
            Some(Dock::Outsourced) => st.outsourced -= 1,
            None => {}
        }
        match dock {
            Dock::Door(d) => st.residual[d] -= load,
            Dock::Outsourced => st.outsourced += 1,
        }
        st.docks[node] = Some(dock);
    }

    fn construct(&mut self, side: Side, rng: Option<&mut ChaCha8Rng>) {
        let s = self.sub.instance.scenario(self.sub.scenario);
        let loads = s.totals(side);
        let mut order: Vec<usize> = (0..s.nodes(side)).collect();
        let mut rng = rng;
        if let Some(r) = rng.as_deref_mut() {
            order.shuffle(r);
        }
        order.sort_by(|a, b| loads[*b].total_cmp(&loads[*a]));
        let f0 = self.sub.instance.outsourcing_penalty();
        for node in order {
            let mut opts = self.sub.options(side, node);
            if let Some(r) = rng.as_deref_mut() {
                opts.shuffle(r);
            }
            let mut best: Option<(f64, Dock)> = None;
            for dock in opts {
                if !self.fits(side, node, dock, 0.0) {
                    continue;
                }
                let flag = if dock.is_outsourced() && self.sides[side as usize].outsourced == 0 { f0 } else { 0.0 };
                let c = self.node_cost(side, node, dock) + flag;
                if best.is_none_or(|(bc, _)| c < bc) {
                    best = Some((c, dock));
                }
            }
            let (_, dock) = best.expect("outsourcing always fits");
            self.place(side, node, dock);
        }
    }

    /// Cost change of moving `node` to `to`, flag included.
    fn shift_delta(&self, side: Side, node: usize, to: Dock) -> f64 {
        let st = &self.sides[side as usize];
        let from = st.docks[node].expect("placed");
        let f0 = self.sub.instance.outsourcing_penalty();
        let mut flag = 0.0;
        if from.is_outsourced() && !to.is_outsourced() && st.outsourced == 1 {
            flag -= f0;
        }
        if to.is_outsourced() && !from.is_outsourced() && st.outsourced == 0 {
            flag += f0;
        }
        self.node_cost(side, node, to) - self.node_cost(side, node, from) + flag
    }

    fn improve_side(&mut self, side: Side, options: &[Vec<Dock>]) -> bool {
        let n = self.sides[side as usize].docks.len();
        let mut improved = false;
        for node in 0..n {
            let from = self.sides[side as usize].docks[node].expect("placed");
            for &to in &options[node] {
                if to == from || !self.fits(side, node, to, 0.0) {
                    continue;
                }
                if self.shift_delta(side, node, to) < -improvement_tol(self) {
                    self.place(side, node, to);
                    improved = true;
                    break;
                }
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                let (da, db) = {
                    let d = &self.sides[side as usize].docks;
                    (d[a].expect("placed"), d[b].expect("placed"))
                };
                if da == db || !options[a].contains(&db) || !options[b].contains(&da) {
                    continue;
                }
                let (la, lb) = (self.load(side, a), self.load(side, b));
                let residual = &self.sides[side as usize].residual;
                let ok = |dock: Dock, incoming: f64, outgoing: f64| match dock {
                    Dock::Outsourced => true,
                    Dock::Door(d) => incoming <= residual[d] + outgoing + CAPACITY_TOL,
                };
                if !ok(db, la, lb) || !ok(da, lb, la) {
                    continue;
                }
                let delta = self.node_cost(side, a, db) - self.node_cost(side, a, da) + self.node_cost(side, b, da)
                    - self.node_cost(side, b, db);
                if delta < -improvement_tol(self) {
                    // through outsourcing first so residuals never go negative
                    self.place(side, a, Dock::Outsourced);
                    self.place(side, b, da);
                    self.place(side, a, db);
                    improved = true;
                }
            }
        }
        improved
    }

    fn assignment(&self) -> ScenarioAssignment {
        let [strip, stack] = &self.sides;
        ScenarioAssignment {
            origins: strip.docks.clone(),
            destinations: stack.docks.clone(),
            inbound_outsourcing: strip.outsourced > 0,
            outbound_outsourcing: stack.outsourced > 0,
        }
    }
}

fn improvement_tol(s: &Search<'_, '_>) -> f64 {
    1e-9 * s.sub.instance.outsourcing_penalty().max(1.0)
}

/// Local search from one start. `rng = None` is the deterministic start:
/// nodes of equal load keep index order and ties go to the lowest door.
fn run_once(sub: &OmegaSubmodel<'_>, rng: Option<&mut ChaCha8Rng>, stack_first: bool) -> ScenarioAssignment {
    let mut search = Search::new(sub);
    let s = sub.instance.scenario(sub.scenario);
    let first = if stack_first { Side::Stack } else { Side::Strip };
    let mut rng = rng;
    search.construct(first, rng.as_deref_mut());
    search.construct(first.other(), rng);
    let options: [Vec<Vec<Dock>>; 2] = [
        (0..s.origins()).map(|m| sub.options(Side::Strip, m)).collect(),
        (0..s.destinations()).map(|n| sub.options(Side::Stack, n)).collect(),
    ];
    loop {
        let a = search.improve_side(Side::Strip, &options[0]);
        let b = search.improve_side(Side::Stack, &options[1]);
        if !a && !b {
            break;
        }
    }
    search.assignment()
}

pub fn solve_omega_lsh(sub: &OmegaSubmodel<'_>, params: &LshParams) -> SolveResult<ScenarioAssignment> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best = run_once(sub, None, false);
    let mut best_value = sub.value(&best);
    for r in 0..params.restarts.saturating_sub(1) {
        let cand = run_once(sub, Some(&mut rng), r % 2 == 0);
        let v = sub.value(&cand);
        if v < best_value {
            best = cand;
            best_value = v;
        }
    }
    SolveResult::heuristic(best_value, best, params.restarts.max(1) as u64)
}
