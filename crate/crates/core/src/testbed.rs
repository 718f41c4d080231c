//! Seeded benchmark generator: basic scenario cluster (BSC) instances and
//! their merge into larger multi-family instances.
//!
//! All sampling goes through `ChaCha8Rng` seeded from a `u64`.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::error::ModelError;
use crate::model::{default_outsourcing_penalty, DoorSpec, FlowMatrix, Instance, InstanceData, Scenario};

#[derive(Clone, Debug, PartialEq)]
pub struct BscSpec {
    /// |M| = |N|.
    pub n_nodes: usize,
    /// |I| = |J|.
    pub n_doors: usize,
    /// Slackness percentages, one scenario each.
    pub slack_set: Vec<f64>,
    pub density: f64,
    pub flow_range: (u32, u32),
    /// Installable levels per door, |K|.
    pub levels: usize,
    /// Installation cost per unit of capacity.
    pub cost_factor: f64,
    /// Ī - |I| and J̄ - |J|.
    pub door_bound_offset: usize,
    /// Outsourcing penalty; the default formula is used when `None`.
    pub outsourcing_penalty: Option<f64>,
    pub seed: u64,
}

impl BscSpec {
    pub fn new(n_nodes: usize, n_doors: usize, seed: u64) -> Self {
        Self {
            n_nodes,
            n_doors,
            slack_set: vec![5.0, 10.0, 15.0, 20.0, 30.0],
            density: 0.25,
            flow_range: (10, 50),
            levels: 5,
            cost_factor: 1.0,
            door_bound_offset: 1,
            outsourcing_penalty: None,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum TestbedError {
    #[error("slack set is empty")]
    EmptySlackSet,
    #[error("density {0} outside (0, 1]")]
    Density(f64),
    #[error("flow range low {0} exceeds high {1}")]
    FlowRange(u32, u32),
    #[error("node and door counts and the level count must be at least 1")]
    Size,
    #[error("no member instances to merge")]
    NoMembers,
    #[error("member {member} has {found} capacity levels, expected {expected}")]
    LevelMismatch { member: usize, expected: usize, found: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Positions of the nonzero flow entries: `round(density * M * N)` cells;
/// when that many cells allow it, every row and column gets one first.
fn flow_pattern(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> Vec<(usize, usize)> {
    let cells = rows * cols;
    let target = (libm::round(density * cells as f64) as usize).min(cells);
    let mut taken = vec![false; cells];
    let mut out = Vec::with_capacity(target);
    if target >= rows.max(cols) {
        let mut col_perm: Vec<usize> = (0..cols).collect();
        col_perm.shuffle(rng);
        let mut row_perm: Vec<usize> = (0..rows).collect();
        row_perm.shuffle(rng);
        for k in 0..rows.max(cols) {
            let (m, n) = (row_perm[k % rows], col_perm[k % cols]);
            if !taken[m * cols + n] {
                taken[m * cols + n] = true;
                out.push((m, n));
            }
        }
    }
    let mut rest: Vec<usize> = (0..cells).filter(|&c| !taken[c]).collect();
    rest.shuffle(rng);
    let missing = target.saturating_sub(out.len());
    out.extend(rest.into_iter().take(missing).map(|c| (c / cols, c % cols)));
    out.sort_unstable();
    out
}

/// Symmetric distance pattern `E_ij = 8 + |i - j|`, clipped to
/// `[8, 8 + |I| - 1]`.
pub fn distance_matrix(strip: usize, stack: usize) -> Vec<f64> {
    let top = 8 + strip.saturating_sub(1);
    let mut e = Vec::with_capacity(strip * stack);
    for i in 0..strip {
        for j in 0..stack {
            e.push((8 + i.abs_diff(j)).clamp(8, top.max(8)) as f64);
        }
    }
    e
}

fn ceil(x: f64) -> f64 {
    libm::ceil(x - 1e-9)
}

/// Levels 1..=K at `base * (0.6 + 0.2 k)`, rounded up; level 0 copies
/// level 1. Costs are `cost_factor * capacity`, except level 0 which is
/// filled in once the penalty is known.
fn ladder(base: f64, levels: usize, cost_factor: f64) -> DoorSpec {
    let mut capacities = vec![0.0; levels + 1];
    for (k, c) in capacities.iter_mut().enumerate().skip(1) {
        *c = ceil(base * (0.6 + 0.2 * k as f64));
    }
    // ceil may collapse neighbours on tiny bases
    for k in 2..=levels {
        if capacities[k] <= capacities[k - 1] {
            capacities[k] = capacities[k - 1] + 1.0;
        }
    }
    capacities[0] = capacities[1];
    let install_costs = capacities.iter().map(|c| cost_factor * c).collect();
    DoorSpec { capacities, install_costs }
}

fn scale_ladder(door: &mut DoorSpec, factor: f64, cost_factor: Option<f64>) {
    for c in door.capacities.iter_mut() {
        *c = ceil(*c * factor);
    }
    for k in 1..door.install_costs.len() {
        door.install_costs[k] = match cost_factor {
            Some(f) => f * door.capacities[k],
            None => door.install_costs[k] * factor,
        };
    }
}

fn set_basic_cost(doors: &mut [DoorSpec], penalty: f64) {
    for d in doors {
        d.install_costs[0] = penalty;
    }
}

pub fn generate_bsc(spec: &BscSpec) -> Result<Instance, TestbedError> {
    if spec.slack_set.is_empty() {
        return Err(TestbedError::EmptySlackSet);
    }
    if !(spec.density > 0.0 && spec.density <= 1.0) {
        return Err(TestbedError::Density(spec.density));
    }
    if spec.flow_range.0 > spec.flow_range.1 {
        return Err(TestbedError::FlowRange(spec.flow_range.0, spec.flow_range.1));
    }
    if spec.n_nodes == 0 || spec.n_doors == 0 || spec.levels == 0 {
        return Err(TestbedError::Size);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (nn, nd) = (spec.n_nodes, spec.n_doors);
    let weight = 1.0 / spec.slack_set.len() as f64;
    let mut flows = Vec::with_capacity(spec.slack_set.len());
    for _ in &spec.slack_set {
        let cells = flow_pattern(&mut rng, nn, nn, spec.density);
        let entries: Vec<(usize, usize, f64)> = cells
            .into_iter()
            .map(|(m, n)| (m, n, f64::from(rng.random_range(spec.flow_range.0..=spec.flow_range.1))))
            .collect();
        flows.push(FlowMatrix::from_entries(nn, nn, &entries)?);
    }
    let scenarios: Vec<Scenario> =
        flows.into_iter().map(|f| Scenario::new(weight, f, vec![0.0; nd], vec![0.0; nd])).collect();

    // capacities sized on the first slack value's scenario
    let total = 2.0 * scenarios[0].flow().total();
    let base = total / (2 * nd) as f64 + spec.slack_set[0] / 100.0 * total;
    let mut door = ladder(base, spec.levels, spec.cost_factor);
    let peak = scenarios
        .iter()
        .flat_map(|s| s.totals(crate::model::Side::Strip).iter().chain(s.totals(crate::model::Side::Stack)))
        .copied()
        .fold(0.0, f64::max);
    let top = door.max_capacity();
    if top > 0.0 && peak > top {
        scale_ladder(&mut door, peak / top, Some(spec.cost_factor));
    } else if top == 0.0 {
        door = ladder(peak.max(1.0), spec.levels, spec.cost_factor);
    }
    let mut strip_doors = vec![door; nd];
    let mut stack_doors = strip_doors.clone();
    let distance = distance_matrix(nd, nd);
    let penalty = spec
        .outsourcing_penalty
        .unwrap_or_else(|| default_outsourcing_penalty(&strip_doors, &stack_doors, &distance, &scenarios));
    set_basic_cost(&mut strip_doors, penalty);
    set_basic_cost(&mut stack_doors, penalty);
    Ok(Instance::new(InstanceData {
        strip_doors,
        stack_doors,
        max_strip_doors: nd + spec.door_bound_offset,
        max_stack_doors: nd + spec.door_bound_offset,
        distance,
        outsourcing_penalty: penalty,
        scenarios,
    })?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MergeSpec {
    /// Installable levels every member must carry.
    pub levels: usize,
    pub door_bound_offset: usize,
    pub outsourcing_penalty: Option<f64>,
}

impl Default for MergeSpec {
    fn default() -> Self {
        Self { levels: 5, door_bound_offset: 1, outsourcing_penalty: None }
    }
}

fn merge_ladders(a: &DoorSpec, b: &DoorSpec) -> DoorSpec {
    DoorSpec {
        capacities: a.capacities.iter().zip(&b.capacities).map(|(x, y)| x.max(*y)).collect(),
        install_costs: a.install_costs.iter().zip(&b.install_costs).map(|(x, y)| x.max(*y)).collect(),
    }
}

/// Union of the members' scenarios. Doors a member lacks are fully
/// disrupted in its scenarios, each member keeps a probability mass
/// proportional to its scenario count, and the ladders are scaled up when
/// some node would otherwise have no door able to take it.
pub fn merge_bsc(spec: &MergeSpec, members: &[Instance]) -> Result<Instance, TestbedError> {
    use crate::model::Side;
    if members.is_empty() {
        return Err(TestbedError::NoMembers);
    }
    for (b, inst) in members.iter().enumerate() {
        for side in [Side::Strip, Side::Stack] {
            if let Some(d) = inst.doors(side).iter().find(|d| d.levels() != spec.levels) {
                return Err(TestbedError::LevelMismatch { member: b, expected: spec.levels, found: d.levels() });
            }
        }
    }
    let ni = members.iter().map(|m| m.door_count(Side::Strip)).max().unwrap_or(0);
    let nj = members.iter().map(|m| m.door_count(Side::Stack)).max().unwrap_or(0);
    let mut sides: [Vec<Option<DoorSpec>>; 2] = [vec![None; ni], vec![None; nj]];
    for inst in members {
        for side in [Side::Strip, Side::Stack] {
            for (d, door) in inst.doors(side).iter().enumerate() {
                let slot = &mut sides[side as usize][d];
                *slot = Some(match slot.take() {
                    None => door.clone(),
                    Some(prev) => merge_ladders(&prev, door),
                });
            }
        }
    }
    let [strip, stack] = sides;
    let mut strip_doors: Vec<DoorSpec> = strip.into_iter().map(|d| d.expect("door owned by some member")).collect();
    let mut stack_doors: Vec<DoorSpec> = stack.into_iter().map(|d| d.expect("door owned by some member")).collect();

    let mut distance = distance_matrix(ni, nj);
    let mut covered = vec![false; ni * nj];
    for inst in members {
        let (mi, mj) = (inst.door_count(Side::Strip), inst.door_count(Side::Stack));
        for i in 0..mi {
            for j in 0..mj {
                let k = i * nj + j;
                distance[k] = if covered[k] { distance[k].max(inst.distance(i, j)) } else { inst.distance(i, j) };
                covered[k] = true;
            }
        }
    }
    let total_scenarios: usize = members.iter().map(|m| m.scenarios().len()).sum();
    let mut scenarios = Vec::with_capacity(total_scenarios);
    for inst in members {
        let share = inst.scenarios().len() as f64 / total_scenarios as f64;
        for s in inst.scenarios() {
            let mut ds = s.disruption(Side::Strip).to_vec();
            ds.resize(ni, 1.0);
            let mut dt = s.disruption(Side::Stack).to_vec();
            dt.resize(nj, 1.0);
            scenarios.push(s.with_weight(s.weight() * share).with_disruptions(ds, dt));
        }
    }

    // smallest factor that leaves every node an eligible door
    let mut factor: f64 = 1.0;
    for s in &scenarios {
        for (side, doors) in [(Side::Strip, &strip_doors), (Side::Stack, &stack_doors)] {
            let best = doors
                .iter()
                .zip(s.disruption(side))
                .map(|(d, dis)| (1.0 - dis) * d.max_capacity())
                .fold(0.0, f64::max);
            let peak = s.totals(side).iter().copied().fold(0.0, f64::max);
            if best > 0.0 && peak > best {
                factor = factor.max(peak / best);
            }
        }
    }
    if factor > 1.0 {
        for d in strip_doors.iter_mut().chain(stack_doors.iter_mut()) {
            scale_ladder(d, factor, None);
        }
    }
    let penalty = spec
        .outsourcing_penalty
        .unwrap_or_else(|| default_outsourcing_penalty(&strip_doors, &stack_doors, &distance, &scenarios));
    set_basic_cost(&mut strip_doors, penalty);
    set_basic_cost(&mut stack_doors, penalty);
    Ok(Instance::new(InstanceData {
        strip_doors,
        stack_doors,
        max_strip_doors: ni + spec.door_bound_offset,
        max_stack_doors: nj + spec.door_bound_offset,
        distance,
        outsourcing_penalty: penalty,
        scenarios,
    })?)
}

/// Table-1 style summary: scenario count, door counts and node ranges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InstanceSummary {
    pub scenarios: usize,
    pub strip_doors: usize,
    pub stack_doors: usize,
    pub origins: (usize, usize),
    pub destinations: (usize, usize),
}

pub fn summarize(instance: &Instance) -> InstanceSummary {
    use crate::model::Side;
    let range = |f: &dyn Fn(&Scenario) -> usize| {
        let it = instance.scenarios().iter().map(f);
        let lo = it.clone().min().unwrap_or(0);
        (lo, it.max().unwrap_or(0))
    };
    InstanceSummary {
        scenarios: instance.scenarios().len(),
        strip_doors: instance.door_count(Side::Strip),
        stack_doors: instance.door_count(Side::Stack),
        origins: range(&|s| s.origins()),
        destinations: range(&|s| s.destinations()),
    }
}

impl core::fmt::Display for InstanceSummary {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "{} scenarios, {}, {}, {}-{}, {}-{}",
            self.scenarios,
            self.strip_doors,
            self.stack_doors,
            self.origins.0,
            self.origins.1,
            self.destinations.0,
            self.destinations.1
        )
    }
}

/// Small seeded instance for exhaustive cross-checks: 1 or 2 doors per
/// side with 1 or 2 levels, 1 to 3 nodes per side, 1 or 2 scenarios, a
/// capacity slack of 0, 25 or 50 percent and occasional disruptions.
pub fn tiny_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7469_6e79);
    let doors = rng.random_range(1..=2usize);
    let nodes = rng.random_range(1..=3usize);
    let scenarios = rng.random_range(1..=2usize);
    let slack = [0.0, 25.0, 50.0][rng.random_range(0..3)];
    let spec = BscSpec {
        n_nodes: nodes,
        n_doors: doors,
        slack_set: [slack, slack + 10.0][..scenarios].to_vec(),
        density: 0.6,
        flow_range: (1, 9),
        levels: rng.random_range(1..=2usize),
        cost_factor: rng.random_range(1..=4u32) as f64,
        door_bound_offset: 0,
        outsourcing_penalty: None,
        seed,
    };
    let inst = generate_bsc(&spec).expect("tiny spec is valid");
    let mut data = inst.into_data();
    // uneven weights and occasional disruptions
    if data.scenarios.len() == 2 {
        let w = f64::from(rng.random_range(2..=8u32)) / 10.0;
        data.scenarios[0] = data.scenarios[0].with_weight(w);
        data.scenarios[1] = data.scenarios[1].with_weight(1.0 - w);
    }
    if data.strip_doors.len() == 2 && rng.random_bool(0.3) {
        data.max_strip_doors = 1;
    }
    if data.stack_doors.len() == 2 && rng.random_bool(0.3) {
        data.max_stack_doors = 1;
    }
    for s in data.scenarios.iter_mut() {
        let mut pick = |n: usize| -> Vec<f64> {
            (0..n).map(|_| if rng.random_bool(0.15) { [0.25, 0.5, 1.0][rng.random_range(0..3)] } else { 0.0 }).collect()
        };
        let ds = pick(data.strip_doors.len());
        let dt = pick(data.stack_doors.len());
        *s = s.with_disruptions(ds, dt);
    }
    Instance::new(data).expect("tiny instance is valid")
}
