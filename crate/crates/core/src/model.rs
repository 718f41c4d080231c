//! Problem data, solution representations and objective evaluation.
//!
//! Doors and nodes are indexed from zero in code. The outsourcing "door" is
//! not a door index; it is the [`Dock::Outsourced`] variant.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{EvalError, ModelError};

/// Absolute tolerance used on capacity slack.
pub const CAPACITY_TOL: f64 = 1e-6;
/// Tolerance on the sum of scenario weights.
pub const WEIGHT_TOL: f64 = 1e-9;
/// Largest supported number of capacity levels per door (level 0 included).
pub const MAX_LEVELS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    /// Inbound doors receiving pallets from origin nodes.
    Strip,
    /// Outbound doors shipping pallets to destination nodes.
    Stack,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Strip => Side::Stack,
            Side::Stack => Side::Strip,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Strip => f.write_str("strip"),
            Side::Stack => f.write_str("stack"),
        }
    }
}

/// Where a node is served: a real door or the outsourcing door.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dock {
    Outsourced,
    Door(usize),
}

impl Dock {
    pub fn door(self) -> Option<usize> {
        match self {
            Dock::Outsourced => None,
            Dock::Door(d) => Some(d),
        }
    }

    pub fn is_outsourced(self) -> bool {
        matches!(self, Dock::Outsourced)
    }
}

/// Capacity ladder and installation costs of one candidate door.
///
/// Entry 0 is the basic capacity (and its cost); entries `1..=levels()` are
/// the installable levels.
#[derive(Clone, Debug, PartialEq)]
pub struct DoorSpec {
    pub capacities: Vec<f64>,
    pub install_costs: Vec<f64>,
}

impl DoorSpec {
    /// Number of installable levels, |K|.
    pub fn levels(&self) -> usize {
        self.capacities.len().saturating_sub(1)
    }

    pub fn max_capacity(&self) -> f64 {
        self.capacities.iter().copied().fold(0.0, f64::max)
    }

    fn validate(&self, side: Side, door: usize) -> Result<(), ModelError> {
        let bad = |reason: &'static str| ModelError::Door { side, door, reason };
        if self.capacities.is_empty() {
            return Err(bad("no basic capacity"));
        }
        if self.capacities.len() != self.install_costs.len() {
            return Err(bad("capacity and cost ladders differ in length"));
        }
        if self.capacities.len() > MAX_LEVELS {
            return Err(bad("too many capacity levels"));
        }
        if self.capacities.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(bad("negative or non-finite capacity"));
        }
        if self.install_costs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(bad("negative or non-finite installation cost"));
        }
        if self.capacities[1..].windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("capacities not strictly increasing over levels 1..K"));
        }
        Ok(())
    }
}

/// Dense origin x destination pallet flow of one scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowMatrix {
    origins: usize,
    destinations: usize,
    values: Vec<f64>,
}

impl FlowMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let origins = rows.len();
        let destinations = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(origins * destinations);
        for (m, row) in rows.iter().enumerate() {
            if row.len() != destinations {
                return Err(ModelError::FlowShape { origin: m });
            }
            values.extend_from_slice(row);
        }
        Self::from_dense(origins, destinations, values)
    }

    pub fn from_entries(
        origins: usize,
        destinations: usize,
        entries: &[(usize, usize, f64)],
    ) -> Result<Self, ModelError> {
        let mut values = vec![0.0; origins * destinations];
        for &(m, n, h) in entries {
            if m >= origins || n >= destinations {
                return Err(ModelError::FlowShape { origin: m });
            }
            values[m * destinations + n] += h;
        }
        Self::from_dense(origins, destinations, values)
    }

    fn from_dense(origins: usize, destinations: usize, values: Vec<f64>) -> Result<Self, ModelError> {
        for (k, &h) in values.iter().enumerate() {
            if !(h >= 0.0) || !h.is_finite() {
                return Err(ModelError::NegativeFlow {
                    origin: k / destinations.max(1),
                    destination: k % destinations.max(1),
                    value: h,
                });
            }
        }
        Ok(Self { origins, destinations, values })
    }

    pub fn origins(&self) -> usize {
        self.origins
    }

    pub fn destinations(&self) -> usize {
        self.destinations
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.values[m * self.destinations + n]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.values[m * self.destinations..(m + 1) * self.destinations]
    }

    /// Strictly positive entries as `(origin, destination, pallets)`.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let d = self.destinations;
        self.values
            .iter()
            .enumerate()
            .filter(|(_, h)| **h > 0.0)
            .map(move |(k, h)| (k / d, k % d, *h))
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Row and column sums of a flow matrix given as dense rows.
pub fn derive_totals(rows: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let flow = FlowMatrix::from_rows(rows)?;
    Ok(flow_totals(&flow))
}

fn flow_totals(flow: &FlowMatrix) -> (Vec<f64>, Vec<f64>) {
    let mut out = vec![0.0; flow.origins];
    let mut inn = vec![0.0; flow.destinations];
    for m in 0..flow.origins {
        for n in 0..flow.destinations {
            let h = flow.get(m, n);
            out[m] += h;
            inn[n] += h;
        }
    }
    (out, inn)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    weight: f64,
    flow: FlowMatrix,
    strip_disruption: Vec<f64>,
    stack_disruption: Vec<f64>,
    origin_totals: Vec<f64>,
    destination_totals: Vec<f64>,
}

impl Scenario {
    pub fn new(
        weight: f64,
        flow: FlowMatrix,
        strip_disruption: Vec<f64>,
        stack_disruption: Vec<f64>,
    ) -> Self {
        let (origin_totals, destination_totals) = flow_totals(&flow);
        Self { weight, flow, strip_disruption, stack_disruption, origin_totals, destination_totals }
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn flow(&self) -> &FlowMatrix {
        &self.flow
    }

    pub fn origins(&self) -> usize {
        self.flow.origins
    }

    pub fn destinations(&self) -> usize {
        self.flow.destinations
    }

    pub fn disruption(&self, side: Side) -> &[f64] {
        match side {
            Side::Strip => &self.strip_disruption,
            Side::Stack => &self.stack_disruption,
        }
    }

    /// S_m (strip side) or R_n (stack side).
    pub fn totals(&self, side: Side) -> &[f64] {
        match side {
            Side::Strip => &self.origin_totals,
            Side::Stack => &self.destination_totals,
        }
    }

    pub fn nodes(&self, side: Side) -> usize {
        match side {
            Side::Strip => self.flow.origins,
            Side::Stack => self.flow.destinations,
        }
    }

    pub(crate) fn with_weight(&self, weight: f64) -> Self {
        let mut s = self.clone();
        s.weight = weight;
        s
    }

    pub(crate) fn with_disruptions(&self, strip: Vec<f64>, stack: Vec<f64>) -> Self {
        let mut s = self.clone();
        s.strip_disruption = strip;
        s.stack_disruption = stack;
        s
    }
}

/// Raw instance fields, validated by [`Instance::new`].
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceData {
    pub strip_doors: Vec<DoorSpec>,
    pub stack_doors: Vec<DoorSpec>,
    pub max_strip_doors: usize,
    pub max_stack_doors: usize,
    /// Row-major |I| x |J| strip-to-stack distances.
    pub distance: Vec<f64>,
    pub outsourcing_penalty: f64,
    pub scenarios: Vec<Scenario>,
}

/// Eligible doors per node of one scenario (I_m^w and J_n^w).
#[derive(Clone, Debug, PartialEq)]
struct Eligibility {
    strip: Vec<Vec<usize>>,
    stack: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    data: InstanceData,
    eligibility: Vec<Eligibility>,
}

impl Instance {
    pub fn new(data: InstanceData) -> Result<Self, ModelError> {
        for (i, d) in data.strip_doors.iter().enumerate() {
            d.validate(Side::Strip, i)?;
        }
        for (j, d) in data.stack_doors.iter().enumerate() {
            d.validate(Side::Stack, j)?;
        }
        if data.max_strip_doors < 1 || data.max_stack_doors < 1 {
            return Err(ModelError::DoorBound);
        }
        let (ni, nj) = (data.strip_doors.len(), data.stack_doors.len());
        if data.distance.len() != ni * nj {
            return Err(ModelError::DistanceShape { expected: ni * nj, found: data.distance.len() });
        }
        if data.distance.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
            return Err(ModelError::NegativeDistance);
        }
        if !(data.outsourcing_penalty > 0.0) || !data.outsourcing_penalty.is_finite() {
            return Err(ModelError::Penalty);
        }
        let mut sum = 0.0;
        for (w, s) in data.scenarios.iter().enumerate() {
            if !(s.weight > 0.0 && s.weight <= 1.0) {
                return Err(ModelError::Weight { scenario: w, weight: s.weight });
            }
            for (side, doors) in [(Side::Strip, ni), (Side::Stack, nj)] {
                let d = s.disruption(side);
                if d.len() != doors {
                    return Err(ModelError::DisruptionShape { scenario: w, side });
                }
                if let Some(door) = d.iter().position(|x| !(*x >= 0.0 && *x <= 1.0)) {
                    return Err(ModelError::Disruption { scenario: w, side, door, value: d[door] });
                }
            }
            sum += s.weight;
        }
        if !data.scenarios.is_empty() && (sum - 1.0).abs() > WEIGHT_TOL {
            return Err(ModelError::WeightSum { sum });
        }
        let eligibility = data
            .scenarios
            .iter()
            .map(|s| Eligibility {
                strip: eligible_sets(s, Side::Strip, &data.strip_doors),
                stack: eligible_sets(s, Side::Stack, &data.stack_doors),
            })
            .collect();
        Ok(Self { data, eligibility })
    }

    pub fn data(&self) -> &InstanceData {
        &self.data
    }

    pub fn into_data(self) -> InstanceData {
        self.data
    }

    pub fn doors(&self, side: Side) -> &[DoorSpec] {
        match side {
            Side::Strip => &self.data.strip_doors,
            Side::Stack => &self.data.stack_doors,
        }
    }

    pub fn door_count(&self, side: Side) -> usize {
        self.doors(side).len()
    }

    /// Ī or J̄.
    pub fn max_doors(&self, side: Side) -> usize {
        match side {
            Side::Strip => self.data.max_strip_doors,
            Side::Stack => self.data.max_stack_doors,
        }
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.data.scenarios
    }

    pub fn scenario(&self, w: usize) -> &Scenario {
        &self.data.scenarios[w]
    }

    pub fn outsourcing_penalty(&self) -> f64 {
        self.data.outsourcing_penalty
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.data.distance[i * self.data.stack_doors.len() + j]
    }

    /// Unit cost of moving one pallet through the given dock pair: E_ij for
    /// two real doors, F0 as soon as either side is outsourced.
    #[inline]
    pub fn unit_cost(&self, strip: Dock, stack: Dock) -> f64 {
        match (strip, stack) {
            (Dock::Door(i), Dock::Door(j)) => self.distance(i, j),
            _ => self.data.outsourcing_penalty,
        }
    }

    /// G_minj^w for origin `m` and destination `n` of scenario `w`.
    pub fn operational_cost(&self, strip: Dock, m: usize, n: usize, stack: Dock, w: usize) -> f64 {
        self.unit_cost(strip, stack) * self.scenario(w).flow.get(m, n)
    }

    /// I_m^w: strip doors whose largest net capacity admits origin `m`.
    pub fn eligible_strip_doors(&self, w: usize, m: usize) -> &[usize] {
        &self.eligibility[w].strip[m]
    }

    /// J_n^w: stack doors whose largest net capacity admits destination `n`.
    pub fn eligible_stack_doors(&self, w: usize, n: usize) -> &[usize] {
        &self.eligibility[w].stack[n]
    }

    pub fn eligible_doors(&self, side: Side, w: usize, node: usize) -> &[usize] {
        match side {
            Side::Strip => self.eligible_strip_doors(w, node),
            Side::Stack => self.eligible_stack_doors(w, node),
        }
    }

    pub fn is_eligible(&self, side: Side, w: usize, node: usize, door: usize) -> bool {
        self.eligible_doors(side, w, node).binary_search(&door).is_ok()
    }

    /// Net capacity (1 - D) * capacity of a door at a level in a scenario.
    pub fn net_capacity(&self, side: Side, w: usize, door: usize, level: usize) -> f64 {
        (1.0 - self.scenario(w).disruption(side)[door]) * self.doors(side)[door].capacities[level]
    }

    /// Copy of this instance keeping only the listed scenarios, with their
    /// weights rescaled to sum to one.
    pub fn restricted(&self, scenarios: &[usize]) -> Result<Instance, ModelError> {
        let mass: f64 = scenarios.iter().map(|&w| self.scenario(w).weight).sum();
        let mut data = self.data.clone();
        data.scenarios = scenarios.iter().map(|&w| self.scenario(w).with_weight(self.scenario(w).weight / mass)).collect();
        Instance::new(data)
    }
}

fn eligible_sets(s: &Scenario, side: Side, doors: &[DoorSpec]) -> Vec<Vec<usize>> {
    let d = s.disruption(side);
    s.totals(side)
        .iter()
        .map(|&load| {
            (0..doors.len())
                .filter(|&i| load <= (1.0 - d[i]) * doors[i].max_capacity() + CAPACITY_TOL)
                .collect()
        })
        .collect()
}

/// Set of installed capacity levels of one door, as a bit mask over
/// levels `0..MAX_LEVELS`. A well-formed design holds at most one level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct LevelSet(u64);

impl LevelSet {
    pub const EMPTY: LevelSet = LevelSet(0);

    pub fn single(level: usize) -> Self {
        assert!(level < MAX_LEVELS, "level {level} out of range");
        LevelSet(1u64 << level)
    }

    pub fn from_level(level: Option<usize>) -> Self {
        level.map_or(Self::EMPTY, Self::single)
    }

    pub fn insert(&mut self, level: usize) {
        *self = LevelSet(self.0 | Self::single(level).0);
    }

    pub fn contains(self, level: usize) -> bool {
        level < MAX_LEVELS && self.0 & (1u64 << level) != 0
    }

    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// The installed level when exactly one is present.
    pub fn level(self) -> Option<usize> {
        (self.count() == 1).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..MAX_LEVELS).filter(move |&k| self.contains(k))
    }
}

/// Installed capacity levels per strip and stack door (alpha, beta).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FirstStageDesign {
    pub strip: Vec<LevelSet>,
    pub stack: Vec<LevelSet>,
}

impl FirstStageDesign {
    pub fn empty(instance: &Instance) -> Self {
        Self {
            strip: vec![LevelSet::EMPTY; instance.door_count(Side::Strip)],
            stack: vec![LevelSet::EMPTY; instance.door_count(Side::Stack)],
        }
    }

    pub fn from_levels(strip: &[Option<usize>], stack: &[Option<usize>]) -> Self {
        Self {
            strip: strip.iter().map(|l| LevelSet::from_level(*l)).collect(),
            stack: stack.iter().map(|l| LevelSet::from_level(*l)).collect(),
        }
    }

    pub fn side(&self, side: Side) -> &[LevelSet] {
        match side {
            Side::Strip => &self.strip,
            Side::Stack => &self.stack,
        }
    }

    pub fn side_mut(&mut self, side: Side) -> &mut Vec<LevelSet> {
        match side {
            Side::Strip => &mut self.strip,
            Side::Stack => &mut self.stack,
        }
    }

    /// k(i) of a door carrying a single level.
    pub fn level(&self, side: Side, door: usize) -> Option<usize> {
        self.side(side)[door].level()
    }

    /// Doors holding a level k >= 1 (the ones counted by the cover rows).
    pub fn installed_count(&self, side: Side) -> usize {
        self.side(side).iter().map(|s| s.iter().filter(|&k| k >= 1).count()).sum()
    }

    /// Nominal capacity sum_k S_k alpha_k of a door.
    pub fn nominal_capacity(&self, instance: &Instance, side: Side, door: usize) -> f64 {
        let spec = &instance.doors(side)[door];
        self.side(side)[door].iter().filter_map(|k| spec.capacities.get(k)).sum()
    }

    pub fn install_cost(&self, instance: &Instance) -> f64 {
        [Side::Strip, Side::Stack]
            .into_iter()
            .map(|side| {
                self.side(side)
                    .iter()
                    .zip(instance.doors(side))
                    .map(|(set, spec)| set.iter().filter_map(|k| spec.install_costs.get(k)).sum::<f64>())
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Second-stage decisions of one scenario (x, y and the outsourcing flags).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ScenarioAssignment {
    pub origins: Vec<Option<Dock>>,
    pub destinations: Vec<Option<Dock>>,
    pub inbound_outsourcing: bool,
    pub outbound_outsourcing: bool,
}

impl ScenarioAssignment {
    /// Complete assignment with the tightest consistent outsourcing flags.
    pub fn canonical(origins: Vec<Dock>, destinations: Vec<Dock>) -> Self {
        let inbound_outsourcing = origins.iter().any(|d| d.is_outsourced());
        let outbound_outsourcing = destinations.iter().any(|d| d.is_outsourced());
        Self {
            origins: origins.into_iter().map(Some).collect(),
            destinations: destinations.into_iter().map(Some).collect(),
            inbound_outsourcing,
            outbound_outsourcing,
        }
    }

    pub fn side(&self, side: Side) -> &[Option<Dock>] {
        match side {
            Side::Strip => &self.origins,
            Side::Stack => &self.destinations,
        }
    }

    pub fn flag(&self, side: Side) -> bool {
        match side {
            Side::Strip => self.inbound_outsourcing,
            Side::Stack => self.outbound_outsourcing,
        }
    }

    pub fn uses_outsourcing(&self) -> bool {
        self.inbound_outsourcing || self.outbound_outsourcing
    }

    /// Number of outsourcing flags raised (0, 1 or 2).
    pub fn outsourcing_flags(&self) -> usize {
        usize::from(self.inbound_outsourcing) + usize::from(self.outbound_outsourcing)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CostBreakdown {
    pub install_cost: f64,
    pub outsourcing_penalty_cost: f64,
    pub expected_operational_cost: f64,
    pub total: f64,
}

/// Operational cost of one scenario assignment: sum_mn G x y, unweighted and
/// without the outsourcing flag penalty.
pub fn scenario_operational_cost(
    instance: &Instance,
    w: usize,
    assignment: &ScenarioAssignment,
) -> Result<f64, EvalError> {
    check_shape(instance, w, assignment)?;
    if let Some(m) = assignment.origins.iter().position(Option::is_none) {
        return Err(EvalError::Unassigned { scenario: w, side: Side::Strip, node: m });
    }
    if let Some(n) = assignment.destinations.iter().position(Option::is_none) {
        return Err(EvalError::Unassigned { scenario: w, side: Side::Stack, node: n });
    }
    let mut cost = 0.0;
    for (m, n, h) in instance.scenario(w).flow.nonzeros() {
        if let (Some(a), Some(b)) = (assignment.origins[m], assignment.destinations[n]) {
            cost += instance.unit_cost(a, b) * h;
        }
    }
    Ok(cost)
}

fn check_shape(instance: &Instance, w: usize, a: &ScenarioAssignment) -> Result<(), EvalError> {
    let s = instance.scenario(w);
    if a.origins.len() != s.origins() || a.destinations.len() != s.destinations() {
        return Err(EvalError::Shape { scenario: w });
    }
    Ok(())
}

/// Objective of the two-stage model for a complete solution, evaluated
/// directly on the x·y products.
pub fn evaluate_solution(
    instance: &Instance,
    design: &FirstStageDesign,
    assignments: &[ScenarioAssignment],
) -> Result<CostBreakdown, EvalError> {
    if design.strip.len() != instance.door_count(Side::Strip)
        || design.stack.len() != instance.door_count(Side::Stack)
    {
        return Err(EvalError::DesignShape);
    }
    if assignments.len() < instance.scenarios().len() {
        return Err(EvalError::MissingScenario { scenario: assignments.len() });
    }
    if assignments.len() > instance.scenarios().len() {
        return Err(EvalError::ExtraScenarios);
    }
    let install_cost = design.install_cost(instance);
    let f0 = instance.outsourcing_penalty();
    let mut penalty = 0.0;
    let mut operational = 0.0;
    for (w, a) in assignments.iter().enumerate() {
        let weight = instance.scenario(w).weight;
        operational += weight * scenario_operational_cost(instance, w, a)?;
        penalty += weight * f0 * a.outsourcing_flags() as f64;
    }
    Ok(CostBreakdown {
        install_cost,
        outsourcing_penalty_cost: penalty,
        expected_operational_cost: operational,
        total: install_cost + penalty + operational,
    })
}

/// Default F0: ten times the largest single-level strip and stack costs
/// plus the costliest possible routing of the largest scenario flow.
pub fn default_outsourcing_penalty(
    strip_doors: &[DoorSpec],
    stack_doors: &[DoorSpec],
    distance: &[f64],
    scenarios: &[Scenario],
) -> f64 {
    let max_cost = |doors: &[DoorSpec]| {
        doors
            .iter()
            .flat_map(|d| d.install_costs.iter().skip(1).copied())
            .fold(0.0, f64::max)
    };
    let max_e = distance.iter().copied().fold(0.0, f64::max);
    let max_flow = scenarios.iter().map(|s| s.flow.total()).fold(0.0, f64::max);
    let raw = 10.0 * (max_cost(strip_doors) + max_cost(stack_doors) + max_e * max_flow);
    if raw > 0.0 {
        raw
    } else {
        1.0
    }
}

/// First-stage design with one assignment per scenario, in scenario order.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub design: FirstStageDesign,
    pub assignments: Vec<ScenarioAssignment>,
}

impl Solution {
    pub fn evaluate(&self, instance: &Instance) -> Result<CostBreakdown, EvalError> {
        evaluate_solution(instance, &self.design, &self.assignments)
    }
}
