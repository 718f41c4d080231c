//! Exact linearization of the two-stage model and its scenario submodels.
//!
//! Every quadratic term `x_mi * y_nj` is replaced by a continuous column
//! `v_minj` in [0, 1], tied to the assignment columns by the rows
//! `sum_j v_minj = x_mi` and `sum_i v_minj = y_nj`. The same builder emits
//! the full model, cluster submodels, the strip-only and stack-only
//! relaxations, and the single-scenario models with fixed capacities.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::milp::{GenericMilp, Sense, Symbol, VarKind};
use crate::model::{Dock, FirstStageDesign, Instance, LevelSet, ScenarioAssignment, Side};

/// How the first-stage decisions appear in a model.
#[derive(Clone, Debug, PartialEq)]
pub enum FirstStage {
    /// Binary level columns for the listed doors, with clique and cover rows.
    Columns { strip_doors: Vec<usize>, stack_doors: Vec<usize> },
    /// Nominal capacity of every door fixed by a design; no first-stage
    /// columns and no installation cost.
    Fixed { strip_capacity: Vec<f64>, stack_capacity: Vec<f64> },
}

/// Which assignment sides a model keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coupling {
    /// x, y and v with both families of linking rows.
    Both,
    /// Origins only: x and v with `sum_j v = x`, operational costs halved.
    StripOnly,
    /// Destinations only: y and v with `sum_i v = y`, operational costs halved.
    StackOnly,
}

impl Coupling {
    fn keeps(self, side: Side) -> bool {
        matches!(
            (self, side),
            (Coupling::Both, _) | (Coupling::StripOnly, Side::Strip) | (Coupling::StackOnly, Side::Stack)
        )
    }

    fn cost_share(self) -> f64 {
        match self {
            Coupling::Both => 1.0,
            Coupling::StripOnly | Coupling::StackOnly => 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubmodelSpec {
    pub name: String,
    /// Scenario index and the weight its costs carry in this model.
    pub scenarios: Vec<(usize, f64)>,
    pub first_stage: FirstStage,
    pub coupling: Coupling,
}

impl SubmodelSpec {
    /// The full linearized model over every door and scenario.
    pub fn full(instance: &Instance) -> Self {
        Self {
            name: String::from("lip"),
            scenarios: instance.scenarios().iter().enumerate().map(|(w, s)| (w, s.weight())).collect(),
            first_stage: FirstStage::Columns {
                strip_doors: (0..instance.door_count(Side::Strip)).collect(),
                stack_doors: (0..instance.door_count(Side::Stack)).collect(),
            },
            coupling: Coupling::Both,
        }
    }
}

/// Nominal capacity a design gives a door; uninstalled doors fall back to
/// the basic capacity (level 0) when requested.
pub fn design_capacity(
    instance: &Instance,
    design: &FirstStageDesign,
    side: Side,
    door: usize,
    basic_fallback: bool,
) -> f64 {
    let set = design.side(side)[door];
    if set.is_empty() {
        if basic_fallback {
            instance.doors(side)[door].capacities[0]
        } else {
            0.0
        }
    } else {
        design.nominal_capacity(instance, side, door)
    }
}

pub fn build_lip(instance: &Instance) -> GenericMilp {
    build_submodel(instance, &SubmodelSpec::full(instance))
}

fn dock_label(d: Dock) -> usize {
    d.door().map_or(0, |i| i + 1)
}

/// Assignment options of a node: eligible doors then the outsourcing door.
fn options(instance: &Instance, side: Side, w: usize, node: usize) -> impl Iterator<Item = Dock> + '_ {
    instance
        .eligible_doors(side, w, node)
        .iter()
        .map(|&d| Dock::Door(d))
        .chain(core::iter::once(Dock::Outsourced))
}

pub fn build_submodel(instance: &Instance, spec: &SubmodelSpec) -> GenericMilp {
    let mut milp = GenericMilp::new(spec.name.clone());
    let f0 = instance.outsourcing_penalty();
    let sides: Vec<Side> = [Side::Strip, Side::Stack].into_iter().filter(|s| spec.coupling.keeps(*s)).collect();

    // first-stage columns: level_cols[side][door] = [(level, col)]
    let mut level_cols: [BTreeMap<usize, Vec<(usize, usize)>>; 2] = [BTreeMap::new(), BTreeMap::new()];
    if let FirstStage::Columns { strip_doors, stack_doors } = &spec.first_stage {
        for &side in &sides {
            let doors = if side == Side::Strip { strip_doors } else { stack_doors };
            for &d in doors {
                let door = &instance.doors(side)[d];
                let cols = (1..=door.levels())
                    .map(|k| {
                        let sym = match side {
                            Side::Strip => Symbol::Alpha { door: d, level: k },
                            Side::Stack => Symbol::Beta { door: d, level: k },
                        };
                        (k, milp.add_var(sym.name(), VarKind::Binary, (0.0, 1.0), door.install_costs[k], Some(sym)))
                    })
                    .collect();
                level_cols[side as usize].insert(d, cols);
            }
        }
        for &side in &sides {
            let tag = side_tag(side);
            let cols = &level_cols[side as usize];
            for (d, ks) in cols {
                milp.add_row(format!("clique_{tag}_{}", d + 1), ks.iter().map(|&(_, c)| (c, 1.0)), Sense::Le, 1.0);
            }
            milp.add_row(
                format!("cover_{tag}"),
                cols.values().flatten().map(|&(_, c)| (c, 1.0)),
                Sense::Le,
                instance.max_doors(side) as f64,
            );
        }
    }

    for &(w, weight) in &spec.scenarios {
        add_scenario_block(instance, spec, &mut milp, &sides, &level_cols, w, weight, f0);
    }
    milp
}

fn side_tag(side: Side) -> &'static str {
    match side {
        Side::Strip => "s",
        Side::Stack => "t",
    }
}

#[allow(clippy::too_many_arguments)]
fn add_scenario_block(
    instance: &Instance,
    spec: &SubmodelSpec,
    milp: &mut GenericMilp,
    sides: &[Side],
    level_cols: &[BTreeMap<usize, Vec<(usize, usize)>>; 2],
    w: usize,
    weight: f64,
    f0: f64,
) {
    let s = instance.scenario(w);
    let ws = w + 1;
    let flag = |side: Side| match side {
        Side::Strip => Symbol::AlphaOut { scenario: w },
        Side::Stack => Symbol::BetaOut { scenario: w },
    };
    let mut flag_col = [usize::MAX; 2];
    for &side in sides {
        let sym = flag(side);
        flag_col[side as usize] = milp.add_var(sym.name(), VarKind::Binary, (0.0, 1.0), weight * f0, Some(sym));
    }
    // assign_cols[side][node] = [(dock, col)]
    let mut assign_cols: [Vec<Vec<(Dock, usize)>>; 2] = [Vec::new(), Vec::new()];
    for &side in sides {
        assign_cols[side as usize] = (0..s.nodes(side))
            .map(|node| {
                options(instance, side, w, node)
                    .map(|dock| {
                        let sym = match side {
                            Side::Strip => Symbol::X { scenario: w, origin: node, dock },
                            Side::Stack => Symbol::Y { scenario: w, destination: node, dock },
                        };
                        (dock, milp.add_var(sym.name(), VarKind::Binary, (0.0, 1.0), 0.0, Some(sym)))
                    })
                    .collect()
            })
            .collect();
    }

    // v columns, indexed [m][n] -> [(i, j, col)]
    let share = spec.coupling.cost_share();
    let mut v_cols: Vec<Vec<Vec<(Dock, Dock, usize)>>> = Vec::with_capacity(s.origins());
    for m in 0..s.origins() {
        let mut per_n = Vec::with_capacity(s.destinations());
        for n in 0..s.destinations() {
            let h = s.flow().get(m, n);
            let mut cols = Vec::new();
            for i in options(instance, Side::Strip, w, m) {
                for j in options(instance, Side::Stack, w, n) {
                    let sym = Symbol::V { scenario: w, origin: m, strip: i, destination: n, stack: j };
                    let obj = weight * share * instance.unit_cost(i, j) * h;
                    cols.push((i, j, milp.add_var(sym.name(), VarKind::Continuous, (0.0, 1.0), obj, Some(sym))));
                }
            }
            per_n.push(cols);
        }
        v_cols.push(per_n);
    }

    for &side in sides {
        let tag = side_tag(side);
        let loads = s.totals(side);
        let disruption = s.disruption(side);
        let nodes = &assign_cols[side as usize];
        for d in 0..instance.door_count(side) {
            let mut coeffs: Vec<(usize, f64)> = Vec::new();
            for (node, opts) in nodes.iter().enumerate() {
                for &(dock, col) in opts {
                    if dock == Dock::Door(d) {
                        coeffs.push((col, loads[node]));
                    }
                }
            }
            let net = 1.0 - disruption[d];
            let rhs = match &spec.first_stage {
                FirstStage::Columns { .. } => {
                    if let Some(ks) = level_cols[side as usize].get(&d) {
                        let spec_d = &instance.doors(side)[d];
                        coeffs.extend(ks.iter().map(|&(k, c)| (c, -net * spec_d.capacities[k])));
                    }
                    0.0
                }
                FirstStage::Fixed { strip_capacity, stack_capacity } => {
                    let cap = if side == Side::Strip { strip_capacity } else { stack_capacity };
                    net * cap[d]
                }
            };
            milp.add_row(format!("cap_{tag}_{ws}_{}", d + 1), coeffs, Sense::Le, rhs);
        }
        for (node, opts) in nodes.iter().enumerate() {
            let out = opts.iter().find(|(d, _)| d.is_outsourced()).map(|&(_, c)| c).expect("outsourcing column");
            milp.add_row(
                format!("flag_{tag}_{ws}_{}", node + 1),
                [(out, 1.0), (flag_col[side as usize], -1.0)],
                Sense::Le,
                0.0,
            );
            milp.add_row(
                format!("assign_{tag}_{ws}_{}", node + 1),
                opts.iter().map(|&(_, c)| (c, 1.0)),
                Sense::Eq,
                1.0,
            );
        }
    }

    if spec.coupling.keeps(Side::Strip) {
        for (m, per_n) in v_cols.iter().enumerate() {
            for &(i, xcol) in &assign_cols[Side::Strip as usize][m] {
                for (n, cols) in per_n.iter().enumerate() {
                    let row = cols.iter().filter(|c| c.0 == i).map(|c| (c.2, 1.0)).chain([(xcol, -1.0)]);
                    milp.add_row(
                        format!("rltx_{ws}_{}_{}_{}", m + 1, dock_label(i), n + 1),
                        row,
                        Sense::Eq,
                        0.0,
                    );
                }
            }
        }
    }
    if spec.coupling.keeps(Side::Stack) {
        for (m, per_n) in v_cols.iter().enumerate() {
            for (n, cols) in per_n.iter().enumerate() {
                for &(j, ycol) in &assign_cols[Side::Stack as usize][n] {
                    let row = cols.iter().filter(|c| c.1 == j).map(|c| (c.2, 1.0)).chain([(ycol, -1.0)]);
                    milp.add_row(
                        format!("rlty_{ws}_{}_{}_{}", m + 1, n + 1, dock_label(j)),
                        row,
                        Sense::Eq,
                        0.0,
                    );
                }
            }
        }
    }
}

/// Products `v_minj = x_mi * y_nj` of a complete binary assignment: the
/// `(origin, strip dock, destination, stack dock)` tuples whose product is 1.
pub fn lift_solution(origins: &[Dock], destinations: &[Dock]) -> Vec<(usize, Dock, usize, Dock)> {
    let mut out = Vec::with_capacity(origins.len() * destinations.len());
    for (m, &i) in origins.iter().enumerate() {
        for (n, &j) in destinations.iter().enumerate() {
            out.push((m, i, n, j));
        }
    }
    out
}

/// Column values of a model for a structured solution. Level columns take
/// the design's levels, assignment columns the given docks, and v columns
/// the lifted products. In a one-sided model, each v row puts its unit
/// mass on the cheapest partner dock.
pub fn encode_point(
    milp: &GenericMilp,
    instance: &Instance,
    design: Option<&FirstStageDesign>,
    assignments: &BTreeMap<usize, ScenarioAssignment>,
) -> Vec<f64> {
    let mut x = vec![0.0; milp.vars().len()];
    let dock_of = |a: &ScenarioAssignment, side: Side, node: usize| a.side(side).get(node).copied().flatten();
    for (col, value) in x.iter_mut().enumerate() {
        let Some(sym) = milp.symbol(col) else { continue };
        *value = match sym {
            Symbol::Alpha { door, level } => design.map_or(0.0, |d| f64::from(u8::from(d.strip[door].contains(level)))),
            Symbol::Beta { door, level } => design.map_or(0.0, |d| f64::from(u8::from(d.stack[door].contains(level)))),
            Symbol::AlphaOut { scenario } => {
                assignments.get(&scenario).map_or(0.0, |a| f64::from(u8::from(a.inbound_outsourcing)))
            }
            Symbol::BetaOut { scenario } => {
                assignments.get(&scenario).map_or(0.0, |a| f64::from(u8::from(a.outbound_outsourcing)))
            }
            Symbol::X { scenario, origin, dock } => assignments
                .get(&scenario)
                .map_or(0.0, |a| f64::from(u8::from(dock_of(a, Side::Strip, origin) == Some(dock)))),
            Symbol::Y { scenario, destination, dock } => assignments
                .get(&scenario)
                .map_or(0.0, |a| f64::from(u8::from(dock_of(a, Side::Stack, destination) == Some(dock)))),
            Symbol::V { .. } => 0.0,
        };
    }
    // v columns
    for (&scenario, a) in assignments {
        let s = instance.scenario(scenario);
        for m in 0..s.origins() {
            for n in 0..s.destinations() {
                let xi = dock_of(a, Side::Strip, m);
                let yj = dock_of(a, Side::Stack, n);
                let (i, j) = match (xi, yj) {
                    (Some(i), Some(j)) if milp.var_of(&Symbol::X { scenario, origin: m, dock: i }).is_some()
                        && milp.var_of(&Symbol::Y { scenario, destination: n, dock: j }).is_some() => (i, j),
                    (Some(i), _) if milp.var_of(&Symbol::X { scenario, origin: m, dock: i }).is_some() => {
                        (i, cheapest_partner(instance, scenario, Side::Stack, n, |j| instance.unit_cost(i, j)))
                    }
                    (_, Some(j)) if milp.var_of(&Symbol::Y { scenario, destination: n, dock: j }).is_some() => {
                        (cheapest_partner(instance, scenario, Side::Strip, m, |i| instance.unit_cost(i, j)), j)
                    }
                    _ => continue,
                };
                let sym = Symbol::V { scenario, origin: m, strip: i, destination: n, stack: j };
                if let Some(col) = milp.var_of(&sym) {
                    x[col] = 1.0;
                }
            }
        }
    }
    x
}

fn cheapest_partner(
    instance: &Instance,
    w: usize,
    side: Side,
    node: usize,
    cost: impl Fn(Dock) -> f64,
) -> Dock {
    let mut best = Dock::Outsourced;
    let mut best_cost = cost(best);
    for d in options(instance, side, w, node) {
        let c = cost(d);
        if c < best_cost {
            best = d;
            best_cost = c;
        }
    }
    best
}

/// Structured reading of a model point: installed levels and the
/// assignments of every scenario block present in the model.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodedPoint {
    pub design: FirstStageDesign,
    pub assignments: BTreeMap<usize, ScenarioAssignment>,
}

/// Reads binary columns as set when above one half.
pub fn decode_point(milp: &GenericMilp, instance: &Instance, x: &[f64]) -> DecodedPoint {
    let mut design = FirstStageDesign::empty(instance);
    let mut assignments: BTreeMap<usize, ScenarioAssignment> = BTreeMap::new();
    fn entry<'a>(
        map: &'a mut BTreeMap<usize, ScenarioAssignment>,
        instance: &Instance,
        w: usize,
    ) -> &'a mut ScenarioAssignment {
        map.entry(w).or_insert_with(|| ScenarioAssignment {
            origins: vec![None; instance.scenario(w).origins()],
            destinations: vec![None; instance.scenario(w).destinations()],
            inbound_outsourcing: false,
            outbound_outsourcing: false,
        })
    }
    for (col, &value) in x.iter().enumerate() {
        let Some(sym) = milp.symbol(col) else { continue };
        if matches!(sym, Symbol::V { .. }) {
            continue;
        }
        let on = value > 0.5;
        match sym {
            Symbol::Alpha { door, level } if on => design.strip[door].insert(level),
            Symbol::Beta { door, level } if on => design.stack[door].insert(level),
            Symbol::AlphaOut { scenario } => entry(&mut assignments, instance, scenario).inbound_outsourcing = on,
            Symbol::BetaOut { scenario } => entry(&mut assignments, instance, scenario).outbound_outsourcing = on,
            Symbol::X { scenario, origin, dock } => {
                let a = entry(&mut assignments, instance, scenario);
                if on {
                    a.origins[origin] = Some(dock);
                }
            }
            Symbol::Y { scenario, destination, dock } => {
                let a = entry(&mut assignments, instance, scenario);
                if on {
                    a.destinations[destination] = Some(dock);
                }
            }
            _ => {}
        }
    }
    DecodedPoint { design, assignments }
}

/// Design restricted to single levels, for callers that need `k(i)`.
pub fn levels_of(set: &[LevelSet]) -> Vec<Option<usize>> {
    set.iter().map(|s| s.level()).collect()
}
