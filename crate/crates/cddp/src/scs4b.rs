//! Scenario clustering and splitting matheuristic: a singleton design
//! pool, cluster submodels for designs and lower bounds, lazy evaluation of
//! each fixed design over all scenarios, and capacity escalation.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use cddp_core::cluster::{generate_clusters, BoundOption, Cluster, ClusterBound, ClusterError, ClusterSet, KappaRule,
    SubmodelBound,
};
use cddp_core::lip::{design_capacity, DecodedPoint};
use cddp_core::lsh::OmegaSubmodel;
use cddp_core::model::LevelSet;
use cddp_core::{FirstStageDesign, Instance, ModelError, ScenarioAssignment, Side, Solution};
use thiserror::Error;

use crate::bounds::{solve_part, ClusterSolve, Part, PartSolve, SubmodelLimits};
use crate::omega::{solve_omega, OmegaPolicy};
use crate::par::map_ordered;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Escalation {
    /// `k := min(k + delta, K)`.
    Levels,
    /// `k := min(k + delta * K, K)`: every escalation saturates.
    Saturate,
}

/// Which uninstalled doors receive their basic capacity during lazy
/// evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasicCapacity {
    /// Only for scenarios that would otherwise outsource.
    Fallback,
    /// In every scenario.
    Always,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scs4bParams {
    pub kappa: KappaRule,
    pub seed: u64,
    /// Largest admitted fraction of outsourcing flags, out <= rho |Omega|.
    pub rho: f64,
    pub delta: usize,
    /// Submodels that supply designs and the primary bound.
    pub option: BoundOption,
    /// Also compute the bound of the other option.
    pub both_bounds: bool,
    pub limits: SubmodelLimits,
    pub omega: OmegaPolicy,
    pub escalation: Escalation,
    pub basic: BasicCapacity,
    pub jobs: usize,
    /// Incumbent of another method, for the goodness ratio.
    pub reference_value: Option<f64>,
}

impl Default for Scs4bParams {
    fn default() -> Self {
        Self {
            kappa: KappaRule::uniform(2),
            seed: 0,
            rho: 0.0,
            delta: 1,
            option: BoundOption::Full,
            both_bounds: false,
            limits: SubmodelLimits::default(),
            omega: OmegaPolicy::default(),
            escalation: Escalation::Levels,
            basic: BasicCapacity::Fallback,
            jobs: 1,
            reference_value: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum Scs4bError {
    #[error("rho must lie in [0, 1], got {0}")]
    Rho(f64),
    #[error("delta must be at least 1")]
    Delta,
    #[error("reference value must be positive and finite")]
    Reference,
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl Scs4bParams {
    pub fn validate(&self) -> Result<(), Scs4bError> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Scs4bError::Rho(self.rho));
        }
        if self.delta == 0 {
            return Err(Scs4bError::Delta);
        }
        if self.reference_value.is_some_and(|r| !(r.is_finite() && r > 0.0)) {
            return Err(Scs4bError::Reference);
        }
        if self.kappa.default == 0 || self.kappa.overrides.values().any(|&k| k == 0) {
            return Err(ClusterError::Kappa.into());
        }
        Ok(())
    }

    fn parts(&self) -> Vec<Part> {
        let mut parts = Part::of(self.option).to_vec();
        if self.both_bounds {
            parts.extend_from_slice(Part::of(other(self.option)));
        }
        parts
    }
}

fn other(option: BoundOption) -> BoundOption {
    match option {
        BoundOption::Full => BoundOption::Split,
        BoundOption::Split => BoundOption::Full,
    }
}

/// `100 (upper - lower) / upper`.
pub fn gap_percent(upper: f64, lower: f64) -> f64 {
    100.0 * (upper - lower) / upper
}

pub fn goodness_ratio(value: f64, reference: f64) -> f64 {
    value / reference
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Incumbent,
    NoIncumbent,
    /// Every scenario needed outsourcing in its singleton submodel.
    EmptyPool,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Incumbent => "incumbent",
            RunStatus::NoIncumbent => "no-incumbent",
            RunStatus::EmptyPool => "empty-pool",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrialSource {
    /// Singleton cluster, design from the pool.
    Pool,
    /// Design of the cluster's own submodel.
    Submodel,
    /// Member of a cluster whose submodel outsourced; pool design.
    Explored,
}

impl TrialSource {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialSource::Pool => "pool",
            TrialSource::Submodel => "submodel",
            TrialSource::Explored => "explored",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Accepted,
    Escalated,
    Rejected,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Accepted => "accepted",
            Decision::Escalated => "escalated",
            Decision::Rejected => "rejected",
        }
    }
}

/// One evaluated design.
#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    /// Cluster id in the refined instance.
    pub cluster: usize,
    /// Refined scenario index for explored singletons.
    pub scenario: Option<usize>,
    pub source: TrialSource,
    /// Escalation round, 0 for the design as retrieved.
    pub round: usize,
    pub design: FirstStageDesign,
    pub out: usize,
    pub install_cost: f64,
    pub value: f64,
    pub decision: Decision,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub option: BoundOption,
    pub value: Option<f64>,
    pub status: cddp_core::cluster::BoundStatus,
    /// Summed solve time of the submodels entering this bound.
    pub time: f64,
}

/// Skipped cluster or scenario: its submodel returned no design.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skip {
    pub cluster: Option<usize>,
    pub scenario: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scs4bReport {
    pub status: RunStatus,
    /// Original indices of the scenarios kept and removed in the pool step.
    pub kept: Vec<usize>,
    pub removed: Vec<usize>,
    pub removed_weight: f64,
    /// The instance the algorithm ran on: kept scenarios, renormalized.
    pub refined: Option<Instance>,
    pub clusters: Option<ClusterSet>,
    pub cluster_solves: Vec<ClusterSolve>,
    pub bounds: Vec<BoundReport>,
    pub incumbent: Option<f64>,
    pub solution: Option<Solution>,
    pub trials: Vec<Trial>,
    pub skipped: Vec<Skip>,
    pub omega_methods: BTreeSet<&'static str>,
    pub wall_time: f64,
    pub reference_value: Option<f64>,
}

impl Scs4bReport {
    pub fn bound(&self, option: BoundOption) -> Option<&BoundReport> {
        self.bounds.iter().find(|b| b.option == option)
    }

    /// Best valid lower bound over the computed options.
    pub fn best_bound(&self) -> Option<f64> {
        self.bounds
            .iter()
            .filter(|b| b.status != cddp_core::cluster::BoundStatus::Invalid)
            .filter_map(|b| b.value)
            .reduce(f64::max)
    }

    pub fn gap(&self) -> Option<f64> {
        Some(gap_percent(self.incumbent?, self.best_bound()?))
    }

    pub fn goodness(&self) -> Option<f64> {
        Some(goodness_ratio(self.incumbent?, self.reference_value?))
    }

    /// Outsourcing flags of the incumbent.
    pub fn out(&self) -> usize {
        self.solution.as_ref().map_or(0, |s| s.assignments.iter().map(ScenarioAssignment::outsourcing_flags).sum())
    }
}

/// Design of a solved cluster and whether its scenarios outsource.
fn design_of(instance: &Instance, parts: &[PartSolve], option: BoundOption) -> Option<(FirstStageDesign, bool)> {
    let point = |p: Part| parts.iter().find(|s| s.part == p).and_then(|s| s.point.as_ref());
    let outsourced = |pt: &DecodedPoint, side: Side| pt.assignments.values().any(|a| a.flag(side));
    match option {
        BoundOption::Full => {
            let pt = point(Part::Full)?;
            let out = outsourced(pt, Side::Strip) || outsourced(pt, Side::Stack);
            Some((single_levels(&pt.design), out))
        }
        BoundOption::Split => {
            let (s, t) = (point(Part::Strip)?, point(Part::Stack)?);
            let mut design = FirstStageDesign::empty(instance);
            design.strip = single_levels(&s.design).strip;
            design.stack = single_levels(&t.design).stack;
            Some((design, outsourced(s, Side::Strip) || outsourced(t, Side::Stack)))
        }
    }
}

/// Keeps the highest level of each door; feasible points carry one level.
fn single_levels(d: &FirstStageDesign) -> FirstStageDesign {
    let top = |v: &[LevelSet]| v.iter().map(|s| LevelSet::from_level(s.iter().last())).collect();
    FirstStageDesign { strip: top(&d.strip), stack: top(&d.stack) }
}

/// Result of fixing a design and solving every scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct LazyEvaluation {
    /// Used doors at their levels; level 0 marks a basic capacity.
    pub design: FirstStageDesign,
    pub assignments: Vec<ScenarioAssignment>,
    pub out: usize,
    pub install_cost: f64,
    pub value: f64,
    pub methods: BTreeSet<&'static str>,
}

/// Solves each scenario under the fixed design. Doors of the cluster
/// without a level may receive their basic capacity; only doors some
/// scenario uses are paid for.
pub fn lazy_evaluate(
    instance: &Instance,
    design: &FirstStageDesign,
    basic_doors: (&[usize], &[usize]),
    policy: &OmegaPolicy,
    basic: BasicCapacity,
    jobs: usize,
) -> LazyEvaluation {
    let capacities = |side: Side, with_basic: bool| -> Vec<f64> {
        let allowed = match side {
            Side::Strip => basic_doors.0,
            Side::Stack => basic_doors.1,
        };
        (0..instance.door_count(side))
            .map(|d| design_capacity(instance, design, side, d, with_basic && allowed.contains(&d)))
            .collect()
    };
    let solve = |w: usize, with_basic: bool| {
        let sub = OmegaSubmodel::with_nominal(instance, w, capacities(Side::Strip, with_basic), capacities(Side::Stack, with_basic));
        let (method, r) = solve_omega(&sub, policy);
        (method, r.incumbent.expect("omega solves keep an incumbent"), r.solution.expect("omega solves keep a solution"))
    };
    let scenarios: Vec<usize> = (0..instance.scenarios().len()).collect();
    let results = map_ordered(&scenarios, jobs, |_, &w| {
        let first = solve(w, basic == BasicCapacity::Always);
        if basic == BasicCapacity::Fallback && first.2.uses_outsourcing() {
            let second = solve(w, true);
            if second.1 < first.1 {
                return second;
            }
        }
        first
    });

    let mut used = FirstStageDesign::empty(instance);
    let mut value = 0.0;
    let mut out = 0;
    let mut methods = BTreeSet::new();
    let mut assignments = Vec::with_capacity(results.len());
    for (w, (method, v, a)) in results.into_iter().enumerate() {
        value += instance.scenario(w).weight() * v;
        out += a.outsourcing_flags();
        methods.insert(method.as_str());
        for side in [Side::Strip, Side::Stack] {
            for d in a.side(side).iter().flatten().filter_map(|d| d.door()) {
                let level = design.level(side, d).unwrap_or(0);
                used.side_mut(side)[d] = LevelSet::single(level);
            }
        }
        assignments.push(a);
    }
    let install_cost = used.install_cost(instance);
    LazyEvaluation { design: used, assignments, out, install_cost, value: install_cost + value, methods }
}

/// Raises every door with `0 < k < K`. `None` when no door can grow.
pub fn escalate(instance: &Instance, design: &FirstStageDesign, delta: usize, rule: Escalation) -> Option<FirstStageDesign> {
    let mut next = design.clone();
    let mut grew = false;
    for side in [Side::Strip, Side::Stack] {
        for (d, spec) in instance.doors(side).iter().enumerate() {
            let top = spec.levels();
            let Some(k) = design.level(side, d) else { continue };
            if k == 0 || k >= top {
                continue;
            }
            let step = match rule {
                Escalation::Levels => delta,
                Escalation::Saturate => delta.saturating_mul(top),
            };
            next.side_mut(side)[d] = LevelSet::single(k.saturating_add(step).min(top));
            grew = true;
        }
    }
    grew.then_some(next)
}

/// Relative improvement threshold; none against an infinite value.
fn tol(v: f64) -> f64 {
    if v.is_finite() {
        1e-9 * v.abs().max(1.0)
    } else {
        0.0
    }
}

struct Explorer<'a> {
    instance: &'a Instance,
    params: &'a Scs4bParams,
    cache: HashMap<(FirstStageDesign, Vec<usize>, Vec<usize>), LazyEvaluation>,
    incumbent: Option<(f64, Solution)>,
    trials: Vec<Trial>,
    methods: BTreeSet<&'static str>,
}

impl Explorer<'_> {
    fn evaluate(&mut self, design: &FirstStageDesign, cluster: &Cluster) -> LazyEvaluation {
        let key = (design.clone(), cluster.strip_doors.clone(), cluster.stack_doors.clone());
        if let Some(e) = self.cache.get(&key) {
            return e.clone();
        }
        let e = lazy_evaluate(
            self.instance,
            design,
            (&cluster.strip_doors, &cluster.stack_doors),
            &self.params.omega,
            self.params.basic,
            self.params.jobs,
        );
        self.methods.extend(e.methods.iter().copied());
        self.cache.insert(key, e.clone());
        e
    }

    /// Evaluation and escalation loop of one design.
    fn explore(&mut self, cluster: &Cluster, scenario: Option<usize>, source: TrialSource, design: FirstStageDesign) {
        let budget = self.params.rho * self.instance.scenarios().len() as f64;
        let mut design = design;
        for round in 0.. {
            let e = self.evaluate(&design, cluster);
            let best = self.incumbent.as_ref().map_or(f64::INFINITY, |(v, _)| *v);
            let admissible = e.out as f64 <= budget + 1e-9;
            let decision = if admissible && e.value < best - tol(best) {
                Decision::Accepted
            } else if let Some(next) = escalate(self.instance, &design, self.params.delta, self.params.escalation) {
                design = next;
                Decision::Escalated
            } else {
                Decision::Rejected
            };
            self.trials.push(Trial {
                cluster: cluster.id,
                scenario,
                source,
                round,
                design: e.design.clone(),
                out: e.out,
                install_cost: e.install_cost,
                value: e.value,
                decision,
            });
            match decision {
                Decision::Accepted => {
                    self.incumbent = Some((e.value, Solution { design: e.design, assignments: e.assignments }));
                    return;
                }
                Decision::Rejected => return,
                Decision::Escalated => {}
            }
        }
    }
}

fn bound_report(option: BoundOption, solves: &[ClusterSolve]) -> BoundReport {
    let parts = Part::of(option);
    let bounds: Vec<ClusterBound> = solves
        .iter()
        .map(|c| ClusterBound {
            cluster: c.cluster,
            weight: c.weight,
            parts: parts.iter().map(|&p| c.part(p).map_or(SubmodelBound { value: None, proven_optimal: false }, PartSolve::as_bound)).collect(),
        })
        .collect();
    let time = solves.iter().flat_map(|c| c.parts.iter()).filter(|p| parts.contains(&p.part)).map(|p| p.wall_time).sum();
    let agg = cddp_core::cluster::lower_bound(&bounds);
    BoundReport { option, value: agg.value, status: agg.status, time }
}

pub fn run(instance: &Instance, params: &Scs4bParams) -> Result<Scs4bReport, Scs4bError> {
    params.validate()?;
    let start = Instant::now();
    let parts = params.parts();
    let design_parts = Part::of(params.option);
    let n = instance.scenarios().len();

    // pool of singleton designs
    let singles: Vec<Cluster> = (0..n).map(|w| Cluster::new(instance, w, vec![w], 1)).collect();
    let pool_solves: Vec<Vec<PartSolve>> = map_ordered(&singles, params.jobs, |_, c| {
        design_parts.iter().map(|&p| solve_part(instance, c, p, &params.limits)).collect()
    });
    let mut pool: Vec<Option<FirstStageDesign>> = Vec::with_capacity(n);
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    let mut skipped = Vec::new();
    for (w, solves) in pool_solves.iter().enumerate() {
        match design_of(instance, solves, params.option) {
            Some((_, true)) => removed.push(w),
            Some((d, false)) => {
                kept.push(w);
                pool.push(Some(d));
            }
            None => {
                kept.push(w);
                pool.push(None);
            }
        }
    }
    let removed_weight = removed.iter().map(|&w| instance.scenario(w).weight()).sum();
    let mut report = Scs4bReport {
        status: RunStatus::EmptyPool,
        kept: kept.clone(),
        removed,
        removed_weight,
        refined: None,
        clusters: None,
        cluster_solves: Vec::new(),
        bounds: Vec::new(),
        incumbent: None,
        solution: None,
        trials: Vec::new(),
        skipped: Vec::new(),
        omega_methods: BTreeSet::new(),
        wall_time: 0.0,
        reference_value: params.reference_value,
    };
    if kept.is_empty() {
        report.wall_time = start.elapsed().as_secs_f64();
        return Ok(report);
    }
    let refined = instance.restricted(&kept)?;
    // pooled solves indexed by refined scenario
    let mut pooled: Vec<Vec<PartSolve>> = Vec::with_capacity(kept.len());
    for &w in &kept {
        pooled.push(pool_solves[w].clone());
    }

    // clusters, their submodels and the bounds
    let set = generate_clusters(&refined, &params.kappa, params.seed)?;
    let cluster_solves = map_ordered(&set.clusters, params.jobs, |_, c| {
        let reuse: &[PartSolve] = if c.is_singleton() { &pooled[c.scenarios[0]] } else { &[] };
        let parts = parts
            .iter()
            .map(|&p| match reuse.iter().find(|s| s.part == p) {
                Some(s) => s.clone(),
                None => solve_part(&refined, c, p, &params.limits),
            })
            .collect();
        ClusterSolve { cluster: c.id, weight: c.weight, parts }
    });
    let mut options = vec![params.option];
    if params.both_bounds {
        options.push(other(params.option));
    }
    report.bounds = options.iter().map(|&o| bound_report(o, &cluster_solves)).collect();

    // exploration in descending weight
    let mut order: Vec<&Cluster> = set.clusters.iter().collect();
    order.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.id.cmp(&b.id)));
    let mut ex = Explorer {
        instance: &refined,
        params,
        cache: HashMap::new(),
        incumbent: None,
        trials: Vec::new(),
        methods: BTreeSet::new(),
    };
    for c in order {
        if c.is_singleton() {
            let w = c.scenarios[0];
            match &pool[w] {
                Some(d) => ex.explore(c, None, TrialSource::Pool, d.clone()),
                None => skipped.push(Skip { cluster: Some(c.id), scenario: kept[w] }),
            }
            continue;
        }
        match design_of(&refined, &cluster_solves[c.id].parts, params.option) {
            Some((d, false)) => ex.explore(c, None, TrialSource::Submodel, d),
            Some((_, true)) => {
                for &w in &c.scenarios {
                    let single = Cluster::new(&refined, c.id, vec![w], 1);
                    match &pool[w] {
                        Some(d) => ex.explore(&single, Some(w), TrialSource::Explored, d.clone()),
                        None => skipped.push(Skip { cluster: Some(c.id), scenario: kept[w] }),
                    }
                }
            }
            None => skipped.extend(c.scenarios.iter().map(|&w| Skip { cluster: Some(c.id), scenario: kept[w] })),
        }
    }

    report.status = if ex.incumbent.is_some() { RunStatus::Incumbent } else { RunStatus::NoIncumbent };
    if let Some((v, s)) = ex.incumbent {
        report.incumbent = Some(v);
        report.solution = Some(s);
    }
    report.trials = ex.trials;
    report.omega_methods = ex.methods;
    report.skipped = skipped;
    report.refined = Some(refined);
    report.clusters = Some(set);
    report.cluster_solves = cluster_solves;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}
