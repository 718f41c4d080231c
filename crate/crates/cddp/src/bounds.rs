//! Cluster submodel solves and the aggregate lower bounds.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use cddp_core::cluster::{
    build_c_submodel, build_stack_c_submodel, build_strip_c_submodel, lower_bound, AggregateBound, BoundOption,
    Cluster, ClusterBound, ClusterSet, SubmodelBound,
};
use cddp_core::heuristic::descend_design;
use cddp_core::lip::{decode_point, encode_point, DecodedPoint};
use cddp_core::lsh::LshParams;
use cddp_core::{count_dims, Instance, ModelDims, SolveStatus};

use crate::bb::{solve_bb, BbParams};
use crate::par::map_ordered;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Part {
    Full,
    Strip,
    Stack,
}

impl Part {
    pub fn as_str(self) -> &'static str {
        match self {
            Part::Full => "full",
            Part::Strip => "strip",
            Part::Stack => "stack",
        }
    }

    pub fn of(option: BoundOption) -> &'static [Part] {
        match option {
            BoundOption::Full => &[Part::Full],
            BoundOption::Split => &[Part::Strip, Part::Stack],
        }
    }
}

/// Limits for one submodel solve. A missing limit means solve to
/// optimality.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SubmodelLimits {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    /// Local search used by the design descent that seeds each solve.
    pub lsh: LshParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartSolve {
    pub part: Part,
    pub status: SolveStatus,
    pub incumbent: Option<f64>,
    pub bound: Option<f64>,
    pub nodes: u64,
    pub wall_time: f64,
    pub dims: ModelDims,
    /// Structured incumbent, when one was found.
    pub point: Option<DecodedPoint>,
}

impl PartSolve {
    pub fn as_bound(&self) -> SubmodelBound {
        SubmodelBound { value: self.bound, proven_optimal: self.status == SolveStatus::Optimal }
    }
}

pub fn solve_part(instance: &Instance, cluster: &Cluster, part: Part, limits: &SubmodelLimits) -> PartSolve {
    let start = Instant::now();
    let milp = match part {
        Part::Full => build_c_submodel(instance, cluster),
        Part::Strip => build_strip_c_submodel(instance, cluster),
        Part::Stack => build_stack_c_submodel(instance, cluster),
    };
    let weighted: Vec<(usize, f64)> = cluster.scenarios.iter().copied().zip(cluster.conditional.iter().copied()).collect();
    let seed = descend_design(instance, &weighted, &cluster.strip_doors, &cluster.stack_doors, &limits.lsh);
    let assignments: BTreeMap<usize, _> = cluster.scenarios.iter().copied().zip(seed.assignments).collect();
    let initial = encode_point(&milp, instance, Some(&seed.design), &assignments);
    let time_limit = limits.time_limit.map(|t| t.saturating_sub(start.elapsed()));
    let r = solve_bb(&milp, &BbParams { time_limit, node_limit: limits.node_limit, initial: Some(initial) });
    let point = r.solution.as_ref().map(|x| decode_point(&milp, instance, x));
    PartSolve {
        part,
        status: r.status,
        incumbent: r.incumbent,
        bound: r.bound,
        nodes: r.nodes,
        wall_time: start.elapsed().as_secs_f64(),
        dims: count_dims(&milp),
        point,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSolve {
    pub cluster: usize,
    pub weight: f64,
    pub parts: Vec<PartSolve>,
}

impl ClusterSolve {
    pub fn bound(&self) -> ClusterBound {
        ClusterBound { cluster: self.cluster, weight: self.weight, parts: self.parts.iter().map(PartSolve::as_bound).collect() }
    }

    pub fn part(&self, part: Part) -> Option<&PartSolve> {
        self.parts.iter().find(|p| p.part == part)
    }
}

pub fn solve_cluster(instance: &Instance, cluster: &Cluster, parts: &[Part], limits: &SubmodelLimits) -> ClusterSolve {
    ClusterSolve {
        cluster: cluster.id,
        weight: cluster.weight,
        parts: parts.iter().map(|&p| solve_part(instance, cluster, p, limits)).collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundRun {
    pub option: BoundOption,
    pub clusters: Vec<ClusterSolve>,
    pub aggregate: AggregateBound,
    pub wall_time: f64,
}

/// Solves every cluster submodel of one option on up to `jobs` threads
/// and aggregates in cluster order.
pub fn cluster_bounds(
    instance: &Instance,
    set: &ClusterSet,
    option: BoundOption,
    limits: &SubmodelLimits,
    jobs: usize,
) -> BoundRun {
    let start = Instant::now();
    let parts = Part::of(option);
    let clusters = map_ordered(&set.clusters, jobs, |_, c| solve_cluster(instance, c, parts, limits));
    let bounds: Vec<ClusterBound> = clusters.iter().map(ClusterSolve::bound).collect();
    BoundRun { option, aggregate: lower_bound(&bounds), clusters, wall_time: start.elapsed().as_secs_f64() }
}
