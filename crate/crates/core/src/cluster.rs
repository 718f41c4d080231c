//! Scenario clusters, their submodels and the weighted lower bounds.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lip::{build_submodel, Coupling, FirstStage, SubmodelSpec};
use crate::milp::GenericMilp;
use crate::model::{Instance, Side};

/// Scenario grouping key: origin and destination counts.
pub type GroupKey = (usize, usize);

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub id: usize,
    pub scenarios: Vec<usize>,
    /// Sum of the member scenario weights.
    pub weight: f64,
    /// Member weights divided by `weight`, aligned with `scenarios`.
    pub conditional: Vec<f64>,
    /// Doors eligible for at least one node of some member scenario.
    pub strip_doors: Vec<usize>,
    pub stack_doors: Vec<usize>,
    pub group: GroupKey,
    pub kappa: usize,
}

impl Cluster {
    pub fn new(instance: &Instance, id: usize, scenarios: Vec<usize>, kappa: usize) -> Self {
        let weight: f64 = scenarios.iter().map(|&w| instance.scenario(w).weight()).sum();
        let conditional = scenarios.iter().map(|&w| instance.scenario(w).weight() / weight).collect();
        let doors = |side: Side| -> Vec<usize> {
            let mut set = BTreeSet::new();
            for &w in &scenarios {
                for node in 0..instance.scenario(w).nodes(side) {
                    set.extend(instance.eligible_doors(side, w, node).iter().copied());
                }
            }
            set.into_iter().collect()
        };
        let strip_doors = doors(Side::Strip);
        let stack_doors = doors(Side::Stack);
        let group = scenarios
            .first()
            .map_or((0, 0), |&w| (instance.scenario(w).origins(), instance.scenario(w).destinations()));
        Self { id, scenarios, weight, conditional, strip_doors, stack_doors, group, kappa }
    }

    pub fn is_singleton(&self) -> bool {
        self.scenarios.len() == 1
    }

    fn spec(&self, coupling: Coupling, tag: &str) -> SubmodelSpec {
        SubmodelSpec {
            name: format!("{tag}_{}", self.id + 1),
            scenarios: self.scenarios.iter().copied().zip(self.conditional.iter().copied()).collect(),
            first_stage: FirstStage::Columns {
                strip_doors: self.strip_doors.clone(),
                stack_doors: self.stack_doors.clone(),
            },
            coupling,
        }
    }
}

/// Cluster size per step-1 group: a default with per-group overrides.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KappaRule {
    pub default: usize,
    pub overrides: BTreeMap<GroupKey, usize>,
}

impl KappaRule {
    pub fn uniform(kappa: usize) -> Self {
        Self { default: kappa, overrides: BTreeMap::new() }
    }

    pub fn for_group(&self, key: GroupKey) -> usize {
        self.overrides.get(&key).copied().unwrap_or(self.default)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ClusterError {
    #[error("cluster size must be at least 1")]
    Kappa,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
    pub seed: u64,
}

impl ClusterSet {
    /// Every scenario in its own cluster.
    pub fn singletons(instance: &Instance) -> Self {
        let clusters = (0..instance.scenarios().len()).map(|w| Cluster::new(instance, w, alloc::vec![w], 1)).collect();
        Self { clusters, seed: 0 }
    }

    /// One cluster holding every scenario.
    pub fn whole(instance: &Instance) -> Self {
        let n = instance.scenarios().len();
        Self { clusters: alloc::vec![Cluster::new(instance, 0, (0..n).collect(), n.max(1))], seed: 0 }
    }
}

/// Two-step partition: scenarios with equal node counts form a group, and
/// each group is shuffled and cut into chunks of its κ, the last chunk
/// taking the remainder.
pub fn generate_clusters(instance: &Instance, kappa: &KappaRule, seed: u64) -> Result<ClusterSet, ClusterError> {
    if kappa.default == 0 || kappa.overrides.values().any(|&k| k == 0) {
        return Err(ClusterError::Kappa);
    }
    let mut groups: BTreeMap<GroupKey, Vec<usize>> = BTreeMap::new();
    for (w, s) in instance.scenarios().iter().enumerate() {
        groups.entry((s.origins(), s.destinations())).or_default().push(w);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clusters = Vec::new();
    for (key, mut members) in groups {
        members.shuffle(&mut rng);
        let k = kappa.for_group(key);
        for chunk in members.chunks(k) {
            let id = clusters.len();
            clusters.push(Cluster::new(instance, id, chunk.to_vec(), k));
        }
    }
    Ok(ClusterSet { clusters, seed })
}

/// Linearized model of one cluster: copied first-stage columns over the
/// cluster's doors and the member scenarios at conditional weights.
pub fn build_c_submodel(instance: &Instance, cluster: &Cluster) -> GenericMilp {
    build_submodel(instance, &cluster.spec(Coupling::Both, "cluster"))
}

/// Strip-side relaxation: strip rows only, half the operational costs.
pub fn build_strip_c_submodel(instance: &Instance, cluster: &Cluster) -> GenericMilp {
    build_submodel(instance, &cluster.spec(Coupling::StripOnly, "strip"))
}

pub fn build_stack_c_submodel(instance: &Instance, cluster: &Cluster) -> GenericMilp {
    build_submodel(instance, &cluster.spec(Coupling::StackOnly, "stack"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundOption {
    /// One submodel per cluster.
    Full,
    /// Separate strip and stack submodels per cluster.
    Split,
}

/// Outcome of one submodel solve as it enters a bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubmodelBound {
    /// Proven lower bound on the submodel optimum, if any.
    pub value: Option<f64>,
    pub proven_optimal: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterBound {
    pub cluster: usize,
    pub weight: f64,
    /// One entry for [`BoundOption::Full`]; strip then stack for `Split`.
    pub parts: Vec<SubmodelBound>,
}

impl ClusterBound {
    pub fn value(&self) -> Option<f64> {
        self.parts.iter().map(|p| p.value).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundStatus {
    /// Every submodel solved to optimality.
    Exact,
    /// Valid, but some submodel contributed only its proven bound.
    Relaxed,
    /// Some submodel has no proven bound.
    Invalid,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregateBound {
    pub value: Option<f64>,
    pub status: BoundStatus,
}

/// `sum_c w^c * value_c`, in cluster order.
pub fn lower_bound(bounds: &[ClusterBound]) -> AggregateBound {
    let mut total = 0.0;
    let mut status = BoundStatus::Exact;
    for b in bounds {
        match b.value() {
            None => return AggregateBound { value: None, status: BoundStatus::Invalid },
            Some(v) => total += b.weight * v,
        }
        if b.parts.iter().any(|p| !p.proven_optimal) {
            status = BoundStatus::Relaxed;
        }
    }
    AggregateBound { value: Some(total), status }
}
