//! Solve policy for single-scenario assignment problems with fixed
//! capacities: exact search on small problems, local search otherwise.

use cddp_core::bq::solve_omega_exact;
use cddp_core::lsh::{solve_omega_lsh, LshParams, OmegaSubmodel};
use cddp_core::model::Side;
use cddp_core::solve::SolveResult;
use cddp_core::{ScenarioAssignment, SolveStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OmegaPolicy {
    /// Exact search when |M| * |I| is at most this.
    pub exact_threshold: usize,
    /// Node budget of the exact search.
    pub node_limit: u64,
    pub lsh: LshParams,
}

impl Default for OmegaPolicy {
    fn default() -> Self {
        Self { exact_threshold: 64, node_limit: 2_000_000, lsh: LshParams::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OmegaMethod {
    Exact,
    Lsh,
}

impl OmegaMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            OmegaMethod::Exact => "exact",
            OmegaMethod::Lsh => "lsh",
        }
    }
}

impl OmegaPolicy {
    pub fn method(&self, sub: &OmegaSubmodel<'_>) -> OmegaMethod {
        let size = sub.instance.scenario(sub.scenario).origins() * sub.instance.door_count(Side::Strip);
        if size <= self.exact_threshold {
            OmegaMethod::Exact
        } else {
            OmegaMethod::Lsh
        }
    }
}

/// Local search first; on small problems an exact search then tries to
/// beat its value. The result always carries a feasible assignment.
pub fn solve_omega(sub: &OmegaSubmodel<'_>, policy: &OmegaPolicy) -> (OmegaMethod, SolveResult<ScenarioAssignment>) {
    let heuristic = solve_omega_lsh(sub, &policy.lsh);
    let method = policy.method(sub);
    if method == OmegaMethod::Lsh {
        return (method, heuristic);
    }
    let value = heuristic.incumbent.expect("local search always returns a value");
    let cutoff = value - 1e-9 * value.abs().max(1.0);
    let exact = solve_omega_exact(sub, Some(cutoff), policy.node_limit);
    let local = heuristic.solution.expect("paired with value");
    let result = match (exact.status, exact.solution, exact.incumbent) {
        (SolveStatus::Optimal, Some(s), Some(v)) => SolveResult::optimal(v, s, exact.nodes),
        // nothing strictly below the local search value exists
        (SolveStatus::Infeasible, _, _) => SolveResult::optimal(value, local, exact.nodes),
        (_, Some(s), Some(v)) => SolveResult::limited(Some((v, s)), exact.bound, exact.nodes),
        _ => SolveResult::limited(Some((value, local)), exact.bound, exact.nodes),
    };
    (method, result)
}
