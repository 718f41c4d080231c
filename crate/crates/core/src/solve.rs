/// Outcome class of a solver call.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    /// Incumbent proven optimal.
    Optimal,
    /// Limit reached with an incumbent and a proven bound.
    Feasible,
    Infeasible,
    /// Limit reached with a proven bound but no incumbent.
    BoundOnly,
    /// Limit reached before anything useful was proven.
    Timeout,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::BoundOnly => "bound-only",
            SolveStatus::Timeout => "timeout",
        }
    }
}

impl core::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Relative tolerance under which an incumbent and a bound count as equal.
pub const OPTIMALITY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult<S> {
    pub status: SolveStatus,
    pub incumbent: Option<f64>,
    /// Proven lower bound on the optimum; never above `incumbent`.
    pub bound: Option<f64>,
    pub solution: Option<S>,
    pub nodes: u64,
    /// Seconds; 0 for the clock-free solvers.
    pub wall_time: f64,
}

impl<S> SolveResult<S> {
    pub fn optimal(value: f64, solution: S, nodes: u64) -> Self {
        Self {
            status: SolveStatus::Optimal,
            incumbent: Some(value),
            bound: Some(value),
            solution: Some(solution),
            nodes,
            wall_time: 0.0,
        }
    }

    pub fn infeasible(nodes: u64) -> Self {
        Self { status: SolveStatus::Infeasible, incumbent: None, bound: None, solution: None, nodes, wall_time: 0.0 }
    }

    /// Heuristic answer: an incumbent and nothing proven.
    pub fn heuristic(value: f64, solution: S, nodes: u64) -> Self {
        Self {
            status: SolveStatus::Feasible,
            incumbent: Some(value),
            bound: None,
            solution: Some(solution),
            nodes,
            wall_time: 0.0,
        }
    }

    /// Result after a limit: status follows from what is known.
    pub fn limited(incumbent: Option<(f64, S)>, bound: Option<f64>, nodes: u64) -> Self {
        let (value, solution) = match incumbent {
            Some((v, s)) => (Some(v), Some(s)),
            None => (None, None),
        };
        let bound = match (bound, value) {
            (Some(b), Some(v)) => Some(b.min(v)),
            (b, _) => b,
        };
        let status = match (value, bound) {
            (Some(v), Some(b)) if close(v, b) => SolveStatus::Optimal,
            (Some(_), _) => SolveStatus::Feasible,
            (None, Some(_)) => SolveStatus::BoundOnly,
            (None, None) => SolveStatus::Timeout,
        };
        Self { status, incumbent: value, bound, solution, nodes, wall_time: 0.0 }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn map<T>(self, f: impl FnOnce(S) -> T) -> SolveResult<T> {
        SolveResult {
            status: self.status,
            incumbent: self.incumbent,
            bound: self.bound,
            solution: self.solution.map(f),
            nodes: self.nodes,
            wall_time: self.wall_time,
        }
    }
}

/// `a` and `b` agree within [`OPTIMALITY_TOL`] relative to their magnitude.
pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= OPTIMALITY_TOL * a.abs().max(b.abs()).max(1.0)
}
