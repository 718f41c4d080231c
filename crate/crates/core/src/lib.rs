//! Two-stage stochastic cross-dock door design: problem data, the exact
//! linearized model and its scenario-cluster submodels, instance
//! generation, and the clock-free solvers (local search, combinatorial
//! branch-and-bound, brute-force enumeration).
//!
//! The crate is `no_std` and only needs `alloc`. Anything that reads a clock
//! or touches files lives in the `cddp` crate.
#![no_std]

extern crate alloc;

pub mod bq;
pub mod cluster;
pub mod error;
pub mod feasibility;
pub mod heuristic;
pub mod lip;
pub mod milp;
pub mod lsh;
pub mod model;
pub mod oracle;
pub mod solve;
pub mod testbed;

pub use error::{EvalError, ModelError};
pub use feasibility::{check_feasibility, Entity, Family, Violation};
pub use lip::{build_lip, build_submodel, Coupling, FirstStage, SubmodelSpec};
pub use milp::{count_dims, GenericMilp, ModelDims, Sense, Symbol, VarKind};
pub use model::{
    derive_totals, evaluate_solution, CostBreakdown, Dock, DoorSpec, FirstStageDesign, FlowMatrix, Instance,
    InstanceData, LevelSet, Scenario, ScenarioAssignment, Side, Solution,
};
pub use solve::{SolveResult, SolveStatus};
