use thiserror::Error;

use crate::model::Side;

/// Rejected instance data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("negative flow {value} from origin {origin} to destination {destination}")]
    NegativeFlow { origin: usize, destination: usize, value: f64 },
    #[error("flow matrix is ragged or out of range at origin {origin}")]
    FlowShape { origin: usize },
    #[error("{side} door {door}: {reason}")]
    Door { side: Side, door: usize, reason: &'static str },
    #[error("door count upper bounds must be at least 1")]
    DoorBound,
    #[error("distance matrix has {found} entries, expected {expected}")]
    DistanceShape { expected: usize, found: usize },
    #[error("distances must be finite and nonnegative")]
    NegativeDistance,
    #[error("outsourcing penalty must be positive")]
    Penalty,
    #[error("scenario {scenario} has weight {weight} outside (0, 1]")]
    Weight { scenario: usize, weight: f64 },
    #[error("scenario weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },
    #[error("scenario {scenario}: {side} disruption vector does not match the door count")]
    DisruptionShape { scenario: usize, side: Side },
    #[error("scenario {scenario}: {side} door {door} disruption {value} outside [0, 1]")]
    Disruption { scenario: usize, side: Side, door: usize, value: f64 },
}

/// Failure to evaluate a solution.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no assignment for scenario {scenario}")]
    MissingScenario { scenario: usize },
    #[error("more assignments than scenarios")]
    ExtraScenarios,
    #[error("scenario {scenario}: assignment length does not match node counts")]
    Shape { scenario: usize },
    #[error("scenario {scenario}: {side} node {node} is unassigned")]
    Unassigned { scenario: usize, side: Side, node: usize },
    #[error("design does not match the door counts")]
    DesignShape,
}
