//! JSON instance, design and solution files.
//!
//! Instance files carry `"schema": "cddp-ts/1"`. Door, node and scenario
//! positions are zero-based; in solution files dock `0` is the outsourcing
//! door and dock `d >= 1` is door `d - 1`.

use std::fs;
use std::path::Path;

use cddp_core::model::default_outsourcing_penalty;
use cddp_core::{
    Dock, DoorSpec, FirstStageDesign, FlowMatrix, Instance, InstanceData, LevelSet, ModelError, Scenario,
    ScenarioAssignment, Side, Solution,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub const INSTANCE_SCHEMA: &str = "cddp-ts/1";
pub const DESIGN_SCHEMA: &str = "cddp-design/1";
pub const SOLUTION_SCHEMA: &str = "cddp-solution/1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("not valid JSON: {0}")]
    Syntax(serde_json::Error),
    #[error("key `{key}`: {message}")]
    Key { key: String, message: String },
}

impl IoError {
    fn key(key: impl Into<String>, message: impl ToString) -> Self {
        IoError::Key { key: key.into(), message: message.to_string() }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DoorJson {
    capacities: Vec<f64>,
    install_costs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaxDoorsJson {
    strip: usize,
    stack: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FlowJson {
    Dense(Vec<Vec<f64>>),
    Coordinate { origins: usize, destinations: usize, entries: Vec<(usize, usize, f64)> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DisruptionJson {
    strip: Vec<f64>,
    stack: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioJson {
    weight: f64,
    flow: FlowJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    disruptions: Option<DisruptionJson>,
}

fn field<T: DeserializeOwned>(obj: &Map<String, Value>, key: &str) -> Result<T, IoError> {
    let v = obj.get(key).ok_or_else(|| IoError::key(key, "missing"))?;
    serde_json::from_value(v.clone()).map_err(|e| IoError::key(key, e))
}

const INSTANCE_KEYS: [&str; 7] =
    ["schema", "strip_doors", "stack_doors", "max_doors", "distance", "outsourcing_penalty", "scenarios"];

/// Parses an instance document. Errors name the offending key.
pub fn parse_instance(text: &str) -> Result<Instance, IoError> {
    let root: Value = serde_json::from_str(text).map_err(IoError::Syntax)?;
    let obj = root.as_object().ok_or_else(|| IoError::key("$", "expected an object"))?;
    if let Some(k) = obj.keys().find(|k| !INSTANCE_KEYS.contains(&k.as_str())) {
        return Err(IoError::key(k.clone(), "unknown key"));
    }
    let schema: String = field(obj, "schema")?;
    if schema != INSTANCE_SCHEMA {
        return Err(IoError::key("schema", format!("expected \"{INSTANCE_SCHEMA}\", found \"{schema}\"")));
    }
    let doors = |key: &str| -> Result<Vec<DoorSpec>, IoError> {
        let raw: Vec<DoorJson> = field(obj, key)?;
        Ok(raw.into_iter().map(|d| DoorSpec { capacities: d.capacities, install_costs: d.install_costs }).collect())
    };
    let strip_doors = doors("strip_doors")?;
    let stack_doors = doors("stack_doors")?;
    let max: MaxDoorsJson = field(obj, "max_doors")?;
    let rows: Vec<Vec<f64>> = field(obj, "distance")?;
    if rows.len() != strip_doors.len() || rows.iter().any(|r| r.len() != stack_doors.len()) {
        return Err(IoError::key("distance", "expected one row per strip door and one column per stack door"));
    }
    let distance: Vec<f64> = rows.into_iter().flatten().collect();
    let raw: Vec<Value> = field(obj, "scenarios")?;
    let mut scenarios = Vec::with_capacity(raw.len());
    for (w, v) in raw.into_iter().enumerate() {
        let key = format!("scenarios[{w}]");
        let s: ScenarioJson = serde_json::from_value(v).map_err(|e| IoError::key(&key, e))?;
        let flow = match s.flow {
            FlowJson::Dense(rows) => FlowMatrix::from_rows(&rows),
            FlowJson::Coordinate { origins, destinations, entries } => {
                FlowMatrix::from_entries(origins, destinations, &entries)
            }
        }
        .map_err(|e| IoError::key(format!("{key}.flow"), e))?;
        let (ds, dt) = match s.disruptions {
            Some(d) => (d.strip, d.stack),
            None => (vec![0.0; strip_doors.len()], vec![0.0; stack_doors.len()]),
        };
        scenarios.push(Scenario::new(s.weight, flow, ds, dt));
    }
    let outsourcing_penalty = match obj.get("outsourcing_penalty") {
        None | Some(Value::Null) => default_outsourcing_penalty(&strip_doors, &stack_doors, &distance, &scenarios),
        Some(_) => field(obj, "outsourcing_penalty")?,
    };
    let data = InstanceData {
        strip_doors,
        stack_doors,
        max_strip_doors: max.strip,
        max_stack_doors: max.stack,
        distance,
        outsourcing_penalty,
        scenarios,
    };
    Instance::new(data).map_err(|e| {
        let key = model_error_key(&e);
        IoError::key(key, e)
    })
}

/// Instance key a validation error refers to.
fn model_error_key(e: &ModelError) -> String {
    match e {
        ModelError::NegativeFlow { .. } | ModelError::FlowShape { .. } => "scenarios.flow".into(),
        ModelError::Door { side, door, .. } => format!("{}_doors[{door}]", side),
        ModelError::DoorBound => "max_doors".into(),
        ModelError::DistanceShape { .. } | ModelError::NegativeDistance => "distance".into(),
        ModelError::Penalty => "outsourcing_penalty".into(),
        ModelError::Weight { scenario, .. } => format!("scenarios[{scenario}].weight"),
        ModelError::WeightSum { .. } => "scenarios.weight".into(),
        ModelError::DisruptionShape { scenario, side } | ModelError::Disruption { scenario, side, .. } => {
            format!("scenarios[{scenario}].disruptions.{side}")
        }
    }
}

/// Canonical serialization: sparse coordinate flows, fixed key order.
pub fn instance_to_json(instance: &Instance) -> Value {
    let door = |d: &DoorSpec| DoorJson { capacities: d.capacities.clone(), install_costs: d.install_costs.clone() };
    let ni = instance.door_count(Side::Strip);
    let nj = instance.door_count(Side::Stack);
    let distance: Vec<Vec<f64>> = (0..ni).map(|i| (0..nj).map(|j| instance.distance(i, j)).collect()).collect();
    let scenarios: Vec<ScenarioJson> = instance
        .scenarios()
        .iter()
        .map(|s| ScenarioJson {
            weight: s.weight(),
            flow: FlowJson::Coordinate {
                origins: s.origins(),
                destinations: s.destinations(),
                entries: s.flow().nonzeros().collect(),
            },
            disruptions: Some(DisruptionJson {
                strip: s.disruption(Side::Strip).to_vec(),
                stack: s.disruption(Side::Stack).to_vec(),
            }),
        })
        .collect();
    let mut obj = Map::new();
    obj.insert("schema".into(), INSTANCE_SCHEMA.into());
    obj.insert("strip_doors".into(), to_value(instance.doors(Side::Strip).iter().map(door).collect::<Vec<_>>()));
    obj.insert("stack_doors".into(), to_value(instance.doors(Side::Stack).iter().map(door).collect::<Vec<_>>()));
    obj.insert(
        "max_doors".into(),
        to_value(MaxDoorsJson { strip: instance.max_doors(Side::Strip), stack: instance.max_doors(Side::Stack) }),
    );
    obj.insert("distance".into(), to_value(distance));
    obj.insert("outsourcing_penalty".into(), to_value(instance.outsourcing_penalty()));
    obj.insert("scenarios".into(), to_value(scenarios));
    Value::Object(obj)
}

fn to_value<T: Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read { path: path.display().to_string(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Write { path: path.display().to_string(), source })
}

pub fn read_instance(path: &Path) -> Result<Instance, IoError> {
    parse_instance(&read_text(path)?)
}

pub fn write_instance(path: &Path, instance: &Instance) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(&instance_to_json(instance)).expect("serializable");
    text.push('\n');
    write_text(path, &text)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignJson {
    schema: String,
    /// Installed level per door; `null` when the door is not built.
    strip: Vec<Option<usize>>,
    stack: Vec<Option<usize>>,
}

pub fn design_to_json(design: &FirstStageDesign) -> Value {
    let levels = |s: &[LevelSet]| s.iter().map(|l| l.level()).collect();
    to_value(DesignJson { schema: DESIGN_SCHEMA.into(), strip: levels(&design.strip), stack: levels(&design.stack) })
}

pub fn parse_design(text: &str, instance: &Instance) -> Result<FirstStageDesign, IoError> {
    let d: DesignJson = serde_json::from_str(text).map_err(|e| IoError::key("$", e))?;
    if d.schema != DESIGN_SCHEMA {
        return Err(IoError::key("schema", format!("expected \"{DESIGN_SCHEMA}\"")));
    }
    for (key, side, levels) in [("strip", Side::Strip, &d.strip), ("stack", Side::Stack, &d.stack)] {
        if levels.len() != instance.door_count(side) {
            return Err(IoError::key(key, "length differs from the instance's door count"));
        }
        if let Some(i) = levels.iter().zip(instance.doors(side)).position(|(l, s)| l.is_some_and(|k| k > s.levels())) {
            return Err(IoError::key(format!("{key}[{i}]"), "level out of range"));
        }
    }
    Ok(FirstStageDesign::from_levels(&d.strip, &d.stack))
}

pub fn dock_code(d: Dock) -> usize {
    d.door().map_or(0, |i| i + 1)
}

#[derive(Serialize)]
struct AssignmentJson {
    origins: Vec<Option<usize>>,
    destinations: Vec<Option<usize>>,
    inbound_outsourcing: bool,
    outbound_outsourcing: bool,
}

pub fn assignment_to_json(a: &ScenarioAssignment) -> Value {
    let codes = |v: &[Option<Dock>]| v.iter().map(|d| d.map(dock_code)).collect();
    to_value(AssignmentJson {
        origins: codes(&a.origins),
        destinations: codes(&a.destinations),
        inbound_outsourcing: a.inbound_outsourcing,
        outbound_outsourcing: a.outbound_outsourcing,
    })
}

pub fn solution_to_json(sol: &Solution, value: f64) -> Value {
    let mut obj = Map::new();
    obj.insert("schema".into(), SOLUTION_SCHEMA.into());
    obj.insert("value".into(), to_value(value));
    obj.insert("design".into(), design_to_json(&sol.design));
    obj.insert("assignments".into(), Value::Array(sol.assignments.iter().map(assignment_to_json).collect()));
    Value::Object(obj)
}
