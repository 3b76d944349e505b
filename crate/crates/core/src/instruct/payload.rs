//! The canonical action payload: a JSON array of action objects.
//!
//! ```json
//! [{"action": "AVOID_AREAS", "region": "repair_area"},
//!  {"action": "MODIFY_COST", "region": {"rect": [0, 0, 3, 2]}, "value": 2.5, "mode": "add"},
//!  {"action": "SET_GOAL", "target": [4, 2]}]
//! ```
//!
//! Decoding is strict: unknown action names, unknown keys and keys that do
//! not belong to the variant are rejected with the JSON path of the offending
//! field.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::action::{Action, ActionSequence, GoalTarget, RegionRef};
use crate::grid::{Cell, Cost, CostMode, Region};

use super::InstructError;

impl Serialize for ActionSequence {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        sequence_json(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ActionSequence {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        decode_action_payload(&value.to_string()).map_err(serde::de::Error::custom)
    }
}

/// Human-readable schema included verbatim in remote prompts.
pub const PAYLOAD_SCHEMA: &str = r#"A JSON array. Each element is an object with an "action" field, one of:
  {"action": "RESET_MAP"}
  {"action": "MODIFY_COST", "region": REGION, "value": NUMBER or "BLOCKED", "mode": "set" or "add"}
  {"action": "AVOID_AREAS", "region": REGION}
  {"action": "PREFER_AREAS", "region": REGION}
  {"action": "SET_GOAL", "target": LANDMARK_NAME or [x, y]}
REGION is a landmark name string or {"rect": [x0, y0, x1, y1]} or {"cells": [[x, y], ...]}.
No other keys are allowed."#;

fn violation(path: impl Into<String>, message: impl Into<String>) -> InstructError {
    InstructError::SchemaViolation {
        path: path.into(),
        message: message.into(),
    }
}

fn region_json(region: &RegionRef) -> Value {
    match region {
        RegionRef::Landmark(name) => json!(name),
        RegionRef::Inline(Region::Rect { x0, y0, x1, y1 }) => json!({ "rect": [x0, y0, x1, y1] }),
        RegionRef::Inline(Region::Cells(cells)) => {
            let cells: Vec<[usize; 2]> = cells.iter().map(|&(x, y)| [x, y]).collect();
            json!({ "cells": cells })
        }
    }
}

fn cost_json(cost: Cost) -> Value {
    match cost {
        Cost::Finite(v) => json!(v),
        Cost::Blocked => json!("BLOCKED"),
    }
}

pub fn action_json(action: &Action) -> Value {
    let mut obj = Map::new();
    obj.insert("action".into(), json!(action.keyword()));
    match action {
        Action::ResetMap => {}
        Action::ModifyCost { region, value, mode } => {
            obj.insert("region".into(), region_json(region));
            obj.insert("value".into(), cost_json(*value));
            let mode = match mode {
                CostMode::Set => "set",
                CostMode::Add => "add",
            };
            obj.insert("mode".into(), json!(mode));
        }
        Action::AvoidAreas { region } | Action::PreferAreas { region } => {
            obj.insert("region".into(), region_json(region));
        }
        Action::SetGoal { target } => {
            let target = match target {
                GoalTarget::Landmark(name) => json!(name),
                GoalTarget::Cell((x, y)) => json!([x, y]),
            };
            obj.insert("target".into(), target);
        }
    }
    Value::Object(obj)
}

pub fn sequence_json(seq: &ActionSequence) -> Value {
    Value::Array(seq.iter().map(action_json).collect())
}

/// Canonical compact encoding (sorted keys, `mode` always present).
pub fn encode_action_payload(seq: &ActionSequence) -> String {
    sequence_json(seq).to_string()
}

fn index(value: &Value, path: &str) -> Result<usize, InstructError> {
    value
        .as_u64()
        .and_then(|v| usize::try_from(v).ok())
        .ok_or_else(|| violation(path, "expected a non-negative integer"))
}

fn decode_pair(value: &Value, path: &str) -> Result<Cell, InstructError> {
    match value.as_array() {
        Some(items) if items.len() == 2 => Ok((
            index(&items[0], &format!("{path}[0]"))?,
            index(&items[1], &format!("{path}[1]"))?,
        )),
        _ => Err(violation(path, "expected [x, y]")),
    }
}

fn decode_name(value: &str, path: &str) -> Result<String, InstructError> {
    if value.trim().is_empty() {
        Err(violation(path, "landmark name must not be empty"))
    } else {
        Ok(value.to_string())
    }
}

fn decode_region(value: &Value, path: &str) -> Result<RegionRef, InstructError> {
    match value {
        Value::String(name) => Ok(RegionRef::Landmark(decode_name(name, path)?)),
        Value::Object(obj) => {
            if obj.len() != 1 {
                return Err(violation(path, "region object must have exactly one of \"rect\" or \"cells\""));
            }
            let (key, inner) = obj.iter().next().expect("one entry");
            let inner_path = format!("{path}.{key}");
            match key.as_str() {
                "rect" => {
                    let items = inner
                        .as_array()
                        .filter(|a| a.len() == 4)
                        .ok_or_else(|| violation(&inner_path, "expected [x0, y0, x1, y1]"))?;
                    let mut v = [0usize; 4];
                    for (i, item) in items.iter().enumerate() {
                        v[i] = index(item, &format!("{inner_path}[{i}]"))?;
                    }
                    let region = Region::rect(v[0], v[1], v[2], v[3]);
                    region
                        .validate_shape()
                        .map_err(|e| violation(&inner_path, e.to_string()))?;
                    Ok(RegionRef::Inline(region))
                }
                "cells" => {
                    let items = inner
                        .as_array()
                        .filter(|a| !a.is_empty())
                        .ok_or_else(|| violation(&inner_path, "expected a non-empty list of [x, y]"))?;
                    let cells = items
                        .iter()
                        .enumerate()
                        .map(|(i, item)| decode_pair(item, &format!("{inner_path}[{i}]")))
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(RegionRef::Inline(Region::from_cells(cells)))
                }
                other => Err(violation(&inner_path, format!("unknown region key {other:?}"))),
            }
        }
        _ => Err(violation(path, "expected a landmark name or a region object")),
    }
}

fn decode_value(value: &Value, path: &str) -> Result<Cost, InstructError> {
    match value {
        Value::String(s) if s == "BLOCKED" => Ok(Cost::Blocked),
        Value::Number(n) => match n.as_f64() {
            Some(v) if v.is_finite() => Ok(Cost::Finite(v)),
            _ => Err(violation(path, "value must be finite")),
        },
        _ => Err(violation(path, "expected a number or \"BLOCKED\"")),
    }
}

fn decode_mode(value: &Value, path: &str) -> Result<CostMode, InstructError> {
    match value.as_str() {
        Some("set") => Ok(CostMode::Set),
        Some("add") => Ok(CostMode::Add),
        _ => Err(violation(path, "expected \"set\" or \"add\"")),
    }
}

fn decode_target(value: &Value, path: &str) -> Result<GoalTarget, InstructError> {
    match value {
        Value::String(name) => Ok(GoalTarget::Landmark(decode_name(name, path)?)),
        Value::Array(_) => Ok(GoalTarget::Cell(decode_pair(value, path)?)),
        _ => Err(violation(path, "expected a landmark name or [x, y]")),
    }
}

fn decode_action(value: &Value, path: &str) -> Result<Action, InstructError> {
    let obj = value
        .as_object()
        .ok_or_else(|| violation(path, "expected an object"))?;
    let name = obj
        .get("action")
        .ok_or_else(|| violation(format!("{path}.action"), "missing required field"))?
        .as_str()
        .ok_or_else(|| violation(format!("{path}.action"), "expected a string"))?;
    let allowed: &[&str] = match name {
        "RESET_MAP" => &["action"],
        "MODIFY_COST" => &["action", "region", "value", "mode"],
        "AVOID_AREAS" | "PREFER_AREAS" => &["action", "region"],
        "SET_GOAL" => &["action", "target"],
        other => return Err(violation(format!("{path}.action"), format!("unknown action {other:?}"))),
    };
    if let Some(key) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(violation(format!("{path}.{key}"), format!("field not allowed for {name}")));
    }
    let field = |key: &str| {
        obj.get(key)
            .ok_or_else(|| violation(format!("{path}.{key}"), "missing required field"))
    };
    let sub = |key: &str| format!("{path}.{key}");
    Ok(match name {
        "RESET_MAP" => Action::ResetMap,
        "MODIFY_COST" => Action::ModifyCost {
            region: decode_region(field("region")?, &sub("region"))?,
            value: decode_value(field("value")?, &sub("value"))?,
            mode: match obj.get("mode") {
                Some(m) => decode_mode(m, &sub("mode"))?,
                None => CostMode::Set,
            },
        },
        "AVOID_AREAS" => Action::AvoidAreas {
            region: decode_region(field("region")?, &sub("region"))?,
        },
        "PREFER_AREAS" => Action::PreferAreas {
            region: decode_region(field("region")?, &sub("region"))?,
        },
        _ => Action::SetGoal {
            target: decode_target(field("target")?, &sub("target"))?,
        },
    })
}

/// Strict decode of the canonical payload format.
pub fn decode_action_payload(payload: &str) -> Result<ActionSequence, InstructError> {
    let value: Value =
        serde_json::from_str(payload.trim()).map_err(|e| violation("$", format!("invalid JSON: {e}")))?;
    let items = value
        .as_array()
        .ok_or_else(|| violation("$", "expected a JSON array of actions"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, item)| decode_action(item, &format!("$[{i}]")))
        .collect::<Result<Vec<_>, _>>()
        .map(ActionSequence::new)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_of(err: InstructError) -> String {
        match err {
            InstructError::SchemaViolation { path, .. } => path,
            other => panic!("expected schema violation, got {other:?}"),
        }
    }

    #[test]
    fn decodes_set_goal() {
        let seq = decode_action_payload(r#"[{"action":"SET_GOAL","target":[4,2]}]"#).unwrap();
        assert_eq!(seq.0, vec![Action::goal_cell((4, 2))]);
    }

    #[test]
    fn rejects_unknown_action() {
        let err = decode_action_payload(r#"[{"action":"FLY_TO","target":[1,1]}]"#).unwrap_err();
        assert_eq!(path_of(err), "$[0].action");
    }

    #[test]
    fn rejects_missing_region() {
        let err = decode_action_payload(r#"[{"action":"MODIFY_COST","value":3,"mode":"set"}]"#).unwrap_err();
        assert_eq!(path_of(err), "$[0].region");
    }

    #[test]
    fn rejects_foreign_and_unknown_keys() {
        let err = decode_action_payload(r#"[{"action":"AVOID_AREAS","region":"a","target":"b"}]"#).unwrap_err();
        assert_eq!(path_of(err), "$[0].target");
        let err = decode_action_payload(r#"[{"action":"RESET_MAP","speed":2}]"#).unwrap_err();
        assert_eq!(path_of(err), "$[0].speed");
    }

    #[test]
    fn rejects_bad_shapes() {
        for (payload, path) in [
            (r#"{"action":"RESET_MAP"}"#, "$"),
            (r#"[{"action":"MODIFY_COST","region":{"rect":[3,0,1,0]},"value":1}]"#, "$[0].region.rect"),
            (r#"[{"action":"MODIFY_COST","region":{"rect":[0,0,1]},"value":1}]"#, "$[0].region.rect"),
            (r#"[{"action":"MODIFY_COST","region":"a","value":"HIGH"}]"#, "$[0].value"),
            (r#"[{"action":"MODIFY_COST","region":"a","value":1,"mode":"mul"}]"#, "$[0].mode"),
            (r#"[{"action":"SET_GOAL","target":[-1,2]}]"#, "$[0].target[0]"),
            (r#"[{"action":"SET_GOAL","target":""}]"#, "$[0].target"),
            (r#"[1]"#, "$[0]"),
            ("not json", "$"),
        ] {
            assert_eq!(path_of(decode_action_payload(payload).unwrap_err()), path, "{payload}");
        }
    }

    #[test]
    fn mode_defaults_to_set_and_encodes_explicitly() {
        let seq = decode_action_payload(r#"[{"action":"MODIFY_COST","region":"a","value":"BLOCKED"}]"#).unwrap();
        assert_eq!(
            encode_action_payload(&seq),
            r#"[{"action":"MODIFY_COST","mode":"set","region":"a","value":"BLOCKED"}]"#
        );
    }
}
