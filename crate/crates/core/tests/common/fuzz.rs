//! Corpus access and the malformed-payload generator.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use gridpilot::bundled;

/// (scenario, instruction, expected payload)
pub fn corpus() -> Vec<(String, String, String)> {
    bundled::INSTRUCTION_CORPUS
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let mut f = l.split('\t');
            let mut next = || f.next().expect("three columns").to_string();
            (next(), next(), next())
        })
        .collect()
}

fn mutate_action(rng: &mut ChaCha8Rng, action: &mut serde_json::Map<String, Value>) {
    let kind = action["action"].as_str().unwrap().to_string();
    let required: &[&str] = match kind.as_str() {
        "MODIFY_COST" => &["region", "value"],
        "AVOID_AREAS" | "PREFER_AREAS" => &["region"],
        "SET_GOAL" => &["target"],
        _ => &[],
    };
    let junk = [json!(null), json!(true), json!(3.5), json!({"x": 1}), json!([])];
    let choice = rng.random_range(0..12);
    match choice {
        0 => {
            action.remove("action");
        }
        1 => {
            action.insert("action".into(), json!(["SET", "GOAL", "TELEPORT", "", "set_goal"][rng.random_range(0..5)]));
        }
        2 => {
            action.insert("action".into(), junk[rng.random_range(0..junk.len())].clone());
        }
        3 => {
            action.insert(["speed", "priority", "note", "Region"][rng.random_range(0..4)].into(), json!(1));
        }
        4 if !required.is_empty() => {
            action.remove(required[rng.random_range(0..required.len())]);
        }
        5 if action.contains_key("region") => {
            let bad = [
                json!(7),
                json!(""),
                json!({"rect": [1, 2, 3]}),
                json!({"rect": [4, 1, 2, 3]}),
                json!({"rect": [0, -1, 2, 3]}),
                json!({"rect": [0, 1.5, 2, 3]}),
                json!({"cells": []}),
                json!({"cells": [[1]]}),
                json!({"cells": [1, 2]}),
                json!({"polygon": [[0, 0]]}),
                json!({"rect": [0, 0, 1, 1], "cells": [[0, 0]]}),
            ];
            action.insert("region".into(), bad[rng.random_range(0..bad.len())].clone());
        }
        6 if action.contains_key("value") => {
            let bad = [json!("blocked"), json!("-0.5"), json!(null), json!(false), json!([1.0])];
            action.insert("value".into(), bad[rng.random_range(0..bad.len())].clone());
        }
        7 if kind == "MODIFY_COST" => {
            action.insert("mode".into(), json!(["replace", "SET", "", "multiply"][rng.random_range(0..4)]));
        }
        8 if action.contains_key("target") => {
            let bad = [json!(3), json!([1]), json!([1, 2, 3]), json!([-1, 2]), json!({"x": 1, "y": 2}), json!("  ")];
            action.insert("target".into(), bad[rng.random_range(0..bad.len())].clone());
        }
        9 if kind != "MODIFY_COST" => {
            action.insert("mode".into(), json!("set"));
        }
        _ => {
            action.insert("action".into(), json!(format!("{kind}_{}", rng.random_range(0..100))));
        }
    }
}

/// A payload that violates the schema, derived from a valid one.
pub fn malformed(rng: &mut ChaCha8Rng, valid: &str) -> String {
    let mut value: Value = serde_json::from_str(valid).unwrap();
    match rng.random_range(0..10) {
        0 => {
            let cut = rng.random_range(0..valid.len());
            valid[..cut].to_string()
        }
        1 => [json!({"actions": value}), json!("SET_GOAL shelf3"), json!(null), json!(42)][rng.random_range(0..4)]
            .to_string(),
        2 => {
            let items = value.as_array_mut().unwrap();
            let i = rng.random_range(0..items.len());
            items[i] = [json!("SET_GOAL"), json!(1), json!([]), json!(null)][rng.random_range(0..4)].clone();
            value.to_string()
        }
        3 => format!("{valid} trailing"),
        _ => {
            let items = value.as_array_mut().unwrap();
            let i = rng.random_range(0..items.len());
            mutate_action(rng, items[i].as_object_mut().unwrap());
            value.to_string()
        }
    }
}
