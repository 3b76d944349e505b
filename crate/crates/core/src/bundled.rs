//! Scenarios and NLU fixtures shipped with the crate.

use crate::instruct::{InstructError, Replay};
use crate::world::{load_scenario, ScenarioError, WorldState};

/// `(name, scenario text)` pairs.
pub const SCENARIOS: &[(&str, &str)] = &[
    ("warehouse", include_str!("../scenarios/warehouse.scn")),
    ("warehouse_event", include_str!("../scenarios/warehouse_event.scn")),
    ("warehouse_lane_repair", include_str!("../scenarios/warehouse_lane_repair.scn")),
    ("pick_phase", include_str!("../scenarios/pick_phase.scn")),
    ("place_phase", include_str!("../scenarios/place_phase.scn")),
];

/// Recorded payloads from text-generation models, keyed by backend label.
pub const REPLAY_FIXTURES: &[(&str, &str)] = &[
    ("mistral", include_str!("../fixtures/replay/mistral.tsv")),
    ("llama3", include_str!("../fixtures/replay/llama3.tsv")),
    ("llama3.1", include_str!("../fixtures/replay/llama3.1.tsv")),
];

/// Pick/place phrasings with the payloads the rule grammar must produce.
/// Lines are `scenario TAB instruction TAB payload`.
pub const INSTRUCTION_CORPUS: &str = include_str!("../fixtures/instructions.tsv");

/// The standard comparison instruction for `warehouse.scn`.
pub const PICK_INSTRUCTION: &str = "Navigate to Shelf 3, avoid the repair area and prefer the open lanes";

/// Accepts a bare name (`warehouse`) or a file name (`warehouse.scn`).
pub fn scenario_text(name: &str) -> Option<&'static str> {
    let stem = name.strip_suffix(".scn").unwrap_or(name);
    SCENARIOS.iter().find(|(n, _)| *n == stem).map(|(_, text)| *text)
}

pub fn scenario(name: &str) -> Option<Result<WorldState, ScenarioError>> {
    scenario_text(name).map(load_scenario)
}

pub fn replay(label: &str) -> Option<Result<Replay, InstructError>> {
    REPLAY_FIXTURES
        .iter()
        .find(|(l, _)| *l == label)
        .map(|(l, text)| Replay::from_tsv(*l, text))
}
