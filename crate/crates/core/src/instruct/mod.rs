//! Instruction dissection and translation into action sequences.

mod backend;
mod payload;
mod rules;

use serde::Serialize;
use thiserror::Error;

use crate::action::{ActionSequence, GoalTarget, RegionRef};
use crate::landmarks::LandmarkRegistry;

pub use crate::profile::{select_profile, StrategyName, StrategyProfile, UnknownStrategy};
pub use backend::{
    build_prompt, parse_fixture_lines, strip_code_fence, NluBackend, NluRequest, Remote, Replay, RuleBased,
};
pub use payload::{action_json, decode_action_payload, encode_action_payload, sequence_json, PAYLOAD_SCHEMA};
pub use rules::{
    core_phrase, dissect, ground_areas, ground_goal, kinds_in, ConstraintKind, ConstraintSpan, InstructionParts,
    TaskSpan,
};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum InstructError {
    #[error("instruction is empty")]
    EmptyInstruction,
    #[error("no task, action keyword or constraint recognised")]
    NoTaskFound,
    #[error("unknown landmark {0:?}")]
    UnknownLandmark(String),
    #[error("{phrase:?} matches several landmarks: {}", candidates.join(", "))]
    AmbiguousLandmark { phrase: String, candidates: Vec<String> },
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("schema violation at {path}: {message}")]
    SchemaViolation { path: String, message: String },
    #[error("fixture line {line}: {message}")]
    BadFixture { line: usize, message: String },
}

/// Actions for an instruction plus the flags that are applied at plan time.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedInstruction {
    pub actions: ActionSequence,
    /// The instruction asked for safe distances from people and obstacles.
    pub safe_distance: bool,
}

fn check_references(seq: &ActionSequence, registry: &LandmarkRegistry) -> Result<(), InstructError> {
    for action in seq {
        let name = match (action.region_ref(), action) {
            (Some(RegionRef::Landmark(name)), _) => Some(name),
            (_, crate::action::Action::SetGoal { target: GoalTarget::Landmark(name) }) => Some(name),
            _ => None,
        };
        if let Some(name) = name {
            if !registry.contains(name) {
                return Err(InstructError::UnknownLandmark(name.clone()));
            }
        }
    }
    Ok(())
}

/// Translates `text` with `backend`, then decodes and checks the payload.
/// A schema violation is retried once with the diagnostic fed back to the
/// backend. Output is ordered resets, cost modifications, goal.
pub fn parse_instruction(
    text: &str,
    registry: &LandmarkRegistry,
    backend: &dyn NluBackend,
) -> Result<ParsedInstruction, InstructError> {
    if text.trim().is_empty() {
        return Err(InstructError::EmptyInstruction);
    }
    let safe_distance = dissect(text).is_ok_and(|p| p.wants_safe_distance());
    let mut request = NluRequest {
        instruction: text,
        registry,
        schema: PAYLOAD_SCHEMA,
        feedback: None,
    };
    let first = backend.generate(&request)?;
    let actions = match decode_action_payload(&first) {
        Ok(seq) => seq,
        Err(err @ InstructError::SchemaViolation { .. }) => {
            let feedback = err.to_string();
            request.feedback = Some(&feedback);
            decode_action_payload(&backend.generate(&request)?)?
        }
        Err(other) => return Err(other),
    };
    check_references(&actions, registry)?;
    Ok(ParsedInstruction {
        actions: actions.canonical_order(),
        safe_distance,
    })
}
