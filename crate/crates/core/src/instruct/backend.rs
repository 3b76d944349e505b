//! Instruction-to-payload backends.
//!
//! A backend turns instruction text into action payload text. Output is
//! never trusted: [`super::parse_instruction`] decodes and checks whatever a
//! backend returns.

use std::collections::HashMap;
use std::time::Duration;

use serde_json::{json, Value};

use crate::action::{Action, ActionSequence};
use crate::landmarks::LandmarkRegistry;

use super::payload::encode_action_payload;
#[cfg(test)]
use super::payload::PAYLOAD_SCHEMA;
use super::rules::{dissect, ground_areas, ground_goal, ConstraintKind};
use super::InstructError;

pub struct NluRequest<'a> {
    pub instruction: &'a str,
    pub registry: &'a LandmarkRegistry,
    pub schema: &'a str,
    /// Diagnostic from a rejected previous attempt.
    pub feedback: Option<&'a str>,
}

pub trait NluBackend: Send + Sync {
    fn label(&self) -> &str;

    fn generate(&self, request: &NluRequest<'_>) -> Result<String, InstructError>;
}

/// Deterministic grammar-based translation.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleBased;

impl RuleBased {
    /// Maps a dissected instruction to actions: avoid/prefer constraints in
    /// order of appearance, then the goal of the first task phrase.
    pub fn translate(text: &str, registry: &LandmarkRegistry) -> Result<ActionSequence, InstructError> {
        let parts = dissect(text)?;
        let mut actions = Vec::new();
        if parts.action_format.iter().any(|a| a == "RESET_MAP") {
            actions.push(Action::ResetMap);
        }
        for constraint in &parts.constraints {
            let make: fn(&str) -> Action = match constraint.kind {
                ConstraintKind::Avoid => Action::avoid,
                ConstraintKind::Prefer => Action::prefer,
                ConstraintKind::Safety => continue,
            };
            for name in ground_areas(&constraint.object, registry)? {
                let action = make(&name);
                if !actions.contains(&action) {
                    actions.push(action);
                }
            }
        }
        if let Some(task) = &parts.task {
            actions.push(Action::goal_landmark(&ground_goal(&task.object, registry)?));
        }
        Ok(ActionSequence::new(actions).canonical_order())
    }
}

impl NluBackend for RuleBased {
    fn label(&self) -> &str {
        "rule"
    }

    fn generate(&self, request: &NluRequest<'_>) -> Result<String, InstructError> {
        Self::translate(request.instruction, request.registry).map(|seq| encode_action_payload(&seq))
    }
}

/// Recorded payloads keyed by instruction text.
#[derive(Debug, Clone, Default)]
pub struct Replay {
    label: String,
    recordings: HashMap<String, String>,
}

fn replay_key(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl Replay {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            recordings: HashMap::new(),
        }
    }

    /// Reads `instruction TAB payload` lines; blank lines and `#` comments
    /// are skipped. An instruction recorded twice is rejected.
    pub fn from_tsv(label: impl Into<String>, text: &str) -> Result<Self, InstructError> {
        let mut replay = Self::new(label);
        for (instruction, payload) in parse_fixture_lines(text)? {
            if replay.recordings.contains_key(&replay_key(&instruction)) {
                let line = text
                    .lines()
                    .enumerate()
                    .filter(|(_, l)| replay_key(l.split('\t').next().unwrap_or("")) == replay_key(&instruction))
                    .map(|(i, _)| i + 1)
                    .nth(1)
                    .unwrap_or(0);
                return Err(InstructError::BadFixture {
                    line,
                    message: format!("duplicate instruction {instruction:?}"),
                });
            }
            replay.record(&instruction, payload);
        }
        Ok(replay)
    }

    pub fn record(&mut self, instruction: &str, payload: impl Into<String>) {
        self.recordings.insert(replay_key(instruction), payload.into());
    }

    pub fn len(&self) -> usize {
        self.recordings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recordings.is_empty()
    }
}

impl NluBackend for Replay {
    fn label(&self) -> &str {
        &self.label
    }

    fn generate(&self, request: &NluRequest<'_>) -> Result<String, InstructError> {
        self.recordings
            .get(&replay_key(request.instruction))
            .cloned()
            .ok_or_else(|| {
                InstructError::BackendUnavailable(format!(
                    "{}: no recording for {:?}",
                    self.label, request.instruction
                ))
            })
    }
}

/// Parses `instruction TAB payload` fixture lines.
pub fn parse_fixture_lines(text: &str) -> Result<Vec<(String, String)>, InstructError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, line)| {
            line.split_once('\t')
                .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                .ok_or_else(|| InstructError::BadFixture {
                    line: i + 1,
                    message: "expected instruction<TAB>payload".into(),
                })
        })
        .collect()
}

/// HTTP text-generation service: POST `{"model", "prompt", "temperature"}`,
/// read the payload from the `response` field of the reply.
#[derive(Debug, Clone)]
pub struct Remote {
    pub url: String,
    pub model: String,
    pub timeout: Duration,
}

impl Remote {
    pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;

    pub fn new(url: impl Into<String>, model: impl Into<String>, timeout: Duration) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            timeout,
        }
    }

    /// Reads `NLU_URL`, `NLU_MODEL` and `NLU_TIMEOUT_MS`.
    pub fn from_env() -> Result<Self, InstructError> {
        let url = std::env::var("NLU_URL")
            .map_err(|_| InstructError::BackendUnavailable("NLU_URL is not set".into()))?;
        let model = std::env::var("NLU_MODEL").unwrap_or_else(|_| "llama3".into());
        let timeout_ms = match std::env::var("NLU_TIMEOUT_MS") {
            Ok(v) => v
                .parse()
                .map_err(|_| InstructError::BackendUnavailable(format!("bad NLU_TIMEOUT_MS {v:?}")))?,
            Err(_) => Self::DEFAULT_TIMEOUT_MS,
        };
        Ok(Self::new(url, model, Duration::from_millis(timeout_ms)))
    }
}

pub fn build_prompt(request: &NluRequest<'_>) -> String {
    let names: Vec<&str> = request.registry.names().collect();
    let mut prompt = format!(
        "Translate the navigation instruction into an action payload.\n\
         Known landmarks: {}\n\
         Payload schema:\n{}\n\
         Reply with the payload only, no commentary.\n\
         Instruction: {}\n",
        names.join(", "),
        request.schema,
        request.instruction
    );
    if let Some(feedback) = request.feedback {
        prompt.push_str(&format!("Your previous reply was rejected: {feedback}\n"));
    }
    prompt
}

/// Removes a surrounding markdown code fence, if any.
pub fn strip_code_fence(text: &str) -> &str {
    let trimmed = text.trim();
    let Some(rest) = trimmed.strip_prefix("```") else {
        return trimmed;
    };
    let body = rest.split_once('\n').map_or("", |(_, b)| b);
    body.trim_end().strip_suffix("```").unwrap_or(body).trim()
}

impl NluBackend for Remote {
    fn label(&self) -> &str {
        &self.model
    }

    fn generate(&self, request: &NluRequest<'_>) -> Result<String, InstructError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .build()
            .into();
        let body = json!({
            "model": self.model,
            "prompt": build_prompt(request),
            "temperature": 0,
        });
        let unavailable = |e: ureq::Error| InstructError::BackendUnavailable(format!("{}: {e}", self.url));
        let mut response = agent.post(&self.url).send_json(&body).map_err(unavailable)?;
        let reply: Value = response.body_mut().read_json().map_err(unavailable)?;
        let text = reply
            .get("response")
            .and_then(Value::as_str)
            .ok_or_else(|| InstructError::BackendUnavailable("reply has no string \"response\" field".into()))?;
        Ok(strip_code_fence(text).to_string())
    }
}
