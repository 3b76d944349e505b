//! Resolution of scenario, strategy and backend arguments shared by the
//! CLI and the HTTP service.

use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use gridpilot::bundled;
use gridpilot::instruct::{select_profile, InstructError, NluBackend, Remote, Replay, RuleBased, StrategyProfile};
use gridpilot::world::{load_scenario, ScenarioError, WorldState};

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("scenario file not found: {0}")]
    FileNotFound(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("unknown strategy {0:?}; expected one of Navigate Quickly, Maximize Safety, Balance Efficiency and Safety")]
    UnknownStrategy(String),
    #[error("unknown backend {0:?}; expected rule, remote or replay:<label|file>")]
    UnknownBackend(String),
    #[error(transparent)]
    Backend(#[from] InstructError),
}

impl SourceError {
    pub fn code(&self) -> &'static str {
        match self {
            SourceError::FileNotFound(_) => "file_not_found",
            SourceError::Io { .. } => "io_error",
            SourceError::Scenario(_) => "invalid_scenario",
            SourceError::UnknownStrategy(_) => "unknown_strategy",
            SourceError::UnknownBackend(_) => "unknown_backend",
            SourceError::Backend(_) => "backend_unavailable",
        }
    }
}

/// A scenario argument resolved to its text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScenarioSource {
    pub name: String,
    pub text: String,
}

/// Reads `arg` as a file path; a path that does not exist but names a
/// bundled scenario (`warehouse`, `warehouse.scn`) resolves to it.
pub fn read_scenario(arg: &str) -> Result<ScenarioSource, SourceError> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| SourceError::Io {
            path: arg.to_string(),
            message: e.to_string(),
        })?;
        return Ok(ScenarioSource { name: arg.to_string(), text });
    }
    match bundled::scenario_text(arg) {
        Some(text) if !arg.contains(['/', '\\']) => Ok(ScenarioSource {
            name: arg.to_string(),
            text: text.to_string(),
        }),
        _ => Err(SourceError::FileNotFound(arg.to_string())),
    }
}

pub fn load_world(source: &ScenarioSource) -> Result<WorldState, SourceError> {
    Ok(load_scenario(&source.text)?)
}

pub fn strategy(name: &str) -> Result<StrategyProfile, SourceError> {
    select_profile(name).map_err(|e| SourceError::UnknownStrategy(e.0))
}

/// `rule`, `remote` (configured from `NLU_URL`, `NLU_MODEL`,
/// `NLU_TIMEOUT_MS`) or `replay:<label|file>`, where a label names a
/// bundled fixture (`mistral`, `llama3`, `llama3.1`) and a file holds
/// `instruction TAB payload` lines.
pub fn backend(spec: &str) -> Result<Box<dyn NluBackend>, SourceError> {
    match spec.trim() {
        "" | "rule" | "rule-based" => Ok(Box::new(RuleBased)),
        "remote" => Ok(Box::new(Remote::from_env()?)),
        other => {
            let target = other
                .strip_prefix("replay:")
                .ok_or_else(|| SourceError::UnknownBackend(other.to_string()))?;
            if let Some(replay) = bundled::replay(target) {
                return Ok(Box::new(replay?));
            }
            let path = Path::new(target);
            if !path.exists() {
                return Err(SourceError::FileNotFound(target.to_string()));
            }
            let text = std::fs::read_to_string(path).map_err(|e| SourceError::Io {
                path: target.to_string(),
                message: e.to_string(),
            })?;
            let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or(target);
            Ok(Box::new(Replay::from_tsv(label, &text)?))
        }
    }
}
