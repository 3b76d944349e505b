//! A simulation session: one world, one closed-loop episode and the journal
//! of mutations that reproduces it.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use gridpilot::action::{validate_action, Action, ActionSequence, Diagnostic, RegionRef};
use gridpilot::dcip::{Episode, EpisodeConfig, EpisodeError, Outcome, PlanRecord, TickRecord};
use gridpilot::grid::{Cell, CostLayer, CostMode, GridState};
use gridpilot::instruct::NluBackend;
use gridpilot::landmarks::LandmarkRegistry;
use gridpilot::planner::{PlanError, PlanResult};
use gridpilot::world::{EventKind, Pedestrian, Pose, ScenarioEvent};

use crate::error::ApiError;
use crate::rle::{decode_costs, decode_occupancy, encode_costs, encode_occupancy, Runs};
use crate::sources::{self, ScenarioSource};

/// Upper bound on ticks per step request.
pub const MAX_TICKS_PER_REQUEST: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum JournalEntry {
    Instruction { text: String },
    Step { ticks: u64 },
    Event { event: ScenarioEvent },
    Strategy { name: String },
}

/// Everything needed to rebuild a session: the scenario and the mutations
/// applied to it in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub id: String,
    pub scenario_name: String,
    pub scenario_text: String,
    pub strategy: String,
    pub backend: String,
    pub journal: Vec<JournalEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanMetrics {
    pub nodes_expanded: usize,
    pub search_time_s: f64,
    pub path_cost: f64,
    pub path_length: usize,
    pub turns: usize,
}

impl From<&PlanResult> for PlanMetrics {
    fn from(r: &PlanResult) -> Self {
        Self {
            nodes_expanded: r.nodes_expanded,
            search_time_s: r.search_time_s,
            path_cost: r.path_cost,
            path_length: r.path_length,
            turns: r.turns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatePayload {
    pub session_id: String,
    pub scenario: String,
    pub tick: u64,
    pub pose: Pose,
    pub width: usize,
    pub height: usize,
    /// Static map the scenario started with.
    pub base_occupancy: Runs,
    /// Observed occupancy including dynamic obstacles.
    pub occupancy: Runs,
    /// Cost layer of the active plan; zeros before the first instruction.
    pub cost_layer: Runs,
    pub goal: Option<Cell>,
    pub landmarks: LandmarkRegistry,
    pub pedestrians: Vec<Pedestrian>,
    /// Remaining cells of the active plan, current pose first.
    pub current_path: Vec<Cell>,
    /// Metrics of the active plan.
    pub metrics: Option<PlanMetrics>,
    pub strategy: String,
    pub backend: String,
    pub instructions: Vec<String>,
    pub outcome: Option<Outcome>,
    pub replans: usize,
    pub executed_cost: f64,
    pub trajectory: Vec<Cell>,
}

impl StatePayload {
    /// Rebuilds the grid the payload describes.
    pub fn grid(&self) -> Result<GridState, String> {
        let base = decode_occupancy(self.width, self.height, &self.base_occupancy)?;
        let occupancy = decode_occupancy(self.width, self.height, &self.occupancy)?;
        let costs = decode_costs(self.width, self.height, &self.cost_layer)?;
        GridState::from_parts(base, occupancy, costs, self.goal).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstructionResponse {
    pub actions: ActionSequence,
    pub plan: PlanResult,
    /// Non-fatal findings from checking each action against the map.
    pub diagnostics: Vec<Diagnostic>,
    pub safe_distance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepResponse {
    pub state: StatePayload,
    pub ticks: Vec<TickRecord>,
    pub replans: Vec<PlanRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventAck {
    pub applied: bool,
    pub scheduled_for: Option<u64>,
    pub tick: u64,
}

pub struct Session {
    id: String,
    scenario: ScenarioSource,
    backend_spec: String,
    initial_strategy: String,
    backend: Box<dyn NluBackend>,
    episode: Episode,
    journal: Vec<JournalEntry>,
}

impl Session {
    pub fn create(id: String, scenario: ScenarioSource, strategy: &str, backend: &str) -> Result<Self, ApiError> {
        let world = sources::load_world(&scenario)?;
        let profile = sources::strategy(strategy)?;
        let nlu = sources::backend(backend)?;
        let episode = Episode::new(world, profile, EpisodeConfig::default(), nlu.label());
        Ok(Self {
            id,
            scenario,
            backend_spec: backend.to_string(),
            initial_strategy: strategy.to_string(),
            backend: nlu,
            episode,
            journal: Vec::new(),
        })
    }

    /// Rebuilds a session by replaying its journal.
    pub fn restore(snapshot: &Snapshot) -> Result<Self, ApiError> {
        let scenario = ScenarioSource {
            name: snapshot.scenario_name.clone(),
            text: snapshot.scenario_text.clone(),
        };
        let mut session = Self::create(snapshot.id.clone(), scenario, &snapshot.strategy, &snapshot.backend)?;
        for entry in &snapshot.journal {
            match entry {
                JournalEntry::Instruction { text } => {
                    session.instruct(text)?;
                }
                JournalEntry::Step { ticks } => {
                    session.step(*ticks)?;
                }
                JournalEntry::Event { event } => {
                    session.event(event.clone())?;
                }
                JournalEntry::Strategy { name } => session.set_strategy(name)?,
            }
        }
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn episode(&self) -> &Episode {
        &self.episode
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            id: self.id.clone(),
            scenario_name: self.scenario.name.clone(),
            scenario_text: self.scenario.text.clone(),
            strategy: self.initial_strategy.clone(),
            backend: self.backend_spec.clone(),
            journal: self.journal.clone(),
        }
    }

    /// The grid the state payload describes: observed occupancy, the active
    /// plan's cost layer and goal.
    pub fn display_grid(&self) -> GridState {
        let world = self.episode.world().grid();
        let (costs, goal) = match self.episode.active() {
            Some(a) => (a.state.costs().clone(), a.state.goal()),
            None => (CostLayer::zeros(world.width(), world.height()), None),
        };
        let build = |goal| GridState::from_parts(world.base().clone(), world.occupancy().clone(), costs.clone(), goal);
        // A goal an injected obstacle now covers is shown as unset until the
        // next tick replans.
        build(goal)
            .or_else(|_| build(None))
            .expect("layers share the world's dimensions")
    }

    pub fn state(&self) -> StatePayload {
        let world = self.episode.world();
        let grid = self.display_grid();
        let log = self.episode.log();
        StatePayload {
            session_id: self.id.clone(),
            scenario: self.scenario.name.clone(),
            tick: world.tick(),
            pose: world.pose(),
            width: grid.width(),
            height: grid.height(),
            base_occupancy: encode_occupancy(grid.base()),
            occupancy: encode_occupancy(grid.occupancy()),
            cost_layer: encode_costs(grid.costs()),
            goal: grid.goal(),
            landmarks: world.registry().clone(),
            pedestrians: world.pedestrians().to_vec(),
            current_path: if self.episode.is_finished() { Vec::new() } else { self.episode.remaining_path().to_vec() },
            metrics: self.episode.active().map(|a| PlanMetrics::from(&a.result)),
            strategy: self.episode.profile().name.label().to_string(),
            backend: self.backend.label().to_string(),
            instructions: log.instructions.clone(),
            outcome: log.outcome,
            replans: log.replans(),
            executed_cost: log.totals.executed_cost,
            trajectory: log.trajectory.clone(),
        }
    }

    pub fn log_jsonl(&self) -> String {
        self.episode.log().to_jsonl()
    }

    pub fn instruct(&mut self, text: &str) -> Result<InstructionResponse, ApiError> {
        if text.trim().is_empty() {
            return Err(ApiError::unprocessable(
                "empty_instruction",
                "instruction is empty",
                json!({"code": "empty_instruction"}),
            ));
        }
        self.episode.instruct(text, self.backend.as_ref()).map_err(episode_error)?;
        self.journal.push(JournalEntry::Instruction { text: text.to_string() });
        let record = self.episode.log().plans.last().expect("a successful instruction logs a plan");
        let grid = self.episode.world().grid();
        let registry = self.episode.world().registry();
        let diagnostics = record
            .actions
            .iter()
            .filter_map(|a| validate_action(a, grid, registry).err())
            .flatten()
            .collect();
        let safe_distance = record.actions.iter().any(|a| {
            matches!(a, Action::ModifyCost { region: RegionRef::Inline(_), mode: CostMode::Add, .. })
        });
        Ok(InstructionResponse {
            actions: record.actions.clone(),
            plan: record.plan.clone().expect("successful record carries a plan"),
            diagnostics,
            safe_distance,
        })
    }

    pub fn step(&mut self, ticks: u64) -> Result<StepResponse, ApiError> {
        if ticks == 0 || ticks > MAX_TICKS_PER_REQUEST {
            return Err(ApiError::bad_request(format!("ticks must be between 1 and {MAX_TICKS_PER_REQUEST}")));
        }
        let plans_before = self.episode.log().plans.len();
        let mut records = Vec::new();
        for _ in 0..ticks {
            records.push(self.episode.advance(self.backend.as_ref()));
        }
        self.journal.push(JournalEntry::Step { ticks });
        Ok(StepResponse {
            state: self.state(),
            ticks: records,
            replans: self.episode.log().plans[plans_before..].to_vec(),
        })
    }

    pub fn event(&mut self, event: ScenarioEvent) -> Result<EventAck, ApiError> {
        let applied = self.episode.inject_event(event.clone()).map_err(|e| {
            ApiError::unprocessable("invalid_event", e.to_string(), json!({"code": "invalid_event"}))
        })?;
        self.journal.push(JournalEntry::Event { event: event.clone() });
        Ok(EventAck {
            applied,
            scheduled_for: (!applied).then_some(event.at_time),
            tick: self.episode.world().tick(),
        })
    }

    pub fn set_strategy(&mut self, name: &str) -> Result<(), ApiError> {
        let profile = sources::strategy(name)?;
        self.episode
            .switch_profile(profile, self.backend.as_ref())
            .map_err(episode_error)?;
        self.journal.push(JournalEntry::Strategy { name: name.to_string() });
        Ok(())
    }
}

/// An event body: the event itself plus an optional `at_time`; without one
/// it applies immediately.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct EventRequest {
    pub event: EventKind,
    #[serde(default)]
    pub at_time: Option<u64>,
}

fn episode_error(err: EpisodeError) -> ApiError {
    match err {
        EpisodeError::Instruction(e) => {
            let detail = serde_json::to_value(&e).unwrap_or(Value::Null);
            let code = detail.get("code").and_then(Value::as_str).unwrap_or("instruction_error").to_string();
            ApiError::unprocessable(code, e.to_string(), detail)
        }
        EpisodeError::Action { index, message } => ApiError::unprocessable(
            "action_failed",
            format!("action {index} failed: {message}"),
            json!({"code": "action_failed", "index": index, "message": message}),
        ),
        EpisodeError::Plan(e) => {
            let code = match e {
                PlanError::NoPath { .. } => "no_path",
                PlanError::NoGoalSet => "no_goal_set",
                PlanError::StartBlocked(_) => "start_blocked",
                PlanError::BlockedCellOnPath(_) => "blocked_cell_on_path",
            };
            ApiError::unprocessable(code, e.to_string(), json!({"code": code, "message": e.to_string()}))
        }
    }
}
