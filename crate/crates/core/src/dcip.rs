//! The closed adaptation loop: parse the instruction, apply its actions,
//! plan, then step the world along the plan and replan when observations
//! invalidate it.
//!
//! Every replan re-parses the episode's instructions against the current
//! landmark registry and applies the result to a fresh copy of the observed
//! grid (current occupancy, zero cost layer, no goal). Instruction-derived
//! costs are therefore re-derived, never accumulated. Observed occupancy is
//! laid over the result so a `RESET_MAP` cannot erase dynamic obstacles.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::action::{apply_sequence, Action, ActionSequence, GoalTarget, RegionRef};
use crate::grid::{Cell, Cost, CostMode, GridState, Region};
use crate::instruct::{dissect, kinds_in, parse_instruction, InstructError, NluBackend};
use crate::landmarks::{LandmarkKind, LandmarkRegistry};
use crate::planner::{plan, Direction, PlanError, PlanResult};
use crate::profile::StrategyProfile;
use crate::world::{Observation, Pose, ScenarioEvent, WorldState};

/// Consecutive ticks a pedestrian may block the next cell before the loop
/// plans around pedestrians.
pub const PEDESTRIAN_PATIENCE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    GoalReached,
    NoPath,
    StepLimit,
    /// The instruction could not be parsed or its actions not applied.
    InstructionError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplanReason {
    Initial,
    Instruction,
    PathBlocked,
    NewLandmark,
    GoalInvalidated,
    PedestrianBlocked,
    LiteralLoop,
    StrategyChange,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EpisodeError {
    #[error(transparent)]
    Instruction(#[from] InstructError),
    #[error("action {index} failed: {message}")]
    Action { index: usize, message: String },
    #[error(transparent)]
    Plan(#[from] PlanError),
}

impl EpisodeError {
    fn outcome(&self) -> Outcome {
        match self {
            EpisodeError::Plan(_) => Outcome::NoPath,
            _ => Outcome::InstructionError,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EpisodeConfig {
    /// Defaults to `4 * (width + height)`.
    pub step_limit: Option<usize>,
    /// Replan on every tick.
    pub literal_loop: bool,
}

pub fn default_step_limit(world: &WorldState) -> usize {
    4 * (world.grid().width() + world.grid().height())
}

/// What the current plan depends on, captured when it was derived.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveConstraints {
    /// Landmark kinds named by avoid/prefer constraints or by the landmarks
    /// they ground to.
    pub kinds: BTreeSet<LandmarkKind>,
    /// Landmarks referenced by name from the action sequence.
    pub names: BTreeSet<String>,
    pub landmarks: LandmarkRegistry,
    pub goal: Option<Cell>,
}

/// The plan being followed and the planning state it was computed on.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivePlan {
    pub state: GridState,
    pub constraints: ActiveConstraints,
    pub result: PlanResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub tick: u64,
    pub reason: ReplanReason,
    pub actions: ActionSequence,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub pose: Pose,
    pub events: Vec<ScenarioEvent>,
    pub replan: bool,
    pub illegal_move: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub ticks: u64,
    pub replans: usize,
    /// Sum of `1 + cost` over executed moves, each taken on the layer active
    /// at the time of the move.
    pub executed_cost: f64,
    pub executed_length: usize,
    pub executed_turns: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub instructions: Vec<String>,
    pub strategy: String,
    pub backend: String,
    /// One record per derivation; the first is the initial plan.
    pub plans: Vec<PlanRecord>,
    pub trace: Vec<TickRecord>,
    /// Cells visited, starting with the initial pose.
    pub trajectory: Vec<Cell>,
    pub outcome: Option<Outcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub totals: Totals,
}

impl EpisodeLog {
    pub fn replans(&self) -> usize {
        self.plans.len().saturating_sub(1)
    }

    /// Action sequences A_0, A_1, ... in derivation order.
    pub fn action_sequences(&self) -> impl Iterator<Item = &ActionSequence> {
        self.plans.iter().map(|p| &p.actions)
    }

    /// Line-delimited records: one `plan` record per derivation placed before
    /// the tick it happened on, one `tick` record per tick, then a `summary`.
    pub fn to_jsonl(&self) -> String {
        let mut lines = Vec::new();
        let mut plans = self.plans.iter().peekable();
        let mut emit_plans = |upto: u64, lines: &mut Vec<String>| {
            while let Some(p) = plans.next_if(|p| p.tick <= upto) {
                let mut v = serde_json::to_value(p).expect("plan record serializes");
                v["type"] = json!("plan");
                lines.push(v.to_string());
            }
        };
        emit_plans(0, &mut lines);
        for t in &self.trace {
            let mut v = serde_json::to_value(t).expect("tick record serializes");
            v["type"] = json!("tick");
            lines.push(v.to_string());
            emit_plans(t.tick, &mut lines);
        }
        emit_plans(u64::MAX, &mut lines);
        let summary = json!({
            "type": "summary",
            "instructions": self.instructions,
            "strategy": self.strategy,
            "backend": self.backend,
            "outcome": self.outcome,
            "note": self.note,
            "totals": self.totals,
            "trajectory": self.trajectory,
        });
        lines.push(summary.to_string());
        lines.join("\n") + "\n"
    }

    /// Reads back a stream written by [`EpisodeLog::to_jsonl`].
    pub fn from_jsonl(text: &str) -> Result<EpisodeLog, String> {
        let mut plans = Vec::new();
        let mut trace = Vec::new();
        let mut summary = None;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let mut v: Value = serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
            let kind = v.get("type").and_then(Value::as_str).unwrap_or_default().to_string();
            if let Some(obj) = v.as_object_mut() {
                obj.remove("type");
            }
            let bad = |e: serde_json::Error| format!("line {}: {e}", i + 1);
            match kind.as_str() {
                "plan" => plans.push(serde_json::from_value(v).map_err(bad)?),
                "tick" => trace.push(serde_json::from_value(v).map_err(bad)?),
                "summary" => summary = Some(v),
                other => return Err(format!("line {}: unknown record type {other:?}", i + 1)),
            }
        }
        let s = summary.ok_or("missing summary record")?;
        Ok(EpisodeLog {
            instructions: summary_field(&s, "instructions")?,
            strategy: summary_field(&s, "strategy")?,
            backend: summary_field(&s, "backend")?,
            plans,
            trace,
            trajectory: summary_field(&s, "trajectory")?,
            outcome: summary_field(&s, "outcome")?,
            note: summary_field(&s, "note")?,
            totals: summary_field(&s, "totals")?,
        })
    }
}

fn summary_field<T: serde::de::DeserializeOwned>(summary: &Value, name: &str) -> Result<T, String> {
    let value = summary.get(name).cloned().unwrap_or(Value::Null);
    serde_json::from_value(value).map_err(|e| format!("summary {name}: {e}"))
}

/// Why the current plan is no longer valid, if it is not.
pub fn replan_reason(observation: &Observation, current: &ActivePlan, remaining: &[Cell]) -> Option<ReplanReason> {
    let constraints = &current.constraints;
    if let Some(goal) = constraints.goal {
        if observation.grid.is_occupied(goal) {
            return Some(ReplanReason::GoalInvalidated);
        }
    }
    if remaining
        .iter()
        .any(|&c| observation.grid.is_occupied(c) || current.state.costs().get(c).is_blocked())
    {
        return Some(ReplanReason::PathBlocked);
    }
    let relevant = observation.landmarks.iter().any(|(name, landmark)| {
        constraints.landmarks.get(name) != Some(landmark)
            && (constraints.kinds.contains(&landmark.kind) || constraints.names.contains(name))
    });
    relevant.then_some(ReplanReason::NewLandmark)
}

/// True iff a remaining path cell became occupied or BLOCKED, a landmark of
/// a constrained kind appeared or changed, or the goal was invalidated.
pub fn needs_replan(observation: &Observation, current: &ActivePlan, remaining: &[Cell]) -> bool {
    replan_reason(observation, current, remaining).is_some()
}

fn constraints_for(
    instructions: &[String],
    actions: &ActionSequence,
    observation: &Observation,
    goal: Option<Cell>,
) -> ActiveConstraints {
    let mut kinds = BTreeSet::new();
    let mut names = BTreeSet::new();
    for text in instructions {
        if let Ok(parts) = dissect(text) {
            for c in &parts.constraints {
                kinds.extend(kinds_in(&c.object));
            }
        }
    }
    for action in actions {
        if let Some(RegionRef::Landmark(name)) = action.region_ref() {
            if let Some(l) = observation.landmarks.get(name) {
                if !matches!(action, Action::SetGoal { .. }) {
                    kinds.insert(l.kind);
                }
            }
            names.insert(name.clone());
        }
        if let Action::SetGoal { target: GoalTarget::Landmark(name) } = action {
            names.insert(name.clone());
        }
    }
    ActiveConstraints {
        kinds,
        names,
        landmarks: observation.landmarks.clone(),
        goal,
    }
}

/// Cells within `radius` (Chebyshev) of pedestrians and of obstacles that
/// are not part of the initial map.
fn safety_margin(observation: &Observation, radius: usize) -> Region {
    let grid = &observation.grid;
    let mut sources: Vec<Cell> = observation.pedestrian_cells().collect();
    for y in 0..grid.height() {
        for x in 0..grid.width() {
            if grid.is_occupied((x, y)) && !grid.base().is_occupied((x, y)) {
                sources.push((x, y));
            }
        }
    }
    let r = radius as isize;
    let mut cells = BTreeSet::new();
    for (sx, sy) in sources {
        for dy in -r..=r {
            for dx in -r..=r {
                let (Some(x), Some(y)) = (sx.checked_add_signed(dx), sy.checked_add_signed(dy)) else {
                    continue;
                };
                if grid.in_bounds((x, y)) && !grid.is_occupied((x, y)) {
                    cells.insert((x, y));
                }
            }
        }
    }
    Region::Cells(cells)
}

/// A running episode: the world it owns, the instructions in force and the
/// plan being followed.
pub struct Episode {
    world: WorldState,
    profile: StrategyProfile,
    config: EpisodeConfig,
    step_limit: usize,
    active: Option<ActivePlan>,
    /// Index of the current pose within the active path.
    index: usize,
    blocked_ticks: usize,
    log: EpisodeLog,
}

impl Episode {
    pub fn new(world: WorldState, profile: StrategyProfile, config: EpisodeConfig, backend_label: &str) -> Self {
        let step_limit = config.step_limit.unwrap_or_else(|| default_step_limit(&world));
        let log = EpisodeLog {
            instructions: Vec::new(),
            strategy: profile.name.label().to_string(),
            backend: backend_label.to_string(),
            plans: Vec::new(),
            trace: Vec::new(),
            trajectory: vec![world.pose().cell()],
            outcome: None,
            note: None,
            totals: Totals::default(),
        };
        Self {
            world,
            profile,
            config,
            step_limit,
            active: None,
            index: 0,
            blocked_ticks: 0,
            log,
        }
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn profile(&self) -> &StrategyProfile {
        &self.profile
    }

    pub fn log(&self) -> &EpisodeLog {
        &self.log
    }

    pub fn into_log(self) -> EpisodeLog {
        self.log
    }

    pub fn active(&self) -> Option<&ActivePlan> {
        self.active.as_ref()
    }

    pub fn is_finished(&self) -> bool {
        self.log.outcome.is_some()
    }

    /// Path cells still ahead of the robot, current pose first.
    pub fn remaining_path(&self) -> &[Cell] {
        match &self.active {
            Some(a) => &a.result.path.cells()[self.index.min(a.result.path.cells().len())..],
            None => &[],
        }
    }

    /// Switches strategy; takes effect at the next derivation.
    pub fn set_profile(&mut self, profile: StrategyProfile) {
        self.log.strategy = profile.name.label().to_string();
        self.profile = profile;
    }

    /// Switches strategy and, if instructions are in force, replans under
    /// it. On failure the previous profile and plan stay active.
    pub fn switch_profile(&mut self, profile: StrategyProfile, backend: &dyn NluBackend) -> Result<(), EpisodeError> {
        let previous = std::mem::replace(&mut self.profile, profile);
        if self.log.instructions.is_empty() || self.is_finished() {
            self.log.strategy = self.profile.name.label().to_string();
            return Ok(());
        }
        let instructions = self.log.instructions.clone();
        match self.replan(&instructions, backend, ReplanReason::StrategyChange, false) {
            Ok(_) => {
                self.log.strategy = self.profile.name.label().to_string();
                self.sync_totals();
                Ok(())
            }
            Err(e) => {
                self.profile = previous;
                self.sync_totals();
                Err(e)
            }
        }
    }

    /// Applies an event now if it is due, otherwise queues it. Returns
    /// whether it was applied immediately. Its effect on the plan is
    /// observed on the next tick.
    pub fn inject_event(&mut self, event: ScenarioEvent) -> Result<bool, crate::world::WorldError> {
        if event.at_time <= self.world.tick() {
            self.world.apply_event(&event.kind)?;
            Ok(true)
        } else {
            // Validate against the current map before queueing.
            self.world.clone().apply_event(&event.kind)?;
            self.world.schedule(event);
            Ok(false)
        }
    }

    /// Parses every instruction in force against `observation` and derives
    /// the planning state.
    fn derive(
        &self,
        instructions: &[String],
        observation: &Observation,
        backend: &dyn NluBackend,
        pedestrians_block: bool,
    ) -> Result<(ActionSequence, GridState, ActiveConstraints), (ActionSequence, EpisodeError)> {
        let mut actions = Vec::new();
        let mut safe_distance = false;
        for text in instructions {
            let parsed = parse_instruction(text, &observation.landmarks, backend)
                .map_err(|e| (ActionSequence::default(), e.into()))?;
            safe_distance |= parsed.safe_distance;
            actions.extend(parsed.actions.0);
        }
        if safe_distance && self.profile.safety_inflation > 0 {
            let margin = safety_margin(observation, self.profile.safety_inflation);
            if !margin.is_empty() {
                let goal_at = actions.iter().position(|a| matches!(a, Action::SetGoal { .. }));
                let action = Action::ModifyCost {
                    region: RegionRef::Inline(margin),
                    value: Cost::Finite(self.profile.safety_cost),
                    mode: CostMode::Add,
                };
                actions.insert(goal_at.unwrap_or(actions.len()), action);
            }
        }
        let actions = ActionSequence::new(actions);
        let fresh = observation.grid.with_zero_costs().clear_goal();
        let applied = apply_sequence(&fresh, &actions, &observation.landmarks, &self.profile).map_err(|e| {
            let err = EpisodeError::Action { index: e.index, message: e.source.to_string() };
            (actions.clone(), err)
        })?;
        let mut occupancy = observation.grid.occupancy().clone();
        if pedestrians_block {
            for cell in observation.pedestrian_cells() {
                occupancy.set(cell, true);
            }
        }
        let state = applied
            .with_occupancy(occupancy)
            .map_err(|e| (actions.clone(), EpisodeError::Action { index: 0, message: e.to_string() }))?;
        let constraints = constraints_for(instructions, &actions, observation, state.goal());
        Ok((actions, state, constraints))
    }

    /// Derives and plans from the current pose. On success the new plan
    /// replaces the active one; on failure the active plan is kept. Either
    /// way the attempt is logged.
    fn replan(
        &mut self,
        instructions: &[String],
        backend: &dyn NluBackend,
        reason: ReplanReason,
        pedestrians_block: bool,
    ) -> Result<&ActivePlan, EpisodeError> {
        let observation = self.world.observe();
        let tick = observation.tick;
        let derived = self
            .derive(instructions, &observation, backend, pedestrians_block)
            .and_then(|(actions, state, constraints)| match plan(&state, observation.pose.cell(), &self.profile) {
                Ok(result) => Ok((actions, state, constraints, result)),
                Err(e) => Err((actions, e.into())),
            });
        match derived {
            Ok((actions, state, constraints, result)) => {
                self.log.plans.push(PlanRecord {
                    tick,
                    reason,
                    actions,
                    plan: Some(result.clone()),
                    error: None,
                });
                self.index = 0;
                self.active = Some(ActivePlan { state, constraints, result });
                Ok(self.active.as_ref().expect("just set"))
            }
            Err((actions, err)) => {
                self.log.plans.push(PlanRecord {
                    tick,
                    reason,
                    actions,
                    plan: None,
                    error: Some(err.to_string()),
                });
                Err(err)
            }
        }
    }

    fn sync_totals(&mut self) {
        self.log.totals.replans = self.log.replans();
        self.log.totals.ticks = self.world.tick();
        let path = crate::planner::Path(self.log.trajectory.clone());
        self.log.totals.executed_length = path.length();
        self.log.totals.executed_turns = path.turns();
    }

    fn finish(&mut self, outcome: Outcome, note: Option<String>) {
        self.log.outcome = Some(outcome);
        if note.is_some() {
            self.log.note = note;
        }
        self.sync_totals();
    }

    fn at_goal(&self) -> bool {
        self.active
            .as_ref()
            .and_then(|a| a.state.goal())
            .is_some_and(|g| g == self.world.pose().cell())
    }

    /// Adds an instruction to those in force and replans from the current
    /// pose. On failure the instruction is dropped and the previous plan
    /// stays active.
    pub fn instruct(&mut self, text: &str, backend: &dyn NluBackend) -> Result<&ActivePlan, EpisodeError> {
        let mut instructions = self.log.instructions.clone();
        instructions.push(text.to_string());
        let reason = if self.log.plans.is_empty() { ReplanReason::Initial } else { ReplanReason::Instruction };
        self.replan(&instructions, backend, reason, false)?;
        self.log.instructions = instructions;
        if self.log.outcome.is_some() && !self.at_goal() {
            // A new goal reopens a finished episode.
            self.log.outcome = None;
            self.log.note = None;
        }
        if self.at_goal() {
            self.finish(Outcome::GoalReached, None);
        }
        self.sync_totals();
        Ok(self.active.as_ref().expect("replan succeeded"))
    }

    /// Advances the world by one tick, moving along the active plan if there
    /// is one. Returns the trace record for the tick.
    pub fn advance(&mut self, backend: &dyn NluBackend) -> TickRecord {
        let next = match (&self.active, self.is_finished()) {
            (Some(a), false) => a.result.path.cells().get(self.index + 1).copied(),
            _ => None,
        };
        let from = self.world.pose().cell();
        let mv = next.and_then(|n| Direction::between(from, n));
        let report = self.world.step(mv);
        let observation = report.observation;
        let moved = observation.pose.cell() != from;
        if moved {
            self.index += 1;
            self.blocked_ticks = 0;
            let cell = observation.pose.cell();
            self.log.trajectory.push(cell);
            let zone = self.active.as_ref().and_then(|a| a.state.costs().get(cell).finite()).unwrap_or(0.0);
            self.log.totals.executed_cost += 1.0 + zone;
        } else if next.is_some_and(|n| observation.pedestrians.iter().any(|p| p.position == n)) {
            self.blocked_ticks += 1;
        }

        let mut replanned = false;
        if !self.is_finished() && self.active.is_some() {
            if self.at_goal() {
                self.finish(Outcome::GoalReached, None);
            } else {
                let active = self.active.as_ref().expect("checked");
                let remaining = &active.result.path.cells()[(self.index + 1).min(active.result.path.cells().len())..];
                let reason = if self.config.literal_loop {
                    Some(ReplanReason::LiteralLoop)
                } else {
                    replan_reason(&observation, active, remaining)
                };
                let instructions = self.log.instructions.clone();
                if let Some(reason) = reason {
                    replanned = true;
                    if let Err(e) = self.replan(&instructions, backend, reason, false) {
                        self.active = None;
                        self.finish(e.outcome(), Some(e.to_string()));
                    } else if self.at_goal() {
                        self.finish(Outcome::GoalReached, None);
                    }
                } else if self.blocked_ticks >= PEDESTRIAN_PATIENCE {
                    replanned = true;
                    // Planning around pedestrians may fail while they stand in
                    // a doorway; keep the old plan and wait in that case.
                    let _ = self.replan(&instructions, backend, ReplanReason::PedestrianBlocked, true);
                    self.blocked_ticks = 0;
                }
            }
            if !self.is_finished() && self.world.tick() >= self.step_limit as u64 {
                self.finish(Outcome::StepLimit, Some(format!("step limit {} reached", self.step_limit)));
            }
        }
        self.sync_totals();
        let record = TickRecord {
            tick: observation.tick,
            pose: observation.pose,
            events: report.events,
            replan: replanned,
            illegal_move: report.illegal_move.is_some(),
        };
        self.log.trace.push(record.clone());
        record
    }
}

/// Runs one instruction to completion on `world`.
pub fn run_episode(
    instruction: &str,
    world: WorldState,
    profile: &StrategyProfile,
    backend: &dyn NluBackend,
    config: EpisodeConfig,
) -> EpisodeLog {
    let mut episode = Episode::new(world, profile.clone(), config, backend.label());
    if let Err(e) = episode.instruct(instruction, backend) {
        episode.log.instructions.push(instruction.to_string());
        episode.finish(e.outcome(), Some(e.to_string()));
        return episode.into_log();
    }
    while !episode.is_finished() {
        episode.advance(backend);
    }
    episode.into_log()
}
