//! The action set and its application to a [`GridState`].
//!
//! Every action maps onto exactly one grid transformation: `ResetMap` onto
//! [`GridState::reset_map`], the cost actions onto [`GridState::modify_cost`]
//! and `SetGoal` onto [`GridState::set_goal`]. `AvoidAreas` and
//! `PreferAreas` are shorthands that lower to `ModifyCost` with magnitudes
//! taken from the active [`StrategyProfile`].

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::grid::{Cell, Cost, CostMode, GridError, GridState, Region};
use crate::landmarks::LandmarkRegistry;
use crate::profile::StrategyProfile;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RegionRef {
    Landmark(String),
    Inline(Region),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GoalTarget {
    Landmark(String),
    Cell(Cell),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    ResetMap,
    ModifyCost { region: RegionRef, value: Cost, mode: CostMode },
    AvoidAreas { region: RegionRef },
    PreferAreas { region: RegionRef },
    SetGoal { target: GoalTarget },
}

impl Action {
    pub fn avoid(name: &str) -> Self {
        Action::AvoidAreas { region: RegionRef::Landmark(name.to_string()) }
    }

    pub fn prefer(name: &str) -> Self {
        Action::PreferAreas { region: RegionRef::Landmark(name.to_string()) }
    }

    pub fn goal_landmark(name: &str) -> Self {
        Action::SetGoal { target: GoalTarget::Landmark(name.to_string()) }
    }

    pub fn goal_cell(cell: Cell) -> Self {
        Action::SetGoal { target: GoalTarget::Cell(cell) }
    }

    /// Payload name of the variant.
    pub fn keyword(&self) -> &'static str {
        match self {
            Action::ResetMap => "RESET_MAP",
            Action::ModifyCost { .. } => "MODIFY_COST",
            Action::AvoidAreas { .. } => "AVOID_AREAS",
            Action::PreferAreas { .. } => "PREFER_AREAS",
            Action::SetGoal { .. } => "SET_GOAL",
        }
    }

    /// Emission rank: resets, then cost modifications, then goals.
    pub fn phase(&self) -> u8 {
        match self {
            Action::ResetMap => 0,
            Action::ModifyCost { .. } | Action::AvoidAreas { .. } | Action::PreferAreas { .. } => 1,
            Action::SetGoal { .. } => 2,
        }
    }

    pub fn region_ref(&self) -> Option<&RegionRef> {
        match self {
            Action::ModifyCost { region, .. }
            | Action::AvoidAreas { region }
            | Action::PreferAreas { region } => Some(region),
            Action::ResetMap | Action::SetGoal { .. } => None,
        }
    }

    /// Replaces the shorthand variants by the `ModifyCost` they stand for.
    pub fn lower(&self, profile: &StrategyProfile) -> Action {
        match self {
            Action::AvoidAreas { region } => Action::ModifyCost {
                region: region.clone(),
                value: profile.avoid_cost,
                mode: CostMode::Set,
            },
            Action::PreferAreas { region } => Action::ModifyCost {
                region: region.clone(),
                value: Cost::Finite(profile.prefer_discount),
                mode: CostMode::Set,
            },
            other => other.clone(),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let region = |r: &RegionRef| match r {
            RegionRef::Landmark(name) => name.clone(),
            RegionRef::Inline(Region::Rect { x0, y0, x1, y1 }) => format!("rect({x0},{y0},{x1},{y1})"),
            RegionRef::Inline(Region::Cells(c)) => format!("cells[{}]", c.len()),
        };
        match self {
            Action::ResetMap => f.write_str("RESET_MAP"),
            Action::ModifyCost { region: r, value, mode } => {
                write!(f, "MODIFY_COST {} {} {:?}", region(r), value, mode)
            }
            Action::AvoidAreas { region: r } => write!(f, "AVOID_AREAS {}", region(r)),
            Action::PreferAreas { region: r } => write!(f, "PREFER_AREAS {}", region(r)),
            Action::SetGoal { target: GoalTarget::Landmark(name) } => write!(f, "SET_GOAL {name}"),
            Action::SetGoal { target: GoalTarget::Cell((x, y)) } => write!(f, "SET_GOAL ({x},{y})"),
        }
    }
}

/// Ordered list of actions, applied left to right and atomically.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActionSequence(pub Vec<Action>);

impl ActionSequence {
    pub fn new(actions: Vec<Action>) -> Self {
        Self(actions)
    }

    pub fn actions(&self) -> &[Action] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Action> {
        self.0.iter()
    }

    /// Stable reorder into resets, cost modifications, goals.
    pub fn canonical_order(mut self) -> Self {
        self.0.sort_by_key(Action::phase);
        self
    }

    pub fn concat(&self, other: &ActionSequence) -> ActionSequence {
        ActionSequence(self.0.iter().chain(other.0.iter()).cloned().collect())
    }

    pub fn lowered(&self, profile: &StrategyProfile) -> ActionSequence {
        ActionSequence(self.0.iter().map(|a| a.lower(profile)).collect())
    }
}

impl From<Vec<Action>> for ActionSequence {
    fn from(actions: Vec<Action>) -> Self {
        Self(actions)
    }
}

impl<'a> IntoIterator for &'a ActionSequence {
    type Item = &'a Action;
    type IntoIter = std::slice::Iter<'a, Action>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActionError {
    #[error("unknown landmark {0:?}")]
    UnknownLandmark(String),
    #[error("landmark {0:?} has no reachable access cell")]
    NoAccessCell(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("action {index} failed: {source}")]
pub struct SequenceError {
    pub index: usize,
    #[source]
    pub source: ActionError,
}

pub fn resolve_region(region: &RegionRef, registry: &LandmarkRegistry) -> Result<Region, ActionError> {
    match region {
        RegionRef::Inline(r) => Ok(r.clone()),
        RegionRef::Landmark(name) => registry
            .get(name)
            .map(|l| l.region.clone())
            .ok_or_else(|| ActionError::UnknownLandmark(name.clone())),
    }
}

pub fn resolve_goal(
    target: &GoalTarget,
    state: &GridState,
    registry: &LandmarkRegistry,
) -> Result<Cell, ActionError> {
    match target {
        GoalTarget::Cell(cell) => Ok(*cell),
        GoalTarget::Landmark(name) => {
            let landmark = registry
                .get(name)
                .ok_or_else(|| ActionError::UnknownLandmark(name.clone()))?;
            landmark
                .access_cell(state)
                .ok_or_else(|| ActionError::NoAccessCell(name.clone()))
        }
    }
}

pub fn apply_action(
    state: &GridState,
    action: &Action,
    registry: &LandmarkRegistry,
    profile: &StrategyProfile,
) -> Result<GridState, ActionError> {
    match action.lower(profile) {
        Action::ResetMap => Ok(state.reset_map()),
        Action::ModifyCost { region, value, mode } => {
            let region = resolve_region(&region, registry)?;
            Ok(state.modify_cost(&region, value, mode)?)
        }
        Action::SetGoal { target } => {
            let cell = resolve_goal(&target, state, registry)?;
            Ok(state.set_goal(cell)?)
        }
        Action::AvoidAreas { .. } | Action::PreferAreas { .. } => {
            unreachable!("shorthand actions are lowered before dispatch")
        }
    }
}

/// Left fold of [`apply_action`]. On failure the caller's state is untouched
/// and the error names the failing index.
pub fn apply_sequence(
    state: &GridState,
    seq: &ActionSequence,
    registry: &LandmarkRegistry,
    profile: &StrategyProfile,
) -> Result<GridState, SequenceError> {
    seq.iter()
        .enumerate()
        .try_fold(state.clone(), |acc, (index, action)| {
            apply_action(&acc, action, registry, profile).map_err(|source| SequenceError { index, source })
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiagnosticCode {
    UnknownLandmark,
    NoAccessCell,
    RegionOutOfBounds,
    InvalidRegion,
    GoalOutOfBounds,
    GoalOccupied,
    ValueBelowFloor,
    NonFiniteValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    pub message: String,
}

impl Diagnostic {
    fn new(code: DiagnosticCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.code, self.message)
    }
}

fn diagnose_grid(err: &GridError) -> Diagnostic {
    let code = match err {
        GridError::RegionOutOfBounds { .. } => DiagnosticCode::RegionOutOfBounds,
        GridError::InvalidRectangle { .. } => DiagnosticCode::InvalidRegion,
        GridError::ValueBelowFloor(_) => DiagnosticCode::ValueBelowFloor,
        GridError::NonFiniteValue => DiagnosticCode::NonFiniteValue,
        GridError::OutOfBounds(_) => DiagnosticCode::GoalOutOfBounds,
        GridError::GoalOccupied(_) => DiagnosticCode::GoalOccupied,
        GridError::MalformedMap { .. }
        | GridError::UnknownCharacter { .. }
        | GridError::MultipleGoals
        | GridError::MultipleStarts => DiagnosticCode::InvalidRegion,
    };
    Diagnostic::new(code, err.to_string())
}

/// Checks an action against a state without applying it. Reports every
/// problem found rather than stopping at the first.
pub fn validate_action(
    action: &Action,
    state: &GridState,
    registry: &LandmarkRegistry,
) -> Result<(), Vec<Diagnostic>> {
    let mut diagnostics = Vec::new();
    let check_region = |region: &RegionRef, diagnostics: &mut Vec<Diagnostic>| match resolve_region(region, registry) {
        Ok(r) => {
            if let Err(e) = r.check_bounds(state.width(), state.height()) {
                diagnostics.push(diagnose_grid(&e));
            }
        }
        Err(e) => diagnostics.push(Diagnostic::new(DiagnosticCode::UnknownLandmark, e.to_string())),
    };
    match action {
        Action::ResetMap => {}
        Action::ModifyCost { region, value, mode } => {
            check_region(region, &mut diagnostics);
            let value_check = match (mode, value) {
                (CostMode::Set, v) => v.validate(),
                (CostMode::Add, Cost::Finite(v)) if !v.is_finite() => Err(GridError::NonFiniteValue),
                (CostMode::Add, _) => Ok(()),
            };
            if let Err(e) = value_check {
                diagnostics.push(diagnose_grid(&e));
            }
        }
        Action::AvoidAreas { region } | Action::PreferAreas { region } => {
            check_region(region, &mut diagnostics);
        }
        Action::SetGoal { target } => match resolve_goal(target, state, registry) {
            Ok(cell) if !state.in_bounds(cell) => {
                diagnostics.push(diagnose_grid(&GridError::OutOfBounds(cell)));
            }
            Ok(cell) if state.is_impassable(cell) => {
                diagnostics.push(diagnose_grid(&GridError::GoalOccupied(cell)));
            }
            Ok(_) => {}
            Err(ActionError::NoAccessCell(name)) => diagnostics.push(Diagnostic::new(
                DiagnosticCode::NoAccessCell,
                format!("landmark {name:?} has no reachable access cell"),
            )),
            Err(e) => diagnostics.push(Diagnostic::new(DiagnosticCode::UnknownLandmark, e.to_string())),
        },
    }
    if diagnostics.is_empty() {
        Ok(())
    } else {
        Err(diagnostics)
    }
}
