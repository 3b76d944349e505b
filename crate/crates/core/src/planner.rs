//! Weighted best-first search over a [`GridState`] and the path metrics
//! reported for every plan.
//!
//! Moves are 4-connected. Entering a cell costs `1 + zone` (zone taken from
//! the cost layer when the profile honours zones, clamped at -0.5) plus the
//! profile's turn penalty whenever the move direction differs from the
//! previous one. Occupied and BLOCKED cells are never entered.
//!
//! The heuristic is `w * manhattan + turn_penalty * min_turns`, where `w` is
//! the cheapest possible step cost on the current layer (never below 0.5)
//! and `min_turns` is the number of direction changes an obstacle-free grid
//! would still force. Profiles without `layer_aware_heuristic` (the plain
//! baseline) use `0.5 * manhattan`. All variants are consistent, so the
//! first expansion of the goal is optimal.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Cell, Cost, GridState, COST_FLOOR};
use crate::profile::StrategyProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    E,
    S,
    W,
    N,
}

impl Direction {
    /// Expansion order.
    pub const ALL: [Direction; 4] = [Direction::E, Direction::S, Direction::W, Direction::N];

    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::E => (1, 0),
            Direction::S => (0, 1),
            Direction::W => (-1, 0),
            Direction::N => (0, -1),
        }
    }

    pub fn step(self, (x, y): Cell) -> Option<Cell> {
        let (dx, dy) = self.delta();
        Some((x.checked_add_signed(dx)?, y.checked_add_signed(dy)?))
    }

    /// Direction of a single 4-adjacent move, if `from` and `to` are adjacent.
    pub fn between(from: Cell, to: Cell) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.step(from) == Some(to))
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("no goal set")]
    NoGoalSet,
    #[error("start cell ({}, {}) is out of bounds or occupied", .0.0, .0.1)]
    StartBlocked(Cell),
    #[error("no path from ({}, {}) to ({}, {})", .start.0, .start.1, .goal.0, .goal.1)]
    NoPath { start: Cell, goal: Cell },
    #[error("path cell ({}, {}) is occupied or blocked", .0.0, .0.1)]
    BlockedCellOnPath(Cell),
}

/// Cells from start to goal inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(pub Vec<Cell>);

impl Path {
    pub fn cells(&self) -> &[Cell] {
        &self.0
    }

    pub fn length(&self) -> usize {
        path_length(self)
    }

    pub fn turns(&self) -> usize {
        count_turns(self)
    }

    pub fn start(&self) -> Option<Cell> {
        self.0.first().copied()
    }

    pub fn end(&self) -> Option<Cell> {
        self.0.last().copied()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.0.contains(&cell)
    }
}

/// Number of steps, `|path| - 1`.
pub fn path_length(path: &Path) -> usize {
    path.0.len().saturating_sub(1)
}

/// Number of positions where the step direction changes.
pub fn count_turns(path: &Path) -> usize {
    path.0
        .windows(2)
        .map(|w| (w[1].0 as isize - w[0].0 as isize, w[1].1 as isize - w[0].1 as isize))
        .collect::<Vec<_>>()
        .windows(2)
        .filter(|v| v[0] != v[1])
        .count()
}

/// Sum over entered cells of `1 + cost(cell)`; the start cell contributes
/// nothing.
pub fn path_cost(path: &Path, state: &GridState) -> Result<f64, PlanError> {
    let mut total = 0.0;
    for &cell in path.0.iter().skip(1) {
        match state.traversal_cost(cell) {
            Ok(Cost::Finite(zone)) => total += 1.0 + zone,
            _ => return Err(PlanError::BlockedCellOnPath(cell)),
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub path: Path,
    pub nodes_expanded: usize,
    pub search_time_s: f64,
    pub path_cost: f64,
    pub path_length: usize,
    pub turns: usize,
    /// Objective value minimised by the search (includes turn penalties and
    /// ignores zones when the profile does).
    pub search_cost: f64,
}

impl PlanResult {
    /// Everything except timing, for equality checks across runs.
    pub fn deterministic_eq(&self, other: &PlanResult) -> bool {
        self.path == other.path
            && self.nodes_expanded == other.nodes_expanded
            && self.path_cost == other.path_cost
            && self.path_length == other.path_length
            && self.turns == other.turns
            && self.search_cost == other.search_cost
    }
}

/// Cost of entering `cell` under `profile`, ignoring turns. `None` if the
/// cell cannot be entered.
pub fn step_cost(state: &GridState, cell: Cell, profile: &StrategyProfile) -> Option<f64> {
    match state.traversal_cost(cell).ok()? {
        Cost::Blocked => None,
        Cost::Finite(zone) if profile.honor_zones_in_search => Some(1.0 + zone.max(COST_FLOOR)),
        Cost::Finite(_) => Some(1.0),
    }
}

/// Lower bound on any single step cost under `profile` for this layer.
pub fn heuristic_weight(state: &GridState, profile: &StrategyProfile) -> f64 {
    if !profile.layer_aware_heuristic {
        1.0 + COST_FLOOR
    } else if profile.honor_zones_in_search {
        (1.0 + state.costs().min_finite()).clamp(1.0 + COST_FLOOR, 1.0)
    } else {
        1.0
    }
}

/// Fewest direction changes needed to reach `goal` from `cell` on an empty
/// grid when the last move was `heading`.
pub fn min_turns(cell: Cell, goal: Cell, heading: Option<Direction>) -> usize {
    let mut needed = Vec::with_capacity(2);
    match goal.0.cmp(&cell.0) {
        Ordering::Greater => needed.push(Direction::E),
        Ordering::Less => needed.push(Direction::W),
        Ordering::Equal => {}
    }
    match goal.1.cmp(&cell.1) {
        Ordering::Greater => needed.push(Direction::S),
        Ordering::Less => needed.push(Direction::N),
        Ordering::Equal => {}
    }
    let aligned = heading.is_none_or(|h| needed.contains(&h));
    match (needed.len(), aligned) {
        (0, _) => 0,
        (1, true) => 0,
        (1, false) => 1,
        (_, true) => 1,
        (_, false) => 2,
    }
}

#[derive(Debug, Clone, Copy)]
struct Heuristic {
    goal: Cell,
    weight: f64,
    turn_penalty: f64,
}

impl Heuristic {
    fn eval(&self, cell: Cell, heading: Option<Direction>) -> f64 {
        let manhattan = cell.0.abs_diff(self.goal.0) + cell.1.abs_diff(self.goal.1);
        let turns = if self.turn_penalty > 0.0 {
            min_turns(cell, self.goal, heading) as f64 * self.turn_penalty
        } else {
            0.0
        };
        self.weight * manhattan as f64 + turns
    }
}

#[derive(Debug, Clone, Copy)]
struct OpenEntry {
    f: f64,
    h: f64,
    g: f64,
    cell: Cell,
    heading: Option<Direction>,
}

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenEntry {}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenEntry {
    /// Reversed so the max-heap pops the smallest (f, h, y, x, heading).
    fn cmp(&self, other: &Self) -> Ordering {
        let heading = |e: &OpenEntry| e.heading.map_or(0, |d| d.index() + 1);
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.cell.1.cmp(&self.cell.1))
            .then_with(|| other.cell.0.cmp(&self.cell.0))
            .then_with(|| heading(other).cmp(&heading(self)))
    }
}

/// Search state layout: one slot per (cell, heading) when turns are
/// penalised, one per cell otherwise.
struct StateSpace {
    width: usize,
    track_heading: bool,
}

impl StateSpace {
    fn slots(&self, cells: usize) -> usize {
        if self.track_heading {
            cells * 5
        } else {
            cells
        }
    }

    fn index(&self, (x, y): Cell, heading: Option<Direction>) -> usize {
        let cell = y * self.width + x;
        if self.track_heading {
            cell * 5 + heading.map_or(0, |d| d.index() + 1)
        } else {
            cell
        }
    }

    fn cell(&self, slot: usize) -> Cell {
        let cell = if self.track_heading { slot / 5 } else { slot };
        (cell % self.width, cell / self.width)
    }
}

const NO_PARENT: u32 = u32::MAX;

/// Plans from `start` to the state's goal.
pub fn plan(state: &GridState, start: Cell, profile: &StrategyProfile) -> Result<PlanResult, PlanError> {
    let started = Instant::now();
    let goal = state.goal().ok_or(PlanError::NoGoalSet)?;
    if !state.in_bounds(start) || state.is_occupied(start) {
        return Err(PlanError::StartBlocked(start));
    }
    let cell_count = state.width() * state.height();
    let space = StateSpace {
        width: state.width(),
        track_heading: profile.turn_penalty > 0.0,
    };
    let heuristic = Heuristic {
        goal,
        weight: heuristic_weight(state, profile),
        turn_penalty: if profile.layer_aware_heuristic { profile.turn_penalty } else { 0.0 },
    };

    let mut best_g = vec![f64::INFINITY; space.slots(cell_count)];
    let mut parent = vec![NO_PARENT; space.slots(cell_count)];
    let mut closed = vec![false; space.slots(cell_count)];
    let mut expanded_cells = vec![false; cell_count];
    let mut nodes_expanded = 0usize;
    let mut open = BinaryHeap::new();

    let h0 = heuristic.eval(start, None);
    best_g[space.index(start, None)] = 0.0;
    open.push(OpenEntry { f: h0, h: h0, g: 0.0, cell: start, heading: None });

    let mut reached = None;
    while let Some(entry) = open.pop() {
        let slot = space.index(entry.cell, entry.heading);
        if closed[slot] || entry.g > best_g[slot] {
            continue;
        }
        closed[slot] = true;
        let cell_slot = entry.cell.1 * state.width() + entry.cell.0;
        if !expanded_cells[cell_slot] {
            expanded_cells[cell_slot] = true;
            nodes_expanded += 1;
        }
        if entry.cell == goal {
            reached = Some(entry);
            break;
        }
        for dir in Direction::ALL {
            let Some(next) = dir.step(entry.cell) else { continue };
            if !state.in_bounds(next) {
                continue;
            }
            let Some(base) = step_cost(state, next, profile) else { continue };
            let turn = match entry.heading {
                Some(h) if h != dir => profile.turn_penalty,
                _ => 0.0,
            };
            let heading = space.track_heading.then_some(dir);
            let next_slot = space.index(next, heading);
            let g = entry.g + base + turn;
            if closed[next_slot] || g >= best_g[next_slot] {
                continue;
            }
            best_g[next_slot] = g;
            parent[next_slot] = slot as u32;
            let h = heuristic.eval(next, Some(dir));
            open.push(OpenEntry { f: g + h, h, g, cell: next, heading });
        }
    }

    let end = reached.ok_or(PlanError::NoPath { start, goal })?;
    let mut cells = vec![end.cell];
    let mut cursor = space.index(end.cell, end.heading);
    while parent[cursor] != NO_PARENT {
        cursor = parent[cursor] as usize;
        cells.push(space.cell(cursor));
    }
    cells.reverse();
    let path = Path(cells);
    let path_cost = path_cost(&path, state)?;
    Ok(PlanResult {
        path_length: path_length(&path),
        turns: count_turns(&path),
        path_cost,
        nodes_expanded,
        search_cost: end.g,
        search_time_s: started.elapsed().as_secs_f64(),
        path,
    })
}

/// Plain shortest-path search on the state's occupancy with a zero cost
/// layer and no turn penalty.
pub fn plan_baseline(state: &GridState, start: Cell) -> Result<PlanResult, PlanError> {
    plan(&state.with_zero_costs(), start, &StrategyProfile::baseline())
}
