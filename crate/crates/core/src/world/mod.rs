//! Lockstep world simulator: robot pose, landmarks, pedestrians and
//! scheduled events.
//!
//! One call to [`WorldState::step`] advances the clock by one tick in this
//! order: due events, robot move, pedestrian moves.

mod scenario;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Cell, GridError, GridState, Region};
use crate::landmarks::{Landmark, LandmarkRegistry};
use crate::planner::Direction;

pub use scenario::{load_scenario, ScenarioError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pose {
    pub x: usize,
    pub y: usize,
    /// Direction of the last move; east before the first move.
    pub theta: Direction,
}

impl Pose {
    pub fn new(cell: Cell) -> Self {
        Self { x: cell.0, y: cell.1, theta: Direction::E }
    }

    pub fn cell(&self) -> Cell {
        (self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    AddObstacle { region: Region },
    RemoveObstacle { region: Region },
    AddLandmark { name: String, landmark: Landmark },
    MovePedestrian { id: String, waypoint: Cell },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEvent {
    pub at_time: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pedestrian {
    pub id: String,
    pub position: Cell,
    /// Visited cyclically.
    pub waypoints: Vec<Cell>,
    /// Index of the waypoint currently walked towards.
    pub next: usize,
}

impl Pedestrian {
    pub fn new(id: impl Into<String>, position: Cell, waypoints: Vec<Cell>) -> Self {
        Self { id: id.into(), position, waypoints, next: 0 }
    }

    /// Next cell on the way to the current waypoint: x first, then y.
    fn desired_step(&self) -> Option<Cell> {
        let target = *self.waypoints.get(self.next)?;
        let (x, y) = self.position;
        if x != target.0 {
            Some((if target.0 > x { x + 1 } else { x - 1 }, y))
        } else if y != target.1 {
            Some((x, if target.1 > y { y + 1 } else { y - 1 }))
        } else {
            None
        }
    }

    fn advance_waypoint(&mut self) {
        for _ in 0..self.waypoints.len() {
            if self.waypoints[self.next] != self.position {
                break;
            }
            self.next = (self.next + 1) % self.waypoints.len();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PedestrianMode {
    Waypoints,
    RandomWalk { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("illegal move {direction:?} from {from:?}: target cell is not free")]
    IllegalMove { from: Cell, direction: Direction },
    #[error("unknown pedestrian {0:?}")]
    UnknownPedestrian(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Consistent snapshot of a single tick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    pub tick: u64,
    #[serde(skip)]
    pub grid: GridState,
    pub pose: Pose,
    pub landmarks: LandmarkRegistry,
    pub pedestrians: Vec<Pedestrian>,
}

impl Observation {
    pub fn pedestrian_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.pedestrians.iter().map(|p| p.position)
    }
}

/// What one tick did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub observation: Observation,
    pub events: Vec<ScenarioEvent>,
    /// Set when the requested move was rejected; the tick advanced anyway.
    pub illegal_move: Option<WorldError>,
}

#[derive(Debug, Clone)]
pub struct WorldState {
    pub name: String,
    tick: u64,
    grid: GridState,
    pose: Pose,
    registry: LandmarkRegistry,
    pedestrians: Vec<Pedestrian>,
    pending: Vec<ScenarioEvent>,
    mode: PedestrianMode,
    rng: ChaCha8Rng,
}

impl PartialEq for WorldState {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.tick == other.tick
            && self.grid == other.grid
            && self.pose == other.pose
            && self.registry == other.registry
            && self.pedestrians == other.pedestrians
            && self.pending == other.pending
            && self.mode == other.mode
            && self.rng.get_word_pos() == other.rng.get_word_pos()
    }
}

impl WorldState {
    /// A world without pedestrians or events. `grid` supplies the occupancy;
    /// its cost layer and goal are dropped.
    pub fn new(grid: GridState, start: Cell) -> Result<Self, GridError> {
        if !grid.in_bounds(start) {
            return Err(GridError::OutOfBounds(start));
        }
        if grid.is_occupied(start) {
            return Err(GridError::GoalOccupied(start));
        }
        Ok(Self {
            name: String::new(),
            tick: 0,
            grid: grid.with_zero_costs().clear_goal(),
            pose: Pose::new(start),
            registry: LandmarkRegistry::new(),
            pedestrians: Vec::new(),
            pending: Vec::new(),
            mode: PedestrianMode::Waypoints,
            rng: ChaCha8Rng::seed_from_u64(0),
        })
    }

    pub fn with_registry(mut self, registry: LandmarkRegistry) -> Self {
        self.registry = registry;
        self
    }

    pub fn with_pedestrians(mut self, pedestrians: Vec<Pedestrian>) -> Self {
        self.pedestrians = pedestrians;
        for p in &mut self.pedestrians {
            p.advance_waypoint();
        }
        self
    }

    /// Schedules events; they are kept sorted by time, stable for equal
    /// times.
    pub fn with_events(mut self, events: Vec<ScenarioEvent>) -> Self {
        self.pending.extend(events);
        self.pending.sort_by_key(|e| e.at_time);
        self
    }

    pub fn with_mode(mut self, mode: PedestrianMode) -> Self {
        if let PedestrianMode::RandomWalk { seed } = mode {
            self.rng = ChaCha8Rng::seed_from_u64(seed);
        }
        self.mode = mode;
        self
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn grid(&self) -> &GridState {
        &self.grid
    }

    pub fn pose(&self) -> Pose {
        self.pose
    }

    pub fn registry(&self) -> &LandmarkRegistry {
        &self.registry
    }

    pub fn pedestrians(&self) -> &[Pedestrian] {
        &self.pedestrians
    }

    pub fn pending_events(&self) -> &[ScenarioEvent] {
        &self.pending
    }

    pub fn mode(&self) -> &PedestrianMode {
        &self.mode
    }

    pub fn observe(&self) -> Observation {
        Observation {
            tick: self.tick,
            grid: self.grid.clone(),
            pose: self.pose,
            landmarks: self.registry.clone(),
            pedestrians: self.pedestrians.clone(),
        }
    }

    fn pedestrian_at(&self, cell: Cell) -> bool {
        self.pedestrians.iter().any(|p| p.position == cell)
    }

    /// True if a robot or pedestrian may stand on `cell`.
    fn is_free(&self, cell: Cell) -> bool {
        self.grid.in_bounds(cell) && !self.grid.is_occupied(cell)
    }

    /// Advances one tick. A rejected move leaves the pose unchanged.
    pub fn step(&mut self, mv: Option<Direction>) -> StepReport {
        self.tick += 1;
        let due = self.pending.iter().take_while(|e| e.at_time <= self.tick).count();
        let events: Vec<ScenarioEvent> = self.pending.drain(..due).collect();
        for event in &events {
            // Scheduled events were validated at load; a failing one is
            // dropped rather than stopping the clock.
            let _ = self.apply_event(&event.kind);
        }

        let mut illegal_move = None;
        if let Some(direction) = mv {
            let from = self.pose.cell();
            match direction.step(from).filter(|&c| self.is_free(c) && !self.pedestrian_at(c)) {
                Some(to) => {
                    self.pose = Pose { x: to.0, y: to.1, theta: direction };
                }
                None => illegal_move = Some(WorldError::IllegalMove { from, direction }),
            }
        }

        self.move_pedestrians();
        StepReport {
            observation: self.observe(),
            events,
            illegal_move,
        }
    }

    fn move_pedestrians(&mut self) {
        for i in 0..self.pedestrians.len() {
            let desired = match self.mode {
                PedestrianMode::Waypoints => self.pedestrians[i].desired_step(),
                PedestrianMode::RandomWalk { .. } => {
                    let choice = self.rng.random_range(0..5usize);
                    Direction::ALL
                        .get(choice)
                        .and_then(|d| d.step(self.pedestrians[i].position))
                }
            };
            if let Some(cell) = desired {
                if self.is_free(cell) && !self.pedestrian_at(cell) && cell != self.pose.cell() {
                    self.pedestrians[i].position = cell;
                }
            }
            if self.mode == PedestrianMode::Waypoints {
                self.pedestrians[i].advance_waypoint();
            }
        }
    }

    /// Applies an event immediately, regardless of its time. Fails without
    /// modification if a region leaves the grid.
    pub fn apply_event(&mut self, event: &EventKind) -> Result<(), WorldError> {
        let (width, height) = (self.grid.width(), self.grid.height());
        match event {
            EventKind::AddObstacle { region } => {
                region.check_bounds(width, height)?;
                let mut occupancy = self.grid.occupancy().clone();
                for cell in region.cells() {
                    // Never entomb the robot or a pedestrian.
                    if cell != self.pose.cell() && !self.pedestrian_at(cell) {
                        occupancy.set(cell, true);
                    }
                }
                self.grid = self.grid.with_occupancy(occupancy)?;
            }
            EventKind::RemoveObstacle { region } => {
                region.check_bounds(width, height)?;
                let mut occupancy = self.grid.occupancy().clone();
                for cell in region.cells() {
                    occupancy.set(cell, self.grid.base().is_occupied(cell));
                }
                self.grid = self.grid.with_occupancy(occupancy)?;
            }
            EventKind::AddLandmark { name, landmark } => {
                landmark.region.check_bounds(width, height)?;
                if let Some(access) = landmark.access {
                    if !self.grid.in_bounds(access) {
                        return Err(GridError::OutOfBounds(access).into());
                    }
                }
                self.registry.insert(name.clone(), landmark.clone());
            }
            EventKind::MovePedestrian { id, waypoint } => {
                if !self.grid.in_bounds(*waypoint) {
                    return Err(GridError::OutOfBounds(*waypoint).into());
                }
                let p = self
                    .pedestrians
                    .iter_mut()
                    .find(|p| &p.id == id)
                    .ok_or_else(|| WorldError::UnknownPedestrian(id.clone()))?;
                p.waypoints = vec![*waypoint];
                p.next = 0;
            }
        }
        Ok(())
    }

    /// Queues an event for a later tick (fires on the first step whose tick
    /// reaches `at_time`).
    pub fn schedule(&mut self, event: ScenarioEvent) {
        let at = self.pending.partition_point(|e| e.at_time <= event.at_time);
        self.pending.insert(at, event);
    }

    /// Cells occupied by anything the robot may not enter.
    pub fn region_blocked(&self, region: &Region) -> bool {
        region.cells().into_iter().any(|c| !self.is_free(c))
    }
}
