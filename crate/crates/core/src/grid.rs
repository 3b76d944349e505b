//! Occupancy grid, additive cost layer and the three primitive grid
//! transformations: map reset, cost modification and goal setting.
//!
//! Coordinates are `(x, y)` with `x` growing to the east (column) and `y`
//! growing to the south (row), matching the row-major map text.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A grid coordinate `(x, y)`.
pub type Cell = (usize, usize);

/// Lowest finite value a cost-layer entry may hold. Keeps the per-step
/// search cost `1 + cost` at or above 0.5.
pub const COST_FLOOR: f64 = -0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("malformed map at row {row}: {reason}")]
    MalformedMap { row: usize, reason: String },
    #[error("unknown map character {ch:?} at ({x}, {y})")]
    UnknownCharacter { ch: char, x: usize, y: usize },
    #[error("map declares more than one goal cell")]
    MultipleGoals,
    #[error("map declares more than one start cell")]
    MultipleStarts,
    #[error("region cell ({}, {}) lies outside the {width}x{height} grid", .cell.0, .cell.1)]
    RegionOutOfBounds { cell: Cell, width: usize, height: usize },
    #[error("invalid rectangle ({x0}, {y0})-({x1}, {y1})")]
    InvalidRectangle { x0: usize, y0: usize, x1: usize, y1: usize },
    #[error("cost value {0} is below the floor {COST_FLOOR}")]
    ValueBelowFloor(f64),
    #[error("cost value must be finite or BLOCKED")]
    NonFiniteValue,
    #[error("cell ({}, {}) is out of bounds", .0.0, .0.1)]
    OutOfBounds(Cell),
    #[error("goal cell ({}, {}) is occupied or blocked", .0.0, .0.1)]
    GoalOccupied(Cell),
}

/// Binary occupancy map. 0 = free, 1 = occupied.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    cells: Vec<u8>,
}

impl OccupancyGrid {
    pub fn free(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            cells: vec![0; width * height],
        }
    }

    /// Builds a grid from row-major values; every value must be 0 or 1.
    pub fn from_cells(width: usize, height: usize, cells: Vec<u8>) -> Result<Self, GridError> {
        if cells.len() != width * height {
            return Err(GridError::MalformedMap {
                row: 0,
                reason: format!("expected {} cells, got {}", width * height, cells.len()),
            });
        }
        if let Some(i) = cells.iter().position(|&v| v > 1) {
            return Err(GridError::MalformedMap {
                row: i / width.max(1),
                reason: format!("occupancy value {} is not 0 or 1", cells[i]),
            });
        }
        Ok(Self { width, height, cells })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn in_bounds(&self, (x, y): Cell) -> bool {
        x < self.width && y < self.height
    }

    pub fn index(&self, (x, y): Cell) -> usize {
        y * self.width + x
    }

    /// Out-of-bounds cells report as occupied.
    pub fn is_occupied(&self, cell: Cell) -> bool {
        !self.in_bounds(cell) || self.cells[self.index(cell)] == 1
    }

    pub fn set(&mut self, cell: Cell, occupied: bool) {
        let i = self.index(cell);
        self.cells[i] = u8::from(occupied);
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height)
            .flat_map(move |y| (0..self.width).map(move |x| (x, y)))
            .filter(move |&c| !self.is_occupied(c))
    }
}

/// A single cost-layer entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cost {
    Finite(f64),
    Blocked,
}

impl Cost {
    pub const ZERO: Cost = Cost::Finite(0.0);

    pub fn is_blocked(self) -> bool {
        matches!(self, Cost::Blocked)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Cost::Finite(v) => Some(v),
            Cost::Blocked => None,
        }
    }

    /// Checks that a value is admissible for set-mode writes.
    pub fn validate(self) -> Result<(), GridError> {
        match self {
            Cost::Blocked => Ok(()),
            Cost::Finite(v) if !v.is_finite() => Err(GridError::NonFiniteValue),
            Cost::Finite(v) if v < COST_FLOOR => Err(GridError::ValueBelowFloor(v)),
            Cost::Finite(_) => Ok(()),
        }
    }

    /// Add-mode combination; finite sums clamp at the floor.
    pub fn combine(self, other: Cost) -> Cost {
        match (self, other) {
            (Cost::Finite(a), Cost::Finite(b)) => Cost::Finite((a + b).max(COST_FLOOR)),
            _ => Cost::Blocked,
        }
    }
}

impl Default for Cost {
    fn default() -> Self {
        Cost::ZERO
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(v) => write!(f, "{v}"),
            Cost::Blocked => f.write_str("BLOCKED"),
        }
    }
}

impl Serialize for Cost {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Cost::Finite(v) => serializer.serialize_f64(*v),
            Cost::Blocked => serializer.serialize_str("BLOCKED"),
        }
    }
}

impl<'de> Deserialize<'de> for Cost {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Tag(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(v) => Ok(Cost::Finite(v)),
            Raw::Tag(s) if s == "BLOCKED" => Ok(Cost::Blocked),
            Raw::Tag(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"BLOCKED\", got {s:?}"
            ))),
        }
    }
}

/// Per-cell additive traversal costs, same shape as the owning grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLayer {
    width: usize,
    height: usize,
    values: Vec<Cost>,
}

impl CostLayer {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![Cost::ZERO; width * height],
        }
    }

    pub fn from_values(width: usize, height: usize, values: Vec<Cost>) -> Result<Self, GridError> {
        if values.len() != width * height {
            return Err(GridError::MalformedMap {
                row: 0,
                reason: format!("expected {} costs, got {}", width * height, values.len()),
            });
        }
        for v in &values {
            v.validate()?;
        }
        Ok(Self { width, height, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[Cost] {
        &self.values
    }

    pub fn get(&self, (x, y): Cell) -> Cost {
        self.values[y * self.width + x]
    }

    fn set(&mut self, (x, y): Cell, cost: Cost) {
        self.values[y * self.width + x] = cost;
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&c| c == Cost::ZERO)
    }

    /// Smallest finite entry, or 0 when the layer has none.
    pub fn min_finite(&self) -> f64 {
        self.values
            .iter()
            .filter_map(|c| c.finite())
            .fold(0.0_f64, f64::min)
    }
}

/// A set of grid cells, given as an inclusive rectangle or an explicit list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Rect { x0: usize, y0: usize, x1: usize, y1: usize },
    Cells(BTreeSet<Cell>),
}

impl Region {
    pub fn rect(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        Region::Rect { x0, y0, x1, y1 }
    }

    pub fn cell(cell: Cell) -> Self {
        Region::Cells(BTreeSet::from([cell]))
    }

    pub fn from_cells(cells: impl IntoIterator<Item = Cell>) -> Self {
        Region::Cells(cells.into_iter().collect())
    }

    /// Cells in row-major order.
    pub fn cells(&self) -> Vec<Cell> {
        match self {
            Region::Rect { x0, y0, x1, y1 } => (*y0..=*y1)
                .flat_map(|y| (*x0..=*x1).map(move |x| (x, y)))
                .collect(),
            Region::Cells(set) => {
                let mut cells: Vec<Cell> = set.iter().copied().collect();
                cells.sort_by_key(|&(x, y)| (y, x));
                cells
            }
        }
    }

    pub fn contains(&self, (x, y): Cell) -> bool {
        match self {
            Region::Rect { x0, y0, x1, y1 } => (*x0..=*x1).contains(&x) && (*y0..=*y1).contains(&y),
            Region::Cells(set) => set.contains(&(x, y)),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Region::Rect { .. } => false,
            Region::Cells(set) => set.is_empty(),
        }
    }

    /// Shape check independent of any grid.
    pub fn validate_shape(&self) -> Result<(), GridError> {
        match *self {
            Region::Rect { x0, y0, x1, y1 } if x0 > x1 || y0 > y1 => {
                Err(GridError::InvalidRectangle { x0, y0, x1, y1 })
            }
            _ => Ok(()),
        }
    }

    pub fn check_bounds(&self, width: usize, height: usize) -> Result<(), GridError> {
        self.validate_shape()?;
        let first_outside = match *self {
            Region::Rect { x1, y1, .. } => (x1 >= width || y1 >= height).then_some((x1, y1)),
            Region::Cells(ref set) => set.iter().copied().find(|&(x, y)| x >= width || y >= height),
        };
        match first_outside {
            Some(cell) => Err(GridError::RegionOutOfBounds { cell, width, height }),
            None => Ok(()),
        }
    }

    /// Geometric centre of the region's cells.
    pub fn centroid(&self) -> (f64, f64) {
        let cells = self.cells();
        let n = cells.len().max(1) as f64;
        let (sx, sy) = cells
            .iter()
            .fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x as f64, sy + y as f64));
        (sx / n, sy / n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMode {
    #[default]
    Set,
    Add,
}

/// The mutable world representation: initial map, current occupancy, cost
/// layer and optional goal. Every operation returns a new state.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    base: Arc<OccupancyGrid>,
    occupancy: OccupancyGrid,
    costs: CostLayer,
    goal: Option<Cell>,
}

/// A map text decoded into a state plus its optional start marker.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedMap {
    pub state: GridState,
    pub start: Option<Cell>,
}

impl GridState {
    pub fn new(base: OccupancyGrid) -> Self {
        let costs = CostLayer::zeros(base.width(), base.height());
        Self {
            occupancy: base.clone(),
            base: Arc::new(base),
            costs,
            goal: None,
        }
    }

    /// Parses map text; `G` sets the goal.
    pub fn from_map_text(text: &str) -> Result<Self, GridError> {
        parse_map(text).map(|parsed| parsed.state)
    }

    /// Reassembles a state from its serialized parts, enforcing the
    /// state invariants.
    pub fn from_parts(
        base: OccupancyGrid,
        occupancy: OccupancyGrid,
        costs: CostLayer,
        goal: Option<Cell>,
    ) -> Result<Self, GridError> {
        let dims = (base.width(), base.height());
        if (occupancy.width(), occupancy.height()) != dims || (costs.width(), costs.height()) != dims {
            return Err(GridError::MalformedMap {
                row: 0,
                reason: "layer dimensions differ".into(),
            });
        }
        let state = Self {
            base: Arc::new(base),
            occupancy,
            costs,
            goal: None,
        };
        match goal {
            Some(cell) => state.set_goal(cell),
            None => Ok(state),
        }
    }

    pub fn width(&self) -> usize {
        self.base.width()
    }

    pub fn height(&self) -> usize {
        self.base.height()
    }

    pub fn base(&self) -> &OccupancyGrid {
        &self.base
    }

    pub fn occupancy(&self) -> &OccupancyGrid {
        &self.occupancy
    }

    pub fn costs(&self) -> &CostLayer {
        &self.costs
    }

    pub fn goal(&self) -> Option<Cell> {
        self.goal
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        self.base.in_bounds(cell)
    }

    pub fn is_occupied(&self, cell: Cell) -> bool {
        self.occupancy.is_occupied(cell)
    }

    /// Occupied or BLOCKED.
    pub fn is_impassable(&self, cell: Cell) -> bool {
        self.is_occupied(cell) || self.costs.get(cell).is_blocked()
    }

    /// Restores the initial occupancy, zeroes the cost layer and clears the
    /// goal.
    pub fn reset_map(&self) -> GridState {
        GridState {
            base: Arc::clone(&self.base),
            occupancy: (*self.base).clone(),
            costs: CostLayer::zeros(self.width(), self.height()),
            goal: None,
        }
    }

    /// Writes `value` into every cell of `region`; cells outside it are left
    /// untouched. Fails without modification if any region cell is out of
    /// bounds.
    pub fn modify_cost(&self, region: &Region, value: Cost, mode: CostMode) -> Result<GridState, GridError> {
        region.check_bounds(self.width(), self.height())?;
        match mode {
            CostMode::Set => value.validate()?,
            CostMode::Add => {
                if let Cost::Finite(v) = value {
                    if !v.is_finite() {
                        return Err(GridError::NonFiniteValue);
                    }
                }
            }
        }
        let mut next = self.clone();
        for cell in region.cells() {
            let updated = match mode {
                CostMode::Set => value,
                CostMode::Add => next.costs.get(cell).combine(value),
            };
            next.costs.set(cell, updated);
        }
        Ok(next)
    }

    pub fn set_goal(&self, cell: Cell) -> Result<GridState, GridError> {
        if !self.in_bounds(cell) {
            return Err(GridError::OutOfBounds(cell));
        }
        if self.is_impassable(cell) {
            return Err(GridError::GoalOccupied(cell));
        }
        let mut next = self.clone();
        next.goal = Some(cell);
        Ok(next)
    }

    pub fn clear_goal(&self) -> GridState {
        let mut next = self.clone();
        next.goal = None;
        next
    }

    /// Cost of entering `cell`: BLOCKED for occupied cells regardless of the
    /// layer value.
    pub fn traversal_cost(&self, cell: Cell) -> Result<Cost, GridError> {
        if !self.in_bounds(cell) {
            return Err(GridError::OutOfBounds(cell));
        }
        if self.is_occupied(cell) {
            Ok(Cost::Blocked)
        } else {
            Ok(self.costs.get(cell))
        }
    }

    /// Same base and goal, fresh zero cost layer.
    pub fn with_zero_costs(&self) -> GridState {
        let mut next = self.clone();
        next.costs = CostLayer::zeros(self.width(), self.height());
        next
    }

    /// Replaces the current occupancy (dynamic obstacles). Cost entries under
    /// newly occupied cells are reset to zero; a goal that became occupied is
    /// dropped.
    pub fn with_occupancy(&self, occupancy: OccupancyGrid) -> Result<GridState, GridError> {
        if occupancy.width() != self.width() || occupancy.height() != self.height() {
            return Err(GridError::MalformedMap {
                row: 0,
                reason: "occupancy dimensions differ from base".into(),
            });
        }
        let mut next = self.clone();
        for y in 0..self.height() {
            for x in 0..self.width() {
                if occupancy.is_occupied((x, y)) && !self.occupancy.is_occupied((x, y)) {
                    next.costs.set((x, y), Cost::ZERO);
                }
            }
        }
        next.occupancy = occupancy;
        if let Some(goal) = next.goal {
            if next.is_impassable(goal) {
                next.goal = None;
            }
        }
        Ok(next)
    }

    /// Renders the current occupancy as map text (goal as `G`).
    pub fn to_map_text(&self) -> String {
        let mut out = String::with_capacity((self.width() + 1) * self.height());
        for y in 0..self.height() {
            for x in 0..self.width() {
                let ch = if self.goal == Some((x, y)) {
                    'G'
                } else if self.is_occupied((x, y)) {
                    '#'
                } else {
                    '.'
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}

/// Parses the map text format: `.` free, `#` occupied, `G` goal, `S` start.
pub fn parse_map(text: &str) -> Result<ParsedMap, GridError> {
    let rows: Vec<&str> = text.strip_suffix('\n').unwrap_or(text).split('\n').collect();
    let width = rows.first().map_or(0, |r| r.chars().count());
    if width == 0 {
        return Err(GridError::MalformedMap {
            row: 0,
            reason: "empty map".into(),
        });
    }
    let height = rows.len();
    let mut cells = Vec::with_capacity(width * height);
    let mut goal = None;
    let mut start = None;
    for (y, row) in rows.iter().enumerate() {
        let len = row.chars().count();
        if len != width {
            return Err(GridError::MalformedMap {
                row: y,
                reason: format!("row has {len} cells, expected {width}"),
            });
        }
        for (x, ch) in row.chars().enumerate() {
            let occupied = match ch {
                '.' => 0,
                '#' => 1,
                'G' => {
                    if goal.replace((x, y)).is_some() {
                        return Err(GridError::MultipleGoals);
                    }
                    0
                }
                'S' => {
                    if start.replace((x, y)).is_some() {
                        return Err(GridError::MultipleStarts);
                    }
                    0
                }
                other => return Err(GridError::UnknownCharacter { ch: other, x, y }),
            };
            cells.push(occupied);
        }
    }
    let mut state = GridState::new(OccupancyGrid::from_cells(width, height, cells)?);
    state.goal = goal;
    Ok(ParsedMap { state, start })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free(w: usize, h: usize) -> GridState {
        GridState::new(OccupancyGrid::free(w, h))
    }

    #[test]
    fn parses_small_maps() {
        let s = GridState::from_map_text("..\n.#").unwrap();
        assert_eq!((s.width(), s.height()), (2, 2));
        assert!(s.is_occupied((1, 1)));
        assert!(!s.is_occupied((0, 0)) && !s.is_occupied((1, 0)) && !s.is_occupied((0, 1)));
        assert_eq!(s.goal(), None);

        let s = GridState::from_map_text(".G\n..\n").unwrap();
        assert_eq!(s.goal(), Some((1, 0)));
        assert!(s.occupancy().cells().iter().all(|&c| c == 0));
    }

    #[test]
    fn rejects_bad_maps() {
        assert!(matches!(
            GridState::from_map_text("..\n..."),
            Err(GridError::MalformedMap { row: 1, .. })
        ));
        assert!(matches!(
            GridState::from_map_text(".x"),
            Err(GridError::UnknownCharacter { ch: 'x', .. })
        ));
        assert_eq!(GridState::from_map_text("GG"), Err(GridError::MultipleGoals));
        assert!(GridState::from_map_text("").is_err());
    }

    #[test]
    fn start_marker_is_reported() {
        let parsed = parse_map("S.\n.G").unwrap();
        assert_eq!(parsed.start, Some((0, 0)));
        assert_eq!(parsed.state.goal(), Some((1, 1)));
    }

    #[test]
    fn reset_restores_base() {
        let s = GridState::from_map_text("...\n...\n...").unwrap();
        let mut occ = s.occupancy().clone();
        occ.set((2, 2), true);
        let s = s
            .with_occupancy(occ)
            .unwrap()
            .modify_cost(&Region::cell((1, 1)), Cost::Finite(5.0), CostMode::Set)
            .unwrap()
            .set_goal((0, 2))
            .unwrap();
        let r = s.reset_map();
        assert_eq!(r.occupancy(), r.base());
        assert!(r.costs().is_zero());
        assert_eq!(r.goal(), None);
        assert_eq!(r.reset_map(), r);
    }

    #[test]
    fn modify_cost_set_and_overwrite() {
        let s = free(3, 3);
        let s1 = s.modify_cost(&Region::cell((1, 1)), Cost::Finite(5.0), CostMode::Set).unwrap();
        assert_eq!(s1.costs().get((1, 1)), Cost::Finite(5.0));
        let others = (0..3)
            .flat_map(|y| (0..3).map(move |x| (x, y)))
            .filter(|&c| c != (1, 1))
            .filter(|&c| s1.costs().get(c) == Cost::ZERO)
            .count();
        assert_eq!(others, 8);

        let s2 = s1
            .modify_cost(&Region::from_cells([(1, 1), (1, 2)]), Cost::Finite(2.0), CostMode::Set)
            .unwrap();
        assert_eq!(s2.costs().get((1, 1)), Cost::Finite(2.0));
        assert_eq!(s2.costs().get((1, 2)), Cost::Finite(2.0));
    }

    #[test]
    fn modify_cost_add_clamps_at_floor() {
        let s = free(2, 1)
            .modify_cost(&Region::cell((0, 0)), Cost::Finite(-0.5), CostMode::Set)
            .unwrap()
            .modify_cost(&Region::cell((0, 0)), Cost::Finite(-2.0), CostMode::Add)
            .unwrap();
        assert_eq!(s.costs().get((0, 0)), Cost::Finite(COST_FLOOR));
        let s = s.modify_cost(&Region::cell((1, 0)), Cost::Blocked, CostMode::Add).unwrap();
        assert!(s.costs().get((1, 0)).is_blocked());
    }

    #[test]
    fn modify_cost_errors_leave_state_untouched() {
        let s = free(3, 3);
        let err = s
            .modify_cost(&Region::from_cells([(0, 0), (9, 9)]), Cost::Finite(1.0), CostMode::Set)
            .unwrap_err();
        assert!(matches!(err, GridError::RegionOutOfBounds { cell: (9, 9), .. }));
        assert_eq!(
            s.modify_cost(&Region::cell((0, 0)), Cost::Finite(-3.0), CostMode::Set),
            Err(GridError::ValueBelowFloor(-3.0))
        );
        assert!(s
            .modify_cost(&Region::rect(2, 0, 1, 0), Cost::Finite(1.0), CostMode::Set)
            .is_err());
    }

    #[test]
    fn set_goal_rules() {
        let s = free(5, 5);
        assert_eq!(s.set_goal((4, 4)).unwrap().goal(), Some((4, 4)));
        assert_eq!(
            s.set_goal((1, 1)).unwrap().set_goal((3, 3)).unwrap().goal(),
            Some((3, 3))
        );
        assert_eq!(s.set_goal((5, 0)), Err(GridError::OutOfBounds((5, 0))));

        let walled = GridState::from_map_text(".....\n.....\n..#..\n.....\n.....").unwrap();
        assert_eq!(walled.set_goal((2, 2)), Err(GridError::GoalOccupied((2, 2))));
        let blocked = s.modify_cost(&Region::cell((0, 0)), Cost::Blocked, CostMode::Set).unwrap();
        assert_eq!(blocked.set_goal((0, 0)), Err(GridError::GoalOccupied((0, 0))));
    }

    #[test]
    fn traversal_cost_cases() {
        let s = GridState::from_map_text("..\n.#").unwrap();
        assert_eq!(s.traversal_cost((0, 0)), Ok(Cost::Finite(0.0)));
        assert_eq!(s.traversal_cost((1, 1)), Ok(Cost::Blocked));
        let s = s.modify_cost(&Region::cell((0, 1)), Cost::Finite(-0.5), CostMode::Set).unwrap();
        assert_eq!(s.traversal_cost((0, 1)), Ok(Cost::Finite(-0.5)));
        let s = s.modify_cost(&Region::cell((1, 1)), Cost::Finite(3.0), CostMode::Set).unwrap();
        assert_eq!(s.traversal_cost((1, 1)), Ok(Cost::Blocked));
        assert_eq!(s.traversal_cost((2, 0)), Err(GridError::OutOfBounds((2, 0))));
    }

    #[test]
    fn map_text_round_trip() {
        let text = "..#\n.G.\n#..\n";
        assert_eq!(GridState::from_map_text(text).unwrap().to_map_text(), text);
    }

    #[test]
    fn cost_serde() {
        assert_eq!(serde_json::to_string(&Cost::Blocked).unwrap(), "\"BLOCKED\"");
        assert_eq!(serde_json::from_str::<Cost>("-0.25").unwrap(), Cost::Finite(-0.25));
        assert!(serde_json::from_str::<Cost>("\"HIGH\"").is_err());
    }
}
