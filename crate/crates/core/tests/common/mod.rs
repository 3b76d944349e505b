//! Test-only reference implementations. Nothing here calls into the planner.

#![allow(dead_code)]

pub mod fuzz;
pub mod props;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gridpilot::grid::{Cell, Cost, CostLayer, GridState, OccupancyGrid};

/// Zone values the random grids draw from. All are dyadic so that sums
/// along equal-cost paths agree bit for bit whatever the order.
pub const ZONES: [Cost; 8] = [
    Cost::Finite(-0.5),
    Cost::Finite(-0.25),
    Cost::Finite(0.0),
    Cost::Finite(0.0),
    Cost::Finite(0.5),
    Cost::Finite(1.0),
    Cost::Finite(3.0),
    Cost::Blocked,
];

/// Cost model the oracle searches under.
#[derive(Debug, Clone, Copy)]
pub struct Model {
    pub honor_zones: bool,
    pub turn_penalty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Node {
    g: f64,
    cell: Cell,
    heading: u8,
}

impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other.g.total_cmp(&self.g)
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NONE: u8 = 4;
const MOVES: [(isize, isize); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

fn enterable(state: &GridState, cell: Cell, model: Model) -> Option<f64> {
    if state.occupancy().is_occupied(cell) {
        return None;
    }
    match state.costs().get(cell) {
        Cost::Blocked => None,
        Cost::Finite(z) if model.honor_zones => Some(1.0 + z.max(-0.5)),
        Cost::Finite(_) => Some(1.0),
    }
}

/// Uniform-cost search over (cell, last heading). Returns the cheapest
/// objective value from `start` to `goal`, or `None` when unreachable.
pub fn ucs(state: &GridState, start: Cell, goal: Cell, model: Model) -> Option<f64> {
    let (w, h) = (state.width(), state.height());
    let slot = |c: Cell, d: u8| (c.1 * w + c.0) * 5 + d as usize;
    let mut dist = vec![f64::INFINITY; w * h * 5];
    let mut heap = BinaryHeap::new();
    dist[slot(start, NONE)] = 0.0;
    heap.push(Node { g: 0.0, cell: start, heading: NONE });
    while let Some(Node { g, cell, heading }) = heap.pop() {
        if g > dist[slot(cell, heading)] {
            continue;
        }
        if cell == goal {
            return Some(g);
        }
        for (d, (dx, dy)) in MOVES.iter().enumerate() {
            let (Some(x), Some(y)) = (cell.0.checked_add_signed(*dx), cell.1.checked_add_signed(*dy)) else {
                continue;
            };
            if x >= w || y >= h {
                continue;
            }
            let Some(step) = enterable(state, (x, y), model) else { continue };
            let turn = if heading != NONE && heading != d as u8 { model.turn_penalty } else { 0.0 };
            let ng = g + step + turn;
            let s = slot((x, y), d as u8);
            if ng < dist[s] {
                dist[s] = ng;
                heap.push(Node { g: ng, cell: (x, y), heading: d as u8 });
            }
        }
    }
    None
}

/// Objective value of a given path under `model`, or `None` if the path is
/// not a chain of enterable 4-adjacent cells.
pub fn objective(state: &GridState, path: &[Cell], model: Model) -> Option<f64> {
    let mut g = 0.0;
    let mut heading = None;
    for pair in path.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let d = MOVES
            .iter()
            .position(|&(dx, dy)| a.0.checked_add_signed(dx) == Some(b.0) && a.1.checked_add_signed(dy) == Some(b.1))?;
        g += enterable(state, b, model)?;
        if heading.is_some_and(|h| h != d) {
            g += model.turn_penalty;
        }
        heading = Some(d);
    }
    Some(g)
}

/// A random `size`×`size` grid with obstacles, zones, and a start and goal
/// on enterable cells. The goal may be unreachable.
pub fn random_case(seed: u64, size: usize) -> (GridState, Cell) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let density = rng.random_range(0.1..0.4);
    let cells: Vec<u8> = (0..size * size).map(|_| u8::from(rng.random_bool(density))).collect();
    let base = OccupancyGrid::from_cells(size, size, cells).unwrap();
    let zoned = rng.random_bool(0.8);
    let costs: Vec<Cost> = (0..size * size)
        .map(|_| if zoned { ZONES[rng.random_range(0..ZONES.len())] } else { Cost::ZERO })
        .collect();
    let state = GridState::from_parts(
        base.clone(),
        base,
        CostLayer::from_values(size, size, costs).unwrap(),
        None,
    )
    .unwrap();
    let open: Vec<Cell> = (0..size * size)
        .map(|i| (i % size, i / size))
        .filter(|&c| !state.is_impassable(c))
        .collect();
    if open.len() < 2 {
        return random_case(seed.wrapping_add(1 << 32), size);
    }
    let start = open[rng.random_range(0..open.len())];
    let goal = open[rng.random_range(0..open.len())];
    (state.set_goal(goal).unwrap(), start)
}
