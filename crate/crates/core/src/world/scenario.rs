//! Scenario documents.
//!
//! ```text
//! name: demo
//! map:
//!   ..........
//!   ..####....
//!   ..........
//! start: 0,0
//! landmarks:
//!   - shelf3 shelf rect 2,1,5,1 access 3,2
//!   - pit custom cells 8,0 8,1
//! pedestrians:
//!   - p1 at 9,2 waypoints 6,2 9,2
//! pedestrian_mode: waypoints
//! events:
//!   - 3 add_obstacle rect 7,0,7,2
//!   - 5 add_landmark pothole repair cells 1,2
//!   - 6 remove_obstacle cells 7,1
//!   - 8 move_pedestrian p1 0,2
//! ```
//!
//! Section headers start in column 0; map rows and list items are
//! indented. Lines starting with `#` in column 0 are comments. Regions are
//! `rect x0,y0,x1,y1` (inclusive) or `cells x,y ...`. Pedestrians walk their
//! waypoints cyclically, x first then y, one cell per tick. `start:` may be
//! omitted if the map marks the start with `S`. `pedestrian_mode` is
//! `waypoints` (default) or `random_walk <seed>`.

use std::collections::BTreeSet;

use thiserror::Error;

use super::{EventKind, Pedestrian, PedestrianMode, ScenarioEvent, WorldState};
use crate::grid::{parse_map, Cell, GridError, GridState, Region};
use crate::landmarks::{Landmark, LandmarkKind, LandmarkRegistry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: event time {value} is negative")]
    InvalidEventTime { line: usize, value: i64 },
    #[error("scenario has no map section")]
    MissingMap,
    #[error("no start given: add `start: x,y` or an S to the map")]
    MissingStart,
    #[error("map: {0}")]
    Map(GridError),
    #[error("start {0:?} is outside the map or occupied")]
    BadStart(Cell),
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("landmark {0:?} overlaps the start pose")]
    LandmarkOverlapsStart(String),
}

fn syntax(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Syntax { line, message: message.into() }
}

fn invalid(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid { line, message: message.into() }
}

fn parse_cell(line: usize, token: &str) -> Result<Cell, ScenarioError> {
    let bad = || syntax(line, format!("expected x,y but found {token:?}"));
    let (x, y) = token.split_once(',').ok_or_else(bad)?;
    Ok((x.trim().parse().map_err(|_| bad())?, y.trim().parse().map_err(|_| bad())?))
}

/// Parses `rect x0,y0,x1,y1` or `cells x,y ...` from the front of `tokens`,
/// stopping at the keyword `access`.
fn parse_region<'a>(line: usize, tokens: &mut std::iter::Peekable<impl Iterator<Item = &'a str>>) -> Result<Region, ScenarioError> {
    match tokens.next() {
        Some("rect") => {
            let spec = tokens.next().ok_or_else(|| syntax(line, "rect needs x0,y0,x1,y1"))?;
            let nums: Vec<usize> = spec
                .split(',')
                .map(|n| n.trim().parse())
                .collect::<Result<_, _>>()
                .map_err(|_| syntax(line, format!("bad rectangle {spec:?}")))?;
            let [x0, y0, x1, y1] = nums[..] else {
                return Err(syntax(line, format!("rectangle needs 4 numbers, found {spec:?}")));
            };
            let region = Region::rect(x0, y0, x1, y1);
            region.validate_shape().map_err(|e| invalid(line, e.to_string()))?;
            Ok(region)
        }
        Some("cells") => {
            let mut cells = BTreeSet::new();
            while let Some(&tok) = tokens.peek() {
                if tok == "access" {
                    break;
                }
                cells.insert(parse_cell(line, tok)?);
                tokens.next();
            }
            if cells.is_empty() {
                return Err(syntax(line, "cells needs at least one x,y"));
            }
            Ok(Region::Cells(cells))
        }
        Some(other) => Err(syntax(line, format!("expected `rect` or `cells`, found {other:?}"))),
        None => Err(syntax(line, "missing region")),
    }
}

fn parse_landmark<'a>(
    line: usize,
    tokens: &mut std::iter::Peekable<impl Iterator<Item = &'a str>>,
) -> Result<(String, Landmark), ScenarioError> {
    let name = tokens.next().ok_or_else(|| syntax(line, "landmark needs a name"))?;
    let kind_text = tokens.next().ok_or_else(|| syntax(line, "landmark needs a kind"))?;
    let kind: LandmarkKind = kind_text
        .parse()
        .map_err(|_| syntax(line, format!("unknown landmark kind {kind_text:?}")))?;
    let mut landmark = Landmark::new(parse_region(line, tokens)?, kind);
    if tokens.peek() == Some(&"access") {
        tokens.next();
        let cell = tokens.next().ok_or_else(|| syntax(line, "access needs x,y"))?;
        landmark = landmark.with_access(parse_cell(line, cell)?);
    }
    if let Some(extra) = tokens.next() {
        return Err(syntax(line, format!("unexpected {extra:?}")));
    }
    Ok((name.to_string(), landmark))
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Map,
    Landmarks,
    Pedestrians,
    Events,
}

struct Raw<'a> {
    name: String,
    map_rows: Vec<&'a str>,
    map_line: usize,
    start: Option<(usize, Cell)>,
    landmarks: Vec<(usize, String, Landmark)>,
    pedestrians: Vec<(usize, Pedestrian)>,
    events: Vec<(usize, ScenarioEvent)>,
    mode: PedestrianMode,
}

fn parse_raw(text: &str) -> Result<Raw<'_>, ScenarioError> {
    let mut raw = Raw {
        name: String::new(),
        map_rows: Vec::new(),
        map_line: 0,
        start: None,
        landmarks: Vec::new(),
        pedestrians: Vec::new(),
        events: Vec::new(),
        mode: PedestrianMode::Waypoints,
    };
    let mut section = Section::None;
    let mut seen_map = false;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let indented = line.starts_with(' ') || line.starts_with('\t');
        if !indented {
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| syntax(n, format!("expected `key:` but found {line:?}")))?;
            let value = value.trim();
            section = Section::None;
            match key.trim() {
                "name" => raw.name = value.to_string(),
                "map" => {
                    if seen_map {
                        return Err(syntax(n, "duplicate map section"));
                    }
                    seen_map = true;
                    raw.map_line = n + 1;
                    section = Section::Map;
                }
                "start" => raw.start = Some((n, parse_cell(n, value)?)),
                "landmarks" => section = Section::Landmarks,
                "pedestrians" => section = Section::Pedestrians,
                "events" => section = Section::Events,
                "pedestrian_mode" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    raw.mode = match parts[..] {
                        ["waypoints"] => PedestrianMode::Waypoints,
                        ["random_walk", seed] => PedestrianMode::RandomWalk {
                            seed: seed.parse().map_err(|_| syntax(n, format!("bad seed {seed:?}")))?,
                        },
                        _ => return Err(syntax(n, format!("unknown pedestrian mode {value:?}"))),
                    };
                }
                other => return Err(syntax(n, format!("unknown section {other:?}"))),
            }
            if !matches!(section, Section::None | Section::Map) && !value.is_empty() {
                return Err(syntax(n, "list sections take their items on the following lines"));
            }
            continue;
        }
        let body = line.trim();
        if section == Section::Map {
            raw.map_rows.push(body);
            continue;
        }
        let Some(item) = body.strip_prefix('-') else {
            return Err(syntax(n, format!("expected a `- ` list item, found {body:?}")));
        };
        let mut tokens = item.split_whitespace().peekable();
        match section {
            Section::Landmarks => {
                let (name, landmark) = parse_landmark(n, &mut tokens)?;
                raw.landmarks.push((n, name, landmark));
            }
            Section::Pedestrians => {
                let id = tokens.next().ok_or_else(|| syntax(n, "pedestrian needs an id"))?;
                if tokens.next() != Some("at") {
                    return Err(syntax(n, "expected `<id> at x,y [waypoints x,y ...]`"));
                }
                let position = parse_cell(n, tokens.next().ok_or_else(|| syntax(n, "missing position"))?)?;
                let mut waypoints = Vec::new();
                match tokens.next() {
                    None => {}
                    Some("waypoints") => {
                        for tok in tokens {
                            waypoints.push(parse_cell(n, tok)?);
                        }
                    }
                    Some(other) => return Err(syntax(n, format!("unexpected {other:?}"))),
                }
                raw.pedestrians.push((n, Pedestrian::new(id, position, waypoints)));
            }
            Section::Events => {
                let time = tokens.next().ok_or_else(|| syntax(n, "event needs a time"))?;
                let value: i64 = time.parse().map_err(|_| syntax(n, format!("bad event time {time:?}")))?;
                if value < 0 {
                    return Err(ScenarioError::InvalidEventTime { line: n, value });
                }
                let kind = match tokens.next() {
                    Some("add_obstacle") => EventKind::AddObstacle { region: parse_region(n, &mut tokens)? },
                    Some("remove_obstacle") => EventKind::RemoveObstacle { region: parse_region(n, &mut tokens)? },
                    Some("add_landmark") => {
                        let (name, landmark) = parse_landmark(n, &mut tokens)?;
                        EventKind::AddLandmark { name, landmark }
                    }
                    Some("move_pedestrian") => {
                        let id = tokens.next().ok_or_else(|| syntax(n, "move_pedestrian needs an id"))?;
                        let cell = tokens.next().ok_or_else(|| syntax(n, "move_pedestrian needs x,y"))?;
                        EventKind::MovePedestrian { id: id.to_string(), waypoint: parse_cell(n, cell)? }
                    }
                    Some(other) => return Err(syntax(n, format!("unknown event kind {other:?}"))),
                    None => return Err(syntax(n, "event needs a kind")),
                };
                if let Some(extra) = tokens.next() {
                    return Err(syntax(n, format!("unexpected {extra:?}")));
                }
                raw.events.push((n, ScenarioEvent { at_time: value as u64, kind }));
            }
            Section::None | Section::Map => return Err(syntax(n, "list item outside a list section")),
        }
    }
    if !seen_map || raw.map_rows.is_empty() {
        return Err(ScenarioError::MissingMap);
    }
    Ok(raw)
}

/// Cells walked from `from` to `to`, x first, excluding `from`.
fn leg(from: Cell, to: Cell) -> Vec<Cell> {
    let mut cells = Vec::new();
    let (mut x, mut y) = from;
    while x != to.0 {
        x = if to.0 > x { x + 1 } else { x - 1 };
        cells.push((x, y));
    }
    while y != to.1 {
        y = if to.1 > y { y + 1 } else { y - 1 };
        cells.push((x, y));
    }
    cells
}

fn check_landmark(line: usize, name: &str, landmark: &Landmark, grid: &GridState) -> Result<(), ScenarioError> {
    landmark
        .region
        .check_bounds(grid.width(), grid.height())
        .map_err(|e| invalid(line, format!("landmark {name:?}: {e}")))?;
    if let Some(access) = landmark.access {
        if !grid.in_bounds(access) || grid.is_occupied(access) {
            return Err(invalid(line, format!("landmark {name:?}: access cell {access:?} is not free")));
        }
    }
    Ok(())
}

fn check_region(line: usize, region: &Region, grid: &GridState) -> Result<(), ScenarioError> {
    region
        .check_bounds(grid.width(), grid.height())
        .map_err(|e| invalid(line, e.to_string()))
}

/// Parses and validates a scenario document into a world at tick 0.
pub fn load_scenario(text: &str) -> Result<WorldState, ScenarioError> {
    let raw = parse_raw(text)?;
    let map_text = raw.map_rows.join("\n");
    let parsed = parse_map(&map_text).map_err(|e| match e {
        GridError::MalformedMap { row, reason } => syntax(raw.map_line + row, reason),
        GridError::UnknownCharacter { ch, x, y } => {
            syntax(raw.map_line + y, format!("unknown map character {ch:?} in column {x}"))
        }
        other => ScenarioError::Map(other),
    })?;
    let grid = parsed.state;
    let start = raw.start.map(|(_, c)| c).or(parsed.start).ok_or(ScenarioError::MissingStart)?;
    if !grid.in_bounds(start) || grid.is_occupied(start) {
        return Err(ScenarioError::BadStart(start));
    }

    let mut registry = LandmarkRegistry::new();
    for (line, name, landmark) in raw.landmarks {
        check_landmark(line, &name, &landmark, &grid)?;
        if landmark.region.contains(start) {
            return Err(ScenarioError::LandmarkOverlapsStart(name));
        }
        if registry.insert(name.clone(), landmark).is_some() {
            return Err(invalid(line, format!("duplicate landmark {name:?}")));
        }
    }

    let mut taken = BTreeSet::from([start]);
    let mut pedestrians = Vec::new();
    for (line, p) in raw.pedestrians {
        let free = |c: Cell| grid.in_bounds(c) && !grid.is_occupied(c);
        if !free(p.position) {
            return Err(invalid(line, format!("pedestrian {:?} starts on a blocked cell", p.id)));
        }
        if !taken.insert(p.position) {
            return Err(invalid(line, format!("pedestrian {:?} starts on an occupied cell", p.id)));
        }
        if pedestrians.iter().any(|q: &Pedestrian| q.id == p.id) {
            return Err(invalid(line, format!("duplicate pedestrian {:?}", p.id)));
        }
        let mut at = p.position;
        for &wp in p.waypoints.iter().chain(p.waypoints.first()) {
            if let Some(bad) = leg(at, wp).into_iter().find(|&c| !free(c)) {
                return Err(invalid(line, format!("pedestrian {:?} route crosses blocked cell {bad:?}", p.id)));
            }
            at = wp;
        }
        pedestrians.push(p);
    }

    let mut events = Vec::new();
    for (line, event) in raw.events {
        match &event.kind {
            EventKind::AddObstacle { region } | EventKind::RemoveObstacle { region } => {
                check_region(line, region, &grid)?
            }
            EventKind::AddLandmark { name, landmark } => check_landmark(line, name, landmark, &grid)?,
            EventKind::MovePedestrian { id, waypoint } => {
                if !pedestrians.iter().any(|p| &p.id == id) {
                    return Err(invalid(line, format!("unknown pedestrian {id:?}")));
                }
                if !grid.in_bounds(*waypoint) || grid.is_occupied(*waypoint) {
                    return Err(invalid(line, format!("waypoint {waypoint:?} is not free")));
                }
            }
        }
        events.push(event);
    }

    let mut world = WorldState::new(grid, start)
        .map_err(ScenarioError::Map)?
        .with_registry(registry)
        .with_pedestrians(pedestrians)
        .with_events(events)
        .with_mode(raw.mode);
    world.name = raw.name;
    Ok(world)
}
