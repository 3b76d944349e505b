//! Named semantic landmarks: regions of the map that instructions refer to.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::grid::{Cell, GridState, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandmarkKind {
    Shelf,
    Storage,
    Repair,
    Lane,
    PedestrianZone,
    Custom,
}

impl LandmarkKind {
    pub const ALL: [LandmarkKind; 6] = [
        LandmarkKind::Shelf,
        LandmarkKind::Storage,
        LandmarkKind::Repair,
        LandmarkKind::Lane,
        LandmarkKind::PedestrianZone,
        LandmarkKind::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LandmarkKind::Shelf => "shelf",
            LandmarkKind::Storage => "storage",
            LandmarkKind::Repair => "repair",
            LandmarkKind::Lane => "lane",
            LandmarkKind::PedestrianZone => "pedestrian_zone",
            LandmarkKind::Custom => "custom",
        }
    }
}

impl fmt::Display for LandmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LandmarkKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LandmarkKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown landmark kind {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub region: Region,
    pub access: Option<Cell>,
    pub kind: LandmarkKind,
}

impl Landmark {
    pub fn new(region: Region, kind: LandmarkKind) -> Self {
        Self { region, access: None, kind }
    }

    pub fn with_access(mut self, access: Cell) -> Self {
        self.access = Some(access);
        self
    }

    /// The cell a robot navigates to when told to go to this landmark: the
    /// declared access cell, otherwise the passable cell 4-adjacent to the
    /// region that lies nearest the region's centroid (ties by row, then
    /// column).
    pub fn access_cell(&self, state: &GridState) -> Option<Cell> {
        if let Some(access) = self.access {
            return Some(access);
        }
        let (cx, cy) = self.region.centroid();
        let mut best: Option<(f64, Cell)> = None;
        for (x, y) in self.region.cells() {
            let candidates = [
                x.checked_add(1).map(|nx| (nx, y)),
                y.checked_add(1).map(|ny| (x, ny)),
                x.checked_sub(1).map(|nx| (nx, y)),
                y.checked_sub(1).map(|ny| (x, ny)),
            ];
            for cell in candidates.into_iter().flatten() {
                if self.region.contains(cell) || !state.in_bounds(cell) || state.is_impassable(cell) {
                    continue;
                }
                let d = (cell.0 as f64 - cx).powi(2) + (cell.1 as f64 - cy).powi(2);
                let better = match best {
                    None => true,
                    Some((bd, bc)) => d < bd || (d == bd && (cell.1, cell.0) < (bc.1, bc.0)),
                };
                if better {
                    best = Some((d, cell));
                }
            }
        }
        best.map(|(_, cell)| cell)
    }
}

/// Landmark name to landmark, iterated in name order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LandmarkRegistry {
    entries: BTreeMap<String, Landmark>,
}

impl LandmarkRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces; returns the previous entry.
    pub fn insert(&mut self, name: impl Into<String>, landmark: Landmark) -> Option<Landmark> {
        self.entries.insert(name.into(), landmark)
    }

    pub fn get(&self, name: &str) -> Option<&Landmark> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Landmark)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn of_kind(&self, kind: LandmarkKind) -> impl Iterator<Item = (&str, &Landmark)> {
        self.iter().filter(move |(_, l)| l.kind == kind)
    }
}
