//! Run-length encoding of grid layers for the state payload.
//!
//! A layer is a row-major array written as `[[value, count], ...]`.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use gridpilot::grid::{Cost, CostLayer, GridError, OccupancyGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Runs(pub Vec<(Value, usize)>);

impl Runs {
    pub fn encode<T: Serialize + PartialEq>(values: &[T]) -> Runs {
        let mut runs: Vec<(Value, usize)> = Vec::new();
        let mut prev: Option<&T> = None;
        for v in values {
            match (prev, runs.last_mut()) {
                (Some(p), Some(last)) if p == v => last.1 += 1,
                _ => runs.push((serde_json::to_value(v).expect("layer values serialize"), 1)),
            }
            prev = Some(v);
        }
        Runs(runs)
    }

    pub fn decode<T: DeserializeOwned + Clone>(&self) -> Result<Vec<T>, String> {
        let mut out = Vec::new();
        for (i, (value, count)) in self.0.iter().enumerate() {
            if *count == 0 {
                return Err(format!("run {i} has zero length"));
            }
            let v: T = serde_json::from_value(value.clone()).map_err(|e| format!("run {i}: {e}"))?;
            out.extend(std::iter::repeat_n(v, *count));
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|r| r.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn encode_occupancy(grid: &OccupancyGrid) -> Runs {
    Runs::encode(grid.cells())
}

pub fn decode_occupancy(width: usize, height: usize, runs: &Runs) -> Result<OccupancyGrid, String> {
    let cells: Vec<u8> = runs.decode()?;
    OccupancyGrid::from_cells(width, height, cells).map_err(|e: GridError| e.to_string())
}

pub fn encode_costs(layer: &CostLayer) -> Runs {
    Runs::encode(layer.values())
}

pub fn decode_costs(width: usize, height: usize, runs: &Runs) -> Result<CostLayer, String> {
    let values: Vec<Cost> = runs.decode()?;
    CostLayer::from_values(width, height, values).map_err(|e| e.to_string())
}
