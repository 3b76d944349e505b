//! Benchmark protocols: strategy/backend comparison on a static world and
//! the grid-scaling study.
//!
//! Both are deterministic apart from `search_time_s`. The scaling study
//! enlarges a map by tiling it `k x k` times; landmark regions become the
//! union of their tiled copies.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::action::{apply_sequence, Action, ActionSequence};
use crate::dcip::{Episode, EpisodeConfig};
use crate::grid::{Cell, GridState, OccupancyGrid, Region};
use crate::instruct::NluBackend;
use crate::landmarks::{Landmark, LandmarkRegistry};
use crate::planner::{plan, plan_baseline, PlanResult};
use crate::profile::StrategyProfile;
use crate::world::WorldState;

/// Timing for the baseline row is the mean of this many runs.
pub const BASELINE_RUNS: usize = 10;

/// Extra samples drawn for a scaling trial before it is skipped.
pub const MAX_RESAMPLES: usize = 10;

pub const COMPARISON_CSV_HEADER: [&str; 9] = [
    "backend",
    "strategy",
    "algorithm",
    "nodes_expanded",
    "search_time_s",
    "path_cost",
    "path_length",
    "turns",
    "error",
];

pub const SCALING_CSV_HEADER: [&str; 5] = ["scale", "trial", "algorithm", "nodes_expanded", "search_time_s"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("empty configuration: no {0} given")]
    EmptyConfig(&'static str),
    #[error("scale and trial counts must be at least 1")]
    InvalidScale,
    #[error("goal-free cost actions failed on the tiled map: {0}")]
    Actions(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Baseline,
    Dcip,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Baseline => "baseline",
            Algorithm::Dcip => "dcip",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub nodes_expanded: usize,
    pub search_time_s: f64,
    pub path_cost: f64,
    pub path_length: usize,
    pub turns: usize,
}

impl From<&PlanResult> for Metrics {
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

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub backend: String,
    pub strategy: String,
    pub algorithm: Algorithm,
    /// `None` when the pipeline failed; `error` says why.
    pub metrics: Option<Metrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ComparisonRow {
    pub fn is_ok(&self) -> bool {
        self.metrics.is_some()
    }
}

fn run_pipeline(
    world: &WorldState,
    instruction: &str,
    profile: &StrategyProfile,
    backend: &dyn NluBackend,
) -> Result<(GridState, PlanResult), String> {
    let mut episode = Episode::new(world.clone(), profile.clone(), EpisodeConfig::default(), backend.label());
    let active = episode.instruct(instruction, backend).map_err(|e| e.to_string())?;
    Ok((active.state.clone(), active.result.clone()))
}

/// One baseline row followed by one row per (backend, strategy). Each
/// pipeline row runs parse, apply and plan on the unmodified world; failures
/// become rows with an error and the run continues.
///
/// The baseline plans on a zero cost layer towards the goal the first
/// successful pipeline resolved. Its metrics are deterministic, so only the
/// timing is averaged over [`BASELINE_RUNS`] runs.
pub fn run_comparison(
    world: &WorldState,
    instruction: &str,
    strategies: &[StrategyProfile],
    backends: &[&dyn NluBackend],
) -> Result<Vec<ComparisonRow>, HarnessError> {
    if strategies.is_empty() {
        return Err(HarnessError::EmptyConfig("strategies"));
    }
    if backends.is_empty() {
        return Err(HarnessError::EmptyConfig("backends"));
    }
    let start = world.pose().cell();
    let mut goal_state = None;
    let mut rows = Vec::new();
    for backend in backends {
        for profile in strategies {
            let outcome = run_pipeline(world, instruction, profile, *backend);
            let (metrics, error) = match outcome {
                Ok((state, result)) => {
                    goal_state.get_or_insert(state);
                    (Some(Metrics::from(&result)), None)
                }
                Err(e) => (None, Some(e)),
            };
            rows.push(ComparisonRow {
                backend: backend.label().to_string(),
                strategy: profile.name.label().to_string(),
                algorithm: Algorithm::Dcip,
                metrics,
                error,
            });
        }
    }

    let baseline = match &goal_state {
        None => Err("no pipeline resolved a goal".to_string()),
        Some(state) => {
            let state = state.with_occupancy(world.grid().occupancy().clone()).map_err(|e| e.to_string());
            state.and_then(|state| {
                let mut total = 0.0;
                let mut last = None;
                for _ in 0..BASELINE_RUNS {
                    let r = plan_baseline(&state, start).map_err(|e| e.to_string())?;
                    total += r.search_time_s;
                    last = Some(r);
                }
                let mut metrics = Metrics::from(last.as_ref().expect("at least one run"));
                metrics.search_time_s = total / BASELINE_RUNS as f64;
                Ok(metrics)
            })
        }
    };
    let (metrics, error) = match baseline {
        Ok(m) => (Some(m), None),
        Err(e) => (None, Some(e)),
    };
    rows.insert(
        0,
        ComparisonRow {
            backend: "-".into(),
            strategy: "-".into(),
            algorithm: Algorithm::Baseline,
            metrics,
            error,
        },
    );
    Ok(rows)
}

/// Shortest decimal form that round-trips (`102`, `96.5`).
fn num(v: f64) -> String {
    format!("{v}")
}

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w).expect("writing to memory cannot fail");
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}

/// Failed rows leave the metric columns empty.
pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    csv_string(|w| {
        w.write_record(COMPARISON_CSV_HEADER)?;
        for row in rows {
            let metrics = match &row.metrics {
                Some(m) => [
                    m.nodes_expanded.to_string(),
                    format!("{:.6}", m.search_time_s),
                    num(m.path_cost),
                    m.path_length.to_string(),
                    m.turns.to_string(),
                ],
                None => Default::default(),
            };
            let mut record = vec![row.backend.clone(), row.strategy.clone(), row.algorithm.label().to_string()];
            record.extend(metrics);
            record.push(row.error.clone().unwrap_or_default());
            w.write_record(&record)?;
        }
        Ok(())
    })
}

pub fn comparison_markdown(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(
        "| Model | Strategy | Algorithm | Nodes Expanded | Search Time (s) | Path Cost | Path Length | Turns |\n\
         |---|---|---|---:|---:|---:|---:|---:|\n",
    );
    for row in rows {
        let (model, strategy) = match row.algorithm {
            Algorithm::Baseline => ("Baseline", format!("(avg. {BASELINE_RUNS} runs)")),
            Algorithm::Dcip => (row.backend.as_str(), row.strategy.clone()),
        };
        let cells = match (&row.metrics, &row.error) {
            (Some(m), _) => format!(
                "{} | {:.4} | {:.1} | {} | {}",
                m.nodes_expanded, m.search_time_s, m.path_cost, m.path_length, m.turns
            ),
            (None, e) => format!("failed: {} | | | |", e.as_deref().unwrap_or("unknown").replace('|', "/")),
        };
        let _ = writeln!(out, "| {model} | {strategy} | {} | {cells} |", row.algorithm.label());
    }
    out
}

/// Tiles `world` `k` times in both dimensions. The start stays in the
/// first tile; landmarks become the union of their copies and keep their
/// declared access cell. Pedestrians and events are not carried over.
pub fn tile_world(world: &WorldState, k: usize) -> WorldState {
    assert!(k >= 1, "scale must be at least 1");
    let base = world.grid().occupancy();
    let (w, h) = (base.width(), base.height());
    let mut tiled = OccupancyGrid::free(w * k, h * k);
    for ty in 0..k {
        for tx in 0..k {
            for y in 0..h {
                for x in 0..w {
                    if base.is_occupied((x, y)) {
                        tiled.set((tx * w + x, ty * h + y), true);
                    }
                }
            }
        }
    }
    let mut registry = LandmarkRegistry::new();
    for (name, landmark) in world.registry().iter() {
        let cells = landmark.region.cells();
        let region = if k == 1 {
            landmark.region.clone()
        } else {
            Region::from_cells(
                (0..k * k).flat_map(|t| cells.iter().map(move |&(x, y)| ((t % k) * w + x, (t / k) * h + y))),
            )
        };
        registry.insert(
            name,
            Landmark { region, access: landmark.access, kind: landmark.kind },
        );
    }
    WorldState::new(GridState::new(tiled), world.pose().cell())
        .expect("start is free in the first tile")
        .with_registry(registry)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingConfig {
    pub max_scale: usize,
    pub trials: usize,
    pub seed: u64,
    /// Profile of the instruction-driven planner.
    pub profile: StrategyProfile,
    /// Cost edits applied to every scaled map before sampling. `SET_GOAL`
    /// actions are dropped.
    pub actions: ActionSequence,
}

impl ScalingConfig {
    pub fn new(max_scale: usize, trials: usize, seed: u64) -> Self {
        Self {
            max_scale,
            trials,
            seed,
            profile: StrategyProfile::balance(),
            actions: ActionSequence::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingSample {
    pub scale: usize,
    pub trial: usize,
    pub start: Cell,
    pub goal: Cell,
    pub algorithm: Algorithm,
    pub nodes_expanded: usize,
    pub search_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleSummary {
    pub scale: usize,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub mean_nodes: f64,
    pub std_nodes: f64,
    pub mean_time_s: f64,
    pub std_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub seed: u64,
    pub max_scale: usize,
    pub trials: usize,
    /// Ordered by scale, trial, then algorithm.
    pub samples: Vec<ScalingSample>,
    pub summary: Vec<ScaleSummary>,
    /// Skipped trials.
    pub notes: Vec<String>,
}

impl ScalingReport {
    pub fn summary_for(&self, algorithm: Algorithm) -> impl Iterator<Item = &ScaleSummary> {
        self.summary.iter().filter(move |s| s.algorithm == algorithm)
    }

    /// Number of adjacent scale pairs whose mean nodes decrease.
    pub fn inversions(&self, algorithm: Algorithm) -> usize {
        let means: Vec<f64> = self.summary_for(algorithm).map(|s| s.mean_nodes).collect();
        means.windows(2).filter(|w| w[1] < w[0]).count()
    }

    pub fn to_csv(&self) -> String {
        csv_string(|w| {
            w.write_record(SCALING_CSV_HEADER)?;
            for s in &self.samples {
                w.write_record([
                    s.scale.to_string(),
                    s.trial.to_string(),
                    s.algorithm.label().to_string(),
                    s.nodes_expanded.to_string(),
                    format!("{:.6}", s.search_time_s),
                ])?;
            }
            Ok(())
        })
    }

    pub fn summary_markdown(&self) -> String {
        let mut out = format!(
            "Seed {}, {} trials per scale.\n\n\
             | Scale | Algorithm | Trials | Mean Nodes | Std Nodes | Mean Time (s) | Std Time (s) |\n\
             |---:|---|---:|---:|---:|---:|---:|\n",
            self.seed, self.trials
        );
        for s in &self.summary {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:.1} | {:.1} | {:.6} | {:.6} |",
                s.scale,
                s.algorithm.label(),
                s.trials,
                s.mean_nodes,
                s.std_nodes,
                s.mean_time_s,
                s.std_time_s
            );
        }
        for note in &self.notes {
            let _ = writeln!(out, "\nNote: {note}");
        }
        out
    }
}

/// Mean and sample standard deviation.
fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Uniform index into `len` items from one uniform draw.
fn pick(rng: &mut ChaCha8Rng, len: usize) -> usize {
    ((rng.random::<f64>() * len as f64) as usize).min(len - 1)
}

/// Each trial draws from its own stream of the seeded generator, and reuses
/// the same uniform draws at every scale: trial `t` lands on the same
/// relative position in the row-major free-cell list of each scaled map, so
/// scales are compared on matched samples. Both algorithms plan on the same
/// pair; a pair either cannot solve is redrawn.
pub fn scaling_study(base: &WorldState, config: &ScalingConfig) -> Result<ScalingReport, HarnessError> {
    if config.max_scale == 0 || config.trials == 0 {
        return Err(HarnessError::InvalidScale);
    }
    let cost_actions = ActionSequence::new(
        config
            .actions
            .iter()
            .filter(|a| !matches!(a, Action::SetGoal { .. }))
            .cloned()
            .collect(),
    );
    let mut samples = Vec::new();
    let mut notes = Vec::new();
    let mut summary = Vec::new();
    for k in 1..=config.max_scale {
        let world = tile_world(base, k);
        let layered = apply_sequence(world.grid(), &cost_actions, world.registry(), &config.profile)
            .map_err(|e| HarnessError::Actions(e.to_string()))?;
        let free: Vec<Cell> = layered.occupancy().free_cells().filter(|&c| !layered.is_impassable(c)).collect();
        let mut per_alg: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
        for trial in 0..config.trials {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(trial as u64);
            let mut done = false;
            for _ in 0..=MAX_RESAMPLES {
                if free.len() < 2 {
                    break;
                }
                let start = free[pick(&mut rng, free.len())];
                let goal = free[pick(&mut rng, free.len())];
                if start == goal {
                    continue;
                }
                let Ok(state) = layered.set_goal(goal) else { continue };
                let (Ok(b), Ok(d)) = (plan_baseline(&state, start), plan(&state, start, &config.profile)) else {
                    continue;
                };
                for (i, (alg, r)) in [(Algorithm::Baseline, &b), (Algorithm::Dcip, &d)].into_iter().enumerate() {
                    per_alg[i].push((r.nodes_expanded as f64, r.search_time_s));
                    samples.push(ScalingSample {
                        scale: k,
                        trial,
                        start,
                        goal,
                        algorithm: alg,
                        nodes_expanded: r.nodes_expanded,
                        search_time_s: r.search_time_s,
                    });
                }
                done = true;
                break;
            }
            if !done {
                notes.push(format!(
                    "scale {k} trial {trial}: no solvable sample after {MAX_RESAMPLES} resamples, skipped"
                ));
            }
        }
        for (i, alg) in [Algorithm::Baseline, Algorithm::Dcip].into_iter().enumerate() {
            let nodes: Vec<f64> = per_alg[i].iter().map(|p| p.0).collect();
            let times: Vec<f64> = per_alg[i].iter().map(|p| p.1).collect();
            let (mean_nodes, std_nodes) = mean_std(&nodes);
            let (mean_time_s, std_time_s) = mean_std(&times);
            summary.push(ScaleSummary {
                scale: k,
                algorithm: alg,
                trials: nodes.len(),
                mean_nodes,
                std_nodes,
                mean_time_s,
                std_time_s,
            });
        }
    }
    Ok(ScalingReport {
        seed: config.seed,
        max_scale: config.max_scale,
        trials: config.trials,
        samples,
        summary,
        notes,
    })
}
