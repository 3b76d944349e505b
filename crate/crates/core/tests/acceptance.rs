//! Acceptance checks. Runs without the libtest harness so every verdict line
//! is printed; exits non-zero if any check fails.

mod common;

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::fuzz::{corpus, malformed};
use common::{props, random_case, ucs, Model};
use gridpilot::action::apply_sequence;
use gridpilot::bundled;
use gridpilot::dcip::{run_episode, EpisodeConfig, Outcome};
use gridpilot::grid::{Cost, CostMode, GridState, OccupancyGrid, Region};
use gridpilot::harness::{scaling_study, Algorithm, ScalingConfig};
use gridpilot::instruct::{decode_action_payload, parse_instruction, InstructError, RuleBased};
use gridpilot::planner::{count_turns, path_cost, path_length, plan, plan_baseline, Path, PlanError, PlanResult};
use gridpilot::profile::StrategyProfile;
use gridpilot::world::{EventKind, WorldState};

const BASELINE_LENGTH: usize = 177;

type Property = fn(u64) -> Result<(), proptest::test_runner::TestCaseError>;

struct Verdict {
    name: &'static str,
    failures: Vec<String>,
    notes: Vec<String>,
    elapsed: Duration,
}

impl Verdict {
    fn new(name: &'static str) -> Self {
        Self { name, failures: Vec::new(), notes: Vec::new(), elapsed: Duration::ZERO }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    fn within(&mut self, limit: Duration) {
        self.check(self.elapsed < limit, format!("took {:.2?}, limit {:.0?}", self.elapsed, limit));
    }
}

fn timed(name: &'static str, body: impl FnOnce(&mut Verdict)) -> Verdict {
    let mut v = Verdict::new(name);
    let started = Instant::now();
    body(&mut v);
    v.elapsed = started.elapsed();
    v
}

fn oracle_optimality() -> Verdict {
    let mut v = timed("oracle optimality (200 seeded 8x8 grids)", |v| {
        let mut compared = 0;
        let mut no_path = 0;
        for seed in 0..200 {
            let (state, start) = random_case(seed, 8);
            let goal = state.goal().unwrap();
            let mut runs: Vec<(String, Result<PlanResult, PlanError>, Option<f64>)> = StrategyProfile::named()
                .iter()
                .map(|p| {
                    let m = Model { honor_zones: p.honor_zones_in_search, turn_penalty: p.turn_penalty };
                    (format!("{:?}", p.name), plan(&state, start, p), ucs(&state, start, goal, m))
                })
                .collect();
            let flat = Model { honor_zones: false, turn_penalty: 0.0 };
            runs.push(("Baseline".into(), plan_baseline(&state, start), ucs(&state.with_zero_costs(), start, goal, flat)));
            for (name, result, oracle) in runs {
                compared += 1;
                match (result, oracle) {
                    (Ok(r), Some(c)) => v.check(r.search_cost == c, format!("seed {seed} {name}: {} != {c}", r.search_cost)),
                    (Err(PlanError::NoPath { .. }), None) => no_path += 1,
                    (r, o) => v.check(false, format!("seed {seed} {name}: planner {:?}, oracle {o:?}", r.map(|r| r.search_cost))),
                }
            }
        }
        v.note(format!("{compared} searches, {no_path} agreed NoPath"));
    });
    v.within(Duration::from_secs(10));
    v
}

fn metric_units() -> Verdict {
    timed("metric unit suite", |v| {
        let straight = Path((0..6).map(|x| (x, 0)).collect());
        let staircase = Path(vec![(0, 0), (1, 0), (1, 1), (2, 1), (2, 2)]);
        v.check(path_length(&straight) == straight.cells().len() - 1, "length of straight path");
        v.check(path_length(&staircase) == 4, "length of staircase");
        v.check(path_length(&Path(vec![(3, 3)])) == 0, "length of single cell");
        v.check(count_turns(&straight) == 0, "straight path has 0 turns");
        v.check(count_turns(&staircase) == 3, "staircase has 3 turns");

        let flat = GridState::new(OccupancyGrid::free(6, 3));
        let unit = path_cost(&straight, &flat).unwrap();
        v.check(unit == 5.0, format!("unit cost {unit}"));
        let zoned = flat
            .modify_cost(&Region::rect(1, 0, 2, 0), Cost::Finite(2.5), CostMode::Set)
            .and_then(|s| s.modify_cost(&Region::rect(3, 0, 4, 0), Cost::Finite(-0.5), CostMode::Set))
            .and_then(|s| s.modify_cost(&Region::cell((5, 0)), Cost::Finite(0.25), CostMode::Set))
            .unwrap();
        let cost = path_cost(&straight, &zoned).unwrap();
        let expected = 5.0 + 2.5 * 2.0 - 0.5 * 2.0 + 0.25;
        v.check((cost - expected).abs() <= 1e-9, format!("zoned cost {cost}, expected {expected}"));
        let start_zone = zoned.modify_cost(&Region::cell((0, 0)), Cost::Finite(9.0), CostMode::Set).unwrap();
        v.check(path_cost(&straight, &start_zone).unwrap() == cost, "start cell adds nothing");
        let blocked = zoned.modify_cost(&Region::cell((2, 0)), Cost::Blocked, CostMode::Set).unwrap();
        v.check(path_cost(&straight, &blocked).is_err(), "BLOCKED cell on path is an error");
    })
}

fn pick_world() -> WorldState {
    bundled::scenario("warehouse").unwrap().unwrap()
}

fn pipeline(world: &WorldState, instruction: &str, profile: &StrategyProfile) -> (GridState, PlanResult) {
    let parsed = parse_instruction(instruction, world.registry(), &RuleBased).unwrap();
    let state = apply_sequence(world.grid(), &parsed.actions, world.registry(), profile).unwrap();
    let result = plan(&state, world.pose().cell(), profile).unwrap();
    (state, result)
}

fn warehouse() -> Verdict {
    let mut v = timed("warehouse strategies vs baseline", |v| {
        let world = pick_world();
        let start = world.pose().cell();
        let repair = world.registry().get("repair_area").unwrap().region.clone();

        let (state, balance) = pipeline(&world, bundled::PICK_INSTRUCTION, &StrategyProfile::balance());
        let baseline = plan_baseline(&state, start).unwrap();
        v.check(baseline.path_length == BASELINE_LENGTH, format!("baseline length {}", baseline.path_length));
        v.note(format!(
            "baseline len {} cost {} turns {} nodes {}",
            baseline.path_length, baseline.path_cost, baseline.turns, baseline.nodes_expanded
        ));
        v.check(
            balance.path_cost < baseline.path_cost && balance.turns < baseline.turns,
            format!("balance cost {} turns {}", balance.path_cost, balance.turns),
        );
        v.note(format!("balance cost {} turns {}", balance.path_cost, balance.turns));

        let (_, safety) = pipeline(&world, bundled::PICK_INSTRUCTION, &StrategyProfile::maximize_safety());
        let inside = safety.path.cells().iter().filter(|c| repair.contains(**c)).count();
        v.check(inside == 0, format!("safety path has {inside} repair cells"));
        v.note(format!("safety repair cells {inside}"));

        let avoid = "Navigate to Shelf 3, avoid the repair area";
        let (avoid_state, quick) = pipeline(&world, avoid, &StrategyProfile::navigate_quickly());
        let avoid_baseline = plan_baseline(&avoid_state, start).unwrap();
        v.check(
            quick.nodes_expanded < avoid_baseline.nodes_expanded && quick.path_cost >= avoid_baseline.path_cost,
            format!(
                "quick nodes {} cost {} vs baseline nodes {} cost {}",
                quick.nodes_expanded, quick.path_cost, avoid_baseline.nodes_expanded, avoid_baseline.path_cost
            ),
        );
        v.note(format!("quick nodes {} cost {}", quick.nodes_expanded, quick.path_cost));
    });
    v.within(Duration::from_secs(30));
    v
}

fn scaling() -> Verdict {
    let mut v = timed("scaling study (K=10, N=10, seed 42)", |v| {
        let world = pick_world();
        let config = ScalingConfig::new(10, 10, 42);
        let first = scaling_study(&world, &config).unwrap();
        let second = scaling_study(&world, &config).unwrap();
        let means: Vec<f64> = first.summary_for(Algorithm::Baseline).map(|s| s.mean_nodes).collect();
        let ratio = means[9] / means[0];
        v.check(ratio >= 10.0, format!("k=10/k=1 mean nodes ratio {ratio:.1}"));
        let inversions = first.inversions(Algorithm::Baseline);
        v.check(inversions <= 1, format!("{inversions} inversions"));
        let strip = |csv: String| -> Vec<String> {
            csv.lines()
                .map(|l| l.split(',').enumerate().filter(|(i, _)| *i != 4).map(|(_, f)| f).collect::<Vec<_>>().join(","))
                .collect()
        };
        v.check(strip(first.to_csv()) == strip(second.to_csv()), "non-timing columns differ between runs");
        v.note(format!("baseline mean nodes {:.1} -> {:.1} (x{ratio:.1}), {inversions} inversion(s)", means[0], means[9]));
    });
    v.within(Duration::from_secs(300));
    v
}

fn event_scenario() -> Verdict {
    timed("dynamic obstacle at tick 3", |v| {
        let text = bundled::scenario_text("warehouse_event").unwrap();
        let world = gridpilot::world::load_scenario(text).unwrap();
        let obstacle = world
            .pending_events()
            .iter()
            .find_map(|e| match &e.kind {
                EventKind::AddObstacle { region } if e.at_time == 3 => Some(region.clone()),
                _ => None,
            })
            .expect("scenario has an obstacle at tick 3");
        for profile in StrategyProfile::named() {
            let default = run_episode(bundled::PICK_INSTRUCTION, world.clone(), &profile, &RuleBased, EpisodeConfig::default());
            let inside = default.trajectory.iter().filter(|c| obstacle.contains(**c)).count();
            v.check(default.outcome == Some(Outcome::GoalReached), format!("{:?} default outcome {:?}", profile.name, default.outcome));
            v.check(default.replans() == 1, format!("{:?} default replans {}", profile.name, default.replans()));
            v.check(inside == 0, format!("{:?} entered the obstacle {inside} times", profile.name));

            let literal = run_episode(
                bundled::PICK_INSTRUCTION,
                world.clone(),
                &profile,
                &RuleBased,
                EpisodeConfig { literal_loop: true, ..EpisodeConfig::default() },
            );
            let (a, b) = (default.totals.executed_cost, literal.totals.executed_cost);
            v.check(literal.outcome == Some(Outcome::GoalReached), format!("{:?} literal outcome {:?}", profile.name, literal.outcome));
            v.check(b <= a * 1.05, format!("{:?} literal cost {b} vs default {a}", profile.name));
            v.note(format!("{:?}: cost {a} / literal {b}, replans {} / {}", profile.name, default.replans(), literal.replans()));
        }
    })
}

fn algebra() -> Verdict {
    timed("action-algebra properties (1000 cases each)", |v| {
        let checks: [(&str, Property); 4] = [
            ("reset erases history", props::reset_erases_history),
            ("sequence atomicity", props::sequences_apply_atomically),
            ("validation soundness", props::validation_is_sound),
            ("piecewise isolation", props::cost_writes_stay_inside_their_region),
        ];
        for (name, check) in checks {
            let failed: Vec<u64> = (0..1000).filter(|&seed| check(seed).is_err()).collect();
            v.check(failed.is_empty(), format!("{name}: {} failures, first seed {:?}", failed.len(), failed.first()));
        }
    })
}

fn parser() -> Verdict {
    timed("instruction parser", |v| {
        let rows = corpus();
        let mut exact = 0;
        for (scenario, instruction, payload) in &rows {
            let world = bundled::scenario(scenario).unwrap().unwrap();
            let expected = decode_action_payload(payload).unwrap().canonical_order();
            match parse_instruction(instruction, world.registry(), &RuleBased) {
                Ok(p) if p.actions == expected => exact += 1,
                other => v.check(false, format!("{instruction:?}: {other:?}")),
            }
        }
        v.check(rows.len() == 20, format!("{} fixtures", rows.len()));
        let valid: Vec<String> = rows.into_iter().map(|(_, _, p)| p).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut structured = 0;
        for n in 0..1000 {
            match decode_action_payload(&malformed(&mut rng, &valid[n % valid.len()])) {
                Err(InstructError::SchemaViolation { .. }) => structured += 1,
                other => v.check(false, format!("fuzz case {n}: {other:?}")),
            }
        }
        v.note(format!("{exact}/20 exact, {structured}/1000 rejected"));
    })
}

fn main() {
    let verdicts = [
        oracle_optimality(),
        metric_units(),
        warehouse(),
        scaling(),
        event_scenario(),
        algebra(),
        parser(),
    ];
    let mut failed = 0;
    for v in &verdicts {
        let status = if v.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("{status} {} [{:.2?}] {}", v.name, v.elapsed, v.notes.join("; "));
        for f in &v.failures {
            println!("     - {f}");
        }
        failed += usize::from(!v.failures.is_empty());
    }
    println!("{} of {} criteria passed", verdicts.len() - failed, verdicts.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
