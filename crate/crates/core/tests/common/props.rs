//! Action-algebra properties, each checked on one seeded case.

use std::collections::BTreeSet;

use proptest::{prop_assert, prop_assert_eq};
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gridpilot::action::{apply_action, apply_sequence, validate_action, Action, ActionSequence, GoalTarget, RegionRef};
use gridpilot::grid::{Cell, Cost, CostMode, GridState, Region};
use gridpilot::landmarks::{Landmark, LandmarkKind, LandmarkRegistry};
use gridpilot::profile::StrategyProfile;

/// Bit pattern of every layer, for exact comparisons.
pub type Fingerprint = (Vec<u8>, Vec<u8>, Vec<(u8, u64)>, Option<Cell>);

pub fn fingerprint(state: &GridState) -> Fingerprint {
    let costs = state
        .costs()
        .values()
        .iter()
        .map(|c| match c {
            Cost::Finite(v) => (0, v.to_bits()),
            Cost::Blocked => (1, 0),
        })
        .collect();
    (
        state.base().cells().to_vec(),
        state.occupancy().cells().to_vec(),
        costs,
        state.goal(),
    )
}

pub struct Case {
    pub state: GridState,
    pub registry: LandmarkRegistry,
    pub rng: ChaCha8Rng,
}

pub fn case(seed: u64) -> Case {
    let (state, _) = super::random_case(seed, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    // Dynamic obstacles on top of the base map.
    let mut occupancy = state.occupancy().clone();
    for _ in 0..rng.random_range(0..4) {
        occupancy.set((rng.random_range(0..6), rng.random_range(0..6)), true);
    }
    let state = state.with_occupancy(occupancy).unwrap();
    let mut registry = LandmarkRegistry::new();
    registry.insert("dock", Landmark::new(Region::rect(0, 0, 1, 1), LandmarkKind::Storage));
    registry.insert("lane", Landmark::new(Region::from_cells([(2, 3), (3, 3), (4, 3)]), LandmarkKind::Lane));
    registry.insert(
        "shelf",
        Landmark::new(Region::rect(4, 4, 5, 5), LandmarkKind::Shelf).with_access((3, 4)),
    );
    registry.insert("annex", Landmark::new(Region::rect(5, 0, 8, 1), LandmarkKind::Storage));
    Case { state, registry, rng }
}

const NAMES: [&str; 5] = ["dock", "lane", "shelf", "annex", "nowhere"];

pub fn random_region(rng: &mut ChaCha8Rng) -> RegionRef {
    if rng.random_bool(0.4) {
        return RegionRef::Landmark(NAMES[rng.random_range(0..NAMES.len())].to_string());
    }
    if rng.random_bool(0.5) {
        let (x0, y0) = (rng.random_range(0..7), rng.random_range(0..7));
        RegionRef::Inline(Region::rect(x0, y0, x0 + rng.random_range(0..3), y0 + rng.random_range(0..3)))
    } else {
        let n = rng.random_range(1..5);
        RegionRef::Inline(Region::from_cells((0..n).map(|_| (rng.random_range(0..7), rng.random_range(0..7)))))
    }
}

pub fn random_value(rng: &mut ChaCha8Rng) -> Cost {
    match rng.random_range(0..6) {
        0 => Cost::Blocked,
        1 => Cost::Finite(-0.75),
        2 => Cost::Finite(-0.5),
        _ => Cost::Finite(rng.random_range(-4..12) as f64 * 0.25),
    }
}

pub fn random_action(rng: &mut ChaCha8Rng) -> Action {
    match rng.random_range(0..10) {
        0 => Action::ResetMap,
        1..=3 => Action::ModifyCost {
            region: random_region(rng),
            value: random_value(rng),
            mode: if rng.random_bool(0.5) { CostMode::Set } else { CostMode::Add },
        },
        4 => Action::AvoidAreas { region: random_region(rng) },
        5 => Action::PreferAreas { region: random_region(rng) },
        6..=7 => Action::SetGoal {
            target: GoalTarget::Cell((rng.random_range(0..7), rng.random_range(0..7))),
        },
        _ => Action::SetGoal {
            target: GoalTarget::Landmark(NAMES[rng.random_range(0..NAMES.len())].to_string()),
        },
    }
}

pub fn random_sequence(rng: &mut ChaCha8Rng, max_len: usize) -> ActionSequence {
    let n = rng.random_range(0..=max_len);
    ActionSequence::new((0..n).map(|_| random_action(rng)).collect())
}

pub fn random_profile(rng: &mut ChaCha8Rng) -> StrategyProfile {
    StrategyProfile::named()[rng.random_range(0..3)].clone()
}

/// Applies each action in turn, skipping the ones that fail.
pub fn history(state: &GridState, seq: &ActionSequence, case: &Case, profile: &StrategyProfile) -> GridState {
    seq.iter().fold(state.clone(), |acc, a| {
        apply_action(&acc, a, &case.registry, profile).unwrap_or(acc)
    })
}

pub fn reset_erases_history(seed: u64) -> Result<(), TestCaseError> {
    let mut c = case(seed);
    let profile = random_profile(&mut c.rng);
    let past = random_sequence(&mut c.rng, 8);
    let future = random_sequence(&mut c.rng, 4);
    let lived = history(&c.state, &past, &c, &profile);

    let reset = apply_action(&lived, &Action::ResetMap, &c.registry, &profile).unwrap();
    let fresh = GridState::new(c.state.base().clone());
    prop_assert_eq!(fingerprint(&reset), fingerprint(&fresh));
    prop_assert_eq!(fingerprint(&reset), fingerprint(&c.state.reset_map()));

    let mut with_reset = vec![Action::ResetMap];
    with_reset.extend(future.iter().cloned());
    let a = apply_sequence(&lived, &ActionSequence::new(with_reset), &c.registry, &profile);
    let b = apply_sequence(&fresh, &future, &c.registry, &profile);
    match (a, b) {
        (Ok(a), Ok(b)) => prop_assert_eq!(fingerprint(&a), fingerprint(&b)),
        (Err(a), Err(b)) => {
            prop_assert_eq!(a.index, b.index + 1);
            prop_assert_eq!(a.source, b.source);
        }
        (a, b) => prop_assert!(false, "diverged: {:?} vs {:?}", a, b),
    }
    Ok(())
}

pub fn sequences_apply_atomically(seed: u64) -> Result<(), TestCaseError> {
    let mut c = case(seed);
    let profile = random_profile(&mut c.rng);
    let seq = random_sequence(&mut c.rng, 8);
    let before = fingerprint(&c.state);
    let result = apply_sequence(&c.state, &seq, &c.registry, &profile);
    prop_assert_eq!(fingerprint(&c.state), before.clone());

    // Reference: step-by-step fold that stops at the first failure.
    let mut acc = c.state.clone();
    let mut failed = None;
    for (i, a) in seq.iter().enumerate() {
        match apply_action(&acc, a, &c.registry, &profile) {
            Ok(next) => acc = next,
            Err(e) => {
                failed = Some((i, e));
                break;
            }
        }
    }
    match (result, failed) {
        (Ok(state), None) => prop_assert_eq!(fingerprint(&state), fingerprint(&acc)),
        (Err(e), Some((i, source))) => {
            prop_assert_eq!(e.index, i);
            prop_assert_eq!(e.source, source);
        }
        (r, f) => prop_assert!(false, "fold disagrees: {:?} vs {:?}", r.map(|_| ()), f),
    }

    // Applying a concatenation equals applying the parts in turn.
    let tail = random_sequence(&mut c.rng, 4);
    if let Ok(mid) = apply_sequence(&c.state, &seq, &c.registry, &profile) {
        let whole = apply_sequence(&c.state, &seq.concat(&tail), &c.registry, &profile);
        let parts = apply_sequence(&mid, &tail, &c.registry, &profile);
        match (whole, parts) {
            (Ok(a), Ok(b)) => prop_assert_eq!(fingerprint(&a), fingerprint(&b)),
            (Err(a), Err(b)) => prop_assert_eq!(a.index, b.index + seq.len()),
            (a, b) => prop_assert!(false, "concat diverged: {:?} vs {:?}", a.map(|_| ()), b.map(|_| ())),
        }
    }
    Ok(())
}

pub fn validation_is_sound(seed: u64) -> Result<(), TestCaseError> {
    let mut c = case(seed);
    let profile = random_profile(&mut c.rng);
    let lived = history(&c.state, &random_sequence(&mut c.rng, 4), &c, &profile);
    let action = random_action(&mut c.rng);
    let verdict = validate_action(&action, &lived, &c.registry);
    let applied = apply_action(&lived, &action, &c.registry, &profile);
    prop_assert_eq!(
        verdict.is_ok(),
        applied.is_ok(),
        "{} validated {:?} but applied {:?}",
        action,
        verdict,
        applied.map(|_| ())
    );
    Ok(())
}

pub fn cost_writes_stay_inside_their_region(seed: u64) -> Result<(), TestCaseError> {
    let mut c = case(seed);
    let profile = random_profile(&mut c.rng);
    let lived = history(&c.state, &random_sequence(&mut c.rng, 4), &c, &profile);
    let RegionRef::Inline(region) = (loop {
        if let r @ RegionRef::Inline(_) = random_region(&mut c.rng) { break r; }
    }) else { unreachable!() };
    let value = random_value(&mut c.rng);
    let mode = if c.rng.random_bool(0.5) { CostMode::Set } else { CostMode::Add };
    let Ok(next) = lived.modify_cost(&region, value, mode) else {
        // Rejected writes change nothing by construction.
        return Ok(());
    };
    let inside: BTreeSet<Cell> = region.cells().into_iter().collect();
    prop_assert_eq!(next.occupancy(), lived.occupancy());
    prop_assert_eq!(next.goal(), lived.goal());
    for y in 0..lived.height() {
        for x in 0..lived.width() {
            let (old, new) = (lived.costs().get((x, y)), next.costs().get((x, y)));
            if inside.contains(&(x, y)) {
                let want = match mode {
                    CostMode::Set => value,
                    CostMode::Add => old.combine(value),
                };
                prop_assert_eq!(new, want);
            } else {
                prop_assert_eq!(format!("{old:?}"), format!("{new:?}"), "cell ({}, {}) outside the region changed", x, y);
            }
        }
    }
    Ok(())
}
