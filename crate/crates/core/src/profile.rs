//! Strategy profiles: the parameter bundles behind the three navigation
//! strategies. Every magnitude used by cost lowering and search lives here.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Cost, COST_FLOOR};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown strategy {0:?}")]
pub struct UnknownStrategy(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyName {
    NavigateQuickly,
    MaximizeSafety,
    BalanceEfficiencyAndSafety,
    Baseline,
    Custom(String),
}

impl StrategyName {
    pub fn label(&self) -> &str {
        match self {
            StrategyName::NavigateQuickly => "Navigate Quickly",
            StrategyName::MaximizeSafety => "Maximize Safety",
            StrategyName::BalanceEfficiencyAndSafety => "Balance Efficiency and Safety",
            StrategyName::Baseline => "Baseline",
            StrategyName::Custom(name) => name,
        }
    }
}

impl fmt::Display for StrategyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub name: StrategyName,
    /// Value written by AVOID_AREAS.
    pub avoid_cost: Cost,
    /// Value written by PREFER_AREAS, in [-0.5, 0).
    pub prefer_discount: f64,
    /// Search cost added per direction change.
    pub turn_penalty: f64,
    /// Radius in cells of the add-mode margin around obstacles and
    /// pedestrians when the instruction asks for safe distances.
    pub safety_inflation: usize,
    /// Cost added per cell inside the safety margin.
    pub safety_cost: f64,
    /// When false the search ignores the cost layer (BLOCKED still
    /// forbids entry); reported path cost always includes it.
    pub honor_zones_in_search: bool,
    /// Tighten the heuristic to the cheapest step the layer allows and add a
    /// turn lower bound. When false the heuristic is `0.5 * manhattan`,
    /// admissible for any layer.
    #[serde(default = "default_true")]
    pub layer_aware_heuristic: bool,
}

fn default_true() -> bool {
    true
}

impl StrategyProfile {
    pub fn navigate_quickly() -> Self {
        Self {
            name: StrategyName::NavigateQuickly,
            avoid_cost: Cost::Finite(10.0),
            prefer_discount: -0.25,
            turn_penalty: 0.8,
            safety_inflation: 0,
            safety_cost: 1.0,
            honor_zones_in_search: false,
            layer_aware_heuristic: true,
        }
    }

    pub fn maximize_safety() -> Self {
        Self {
            name: StrategyName::MaximizeSafety,
            avoid_cost: Cost::Blocked,
            prefer_discount: -0.25,
            turn_penalty: 0.2,
            safety_inflation: 1,
            safety_cost: 1.0,
            honor_zones_in_search: true,
            layer_aware_heuristic: true,
        }
    }

    pub fn balance() -> Self {
        Self {
            name: StrategyName::BalanceEfficiencyAndSafety,
            avoid_cost: Cost::Blocked,
            prefer_discount: -0.5,
            turn_penalty: 0.5,
            safety_inflation: 1,
            safety_cost: 1.0,
            honor_zones_in_search: true,
            layer_aware_heuristic: true,
        }
    }

    /// Plain shortest-path search: no turn penalty, zones ignored, fixed
    /// heuristic.
    pub fn baseline() -> Self {
        Self {
            name: StrategyName::Baseline,
            avoid_cost: Cost::Blocked,
            prefer_discount: -0.5,
            turn_penalty: 0.0,
            safety_inflation: 0,
            safety_cost: 0.0,
            honor_zones_in_search: false,
            layer_aware_heuristic: false,
        }
    }

    /// The three named strategies in their conventional order.
    pub fn named() -> [StrategyProfile; 3] {
        [Self::navigate_quickly(), Self::maximize_safety(), Self::balance()]
    }

    pub fn check(&self) -> Result<(), String> {
        if !(COST_FLOOR..0.0).contains(&self.prefer_discount) {
            return Err(format!("prefer_discount {} outside [-0.5, 0)", self.prefer_discount));
        }
        if let Err(e) = self.avoid_cost.validate() {
            return Err(format!("avoid_cost: {e}"));
        }
        if !(self.turn_penalty.is_finite() && self.turn_penalty >= 0.0) {
            return Err(format!("turn_penalty {} must be >= 0", self.turn_penalty));
        }
        if !(self.safety_cost.is_finite() && self.safety_cost >= 0.0) {
            return Err(format!("safety_cost {} must be >= 0", self.safety_cost));
        }
        Ok(())
    }
}

/// Looks up a strategy by its display name. Matching ignores case,
/// punctuation and the words "and"; "Balance Efficiency" is accepted as a
/// short form.
pub fn select_profile(name: &str) -> Result<StrategyProfile, UnknownStrategy> {
    let key: String = name
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty() && *w != "and")
        .collect::<Vec<_>>()
        .join(" ");
    match key.as_str() {
        "navigate quickly" | "quick" => Ok(StrategyProfile::navigate_quickly()),
        "maximize safety" | "maximise safety" | "safety" => Ok(StrategyProfile::maximize_safety()),
        "balance efficiency safety" | "balance efficiency" | "balance" => Ok(StrategyProfile::balance()),
        "baseline" => Ok(StrategyProfile::baseline()),
        _ => Err(UnknownStrategy(name.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_profiles() {
        let safety = select_profile("Maximize Safety").unwrap();
        assert_eq!(safety.avoid_cost, Cost::Blocked);
        assert_eq!(safety.safety_inflation, 1);
        assert_eq!(safety.prefer_discount, -0.25);
        assert_eq!(safety.turn_penalty, 0.2);

        let quick = select_profile("Navigate Quickly").unwrap();
        assert!(!quick.honor_zones_in_search);
        assert_eq!(quick.turn_penalty, 0.8);
        assert_eq!(quick.safety_inflation, 0);
        assert_eq!(quick.avoid_cost, Cost::Finite(10.0));

        let balance = select_profile("Balance Efficiency and Safety").unwrap();
        assert_eq!(balance.prefer_discount, -0.5);
        assert_eq!(balance.turn_penalty, 0.5);
        assert_eq!(select_profile("balance efficiency").unwrap(), balance);

        assert_eq!(select_profile("Teleport"), Err(UnknownStrategy("Teleport".into())));
    }

    #[test]
    fn presets_satisfy_invariants() {
        for p in StrategyProfile::named() {
            p.check().unwrap();
            assert!(1.0 + p.prefer_discount >= 0.5);
        }
        StrategyProfile::baseline().check().unwrap();
    }
}
