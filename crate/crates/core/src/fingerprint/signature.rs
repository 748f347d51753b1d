//! Drift-signature selection: per-scenario feature sets whose relevance-diff
//! sum carries a sign unique to that scenario.
//!
//! For each scenario the worst-case diff profile is compared against every
//! other scenario's. A feature is sign-unique for scenario S when its diff
//! sign under S is strictly opposite to its sign under all other scenarios.
//! When a scenario moves every usable feature in one direction, its
//! signature is the full feature set instead. Expected sign patterns are
//! recorded from the observed worst-case sums.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bagged_trees::RelevanceProfile;
use crate::error::{Error, Result};
use crate::fingerprint::diff::{relevance_diff, DiffProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumSign {
    Up,
    Down,
}

impl SumSign {
    pub fn of(value: f64) -> SumSign {
        if value >= 0.0 {
            SumSign::Up
        } else {
            SumSign::Down
        }
    }

    pub fn arrow(&self) -> &'static str {
        match self {
            SumSign::Up => "up",
            SumSign::Down => "down",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSignature {
    pub scenario_id: String,
    /// 0-based feature indices; reports serialize them 1-based.
    pub feature_indices: Vec<usize>,
    /// True when the signature covers the whole feature set.
    pub covers_all_features: bool,
    /// Sign this signature's diff sum takes under each scenario's worst case.
    pub expected_sign_pattern: BTreeMap<String, SumSign>,
    /// Calibrated detection threshold on |sum|; > 0 after calibration.
    pub threshold: f64,
}

/// Manual signature override: the full set or explicit 1-based indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, rename_all = "snake_case")]
pub enum OverrideSpec {
    All(AllToken),
    IndicesOneBased(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllToken {
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignatureSelectionConfig {
    /// Features per sign-unique signature (full-set signatures ignore this).
    pub k_per_scenario: Option<usize>,
    /// A feature stays sign-unique for scenario S when every other scenario
    /// responds with the opposite sign or with a same-sign magnitude at most
    /// this fraction of the own-scenario magnitude ("negative only in S"
    /// tolerates negligible responses elsewhere). 0 demands strictly
    /// opposite signs.
    pub same_sign_tolerance: f64,
    /// Per-scenario manual feature sets, e.g. pinned published choices.
    pub overrides: BTreeMap<String, OverrideSpec>,
}

impl Default for SignatureSelectionConfig {
    fn default() -> Self {
        SignatureSelectionConfig {
            k_per_scenario: None,
            same_sign_tolerance: 0.3,
            overrides: BTreeMap::new(),
        }
    }
}

pub const DEFAULT_K_PER_SCENARIO: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedScenario {
    pub scenario_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignatureSelection {
    pub signatures: Vec<DriftSignature>,
    /// Scenarios with no sign-unique feature set, excluded from explanation.
    pub dropped: Vec<DroppedScenario>,
    /// Worst-case diff profiles the selection was derived from.
    pub diffs: BTreeMap<String, DiffProfile>,
}

fn strict_sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Select signatures from the clean profile and per-scenario worst-case
/// profiles. Scenarios iterate in id order; everything is deterministic.
pub fn select_signatures(
    clean: &RelevanceProfile,
    worst_cases: &BTreeMap<String, RelevanceProfile>,
    cfg: &SignatureSelectionConfig,
) -> Result<SignatureSelection> {
    if worst_cases.len() < 2 {
        return Err(Error::BadArgument(format!(
            "signature selection needs >= 2 scenarios, got {}",
            worst_cases.len()
        )));
    }
    let d = clean.values.len();
    let k = cfg.k_per_scenario.unwrap_or(DEFAULT_K_PER_SCENARIO);

    let mut diffs: BTreeMap<String, DiffProfile> = BTreeMap::new();
    for (id, profile) in worst_cases {
        diffs.insert(id.clone(), relevance_diff(clean, profile, None)?);
    }

    // Features excluded in any scenario carry no comparable sign.
    let mut usable: Vec<usize> = Vec::new();
    for i in 0..d {
        if diffs.values().all(|dp| !dp.is_excluded(i)) {
            usable.push(i);
        }
    }

    let mut signatures = Vec::new();
    let mut dropped = Vec::new();

    for scenario in diffs.keys().cloned().collect::<Vec<_>>() {
        let own = &diffs[&scenario];

        let indices: Option<(Vec<usize>, bool)> = match cfg.overrides.get(&scenario) {
            Some(OverrideSpec::All(_)) => Some(((0..d).collect(), true)),
            Some(OverrideSpec::IndicesOneBased(one_based)) => {
                let mut zero = Vec::with_capacity(one_based.len());
                for &ob in one_based {
                    if ob == 0 || ob > d {
                        return Err(Error::BadArgument(format!(
                            "override for {scenario}: 1-based index {ob} out of range 1..={d}"
                        )));
                    }
                    zero.push(ob - 1);
                }
                Some((zero, false))
            }
            None => {
                // Uniform direction over every usable feature: the scenario
                // gets the global signature.
                let signs: BTreeSet<i8> =
                    usable.iter().map(|&i| strict_sign(own.values[i])).collect();
                if !usable.is_empty() && signs.len() == 1 && !signs.contains(&0) {
                    Some(((0..d).collect(), true))
                } else {
                    // Sign-unique features: every other scenario responds
                    // with the opposite sign (or negligibly, per the
                    // same-sign tolerance). Ranked by the smallest
                    // directional gap to any other scenario.
                    let mut candidates: Vec<(usize, i8, f64)> = Vec::new();
                    for &i in &usable {
                        let own_value = own.values[i];
                        let s = strict_sign(own_value);
                        if s == 0 {
                            continue;
                        }
                        let mut margin = f64::INFINITY;
                        let unique = diffs
                            .iter()
                            .filter(|(id, _)| **id != scenario)
                            .all(|(_, dp)| {
                                let other = dp.values[i];
                                let gap = (other - own_value) * -(s as f64);
                                margin = margin.min(gap);
                                strict_sign(other) == -s
                                    || other.abs()
                                        <= cfg.same_sign_tolerance * own_value.abs()
                            });
                        if unique {
                            candidates.push((i, s, margin));
                        }
                    }
                    // Opposite-signed candidates would cancel inside one
                    // sum; keep one sign, preferring relevance gain (diff
                    // negative) under the scenario itself.
                    let keep_sign = if candidates.iter().any(|&(_, s, _)| s < 0) { -1 } else { 1 };
                    candidates.retain(|&(_, s, _)| s == keep_sign);
                    if candidates.is_empty() {
                        None
                    } else {
                        candidates.sort_by(|a, b| {
                            b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0))
                        });
                        let mut take: Vec<usize> =
                            candidates.iter().take(k).map(|&(i, _, _)| i).collect();
                        take.sort_unstable();
                        Some((take, false))
                    }
                }
            }
        };

        match indices {
            None => dropped.push(DroppedScenario {
                scenario_id: scenario.clone(),
                reason: "no feature has a sign unique to this scenario".into(),
            }),
            Some((feature_indices, covers_all_features)) => {
                let mut pattern = BTreeMap::new();
                for (other_id, dp) in &diffs {
                    pattern.insert(other_id.clone(), SumSign::of(dp.sum_over(&feature_indices)));
                }
                signatures.push(DriftSignature {
                    scenario_id: scenario.clone(),
                    feature_indices,
                    covers_all_features,
                    expected_sign_pattern: pattern,
                    threshold: 0.0,
                });
            }
        }
    }

    if signatures.is_empty() {
        return Err(Error::SignatureNotFound { scenario: "all scenarios".into() });
    }
    Ok(SignatureSelection { signatures, dropped, diffs })
}
