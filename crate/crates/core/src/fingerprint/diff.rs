//! Normalized relevance differencing between a clean reference model and a
//! candidate model.
//!
//! `diff_i = (clean_i - other_i) / clean_i`, so relevance loss is positive
//! and relevance gain negative. Features whose clean relevance falls below
//! an epsilon (default `1e-4 * max clean relevance`) carry no usable
//! fingerprint and are excluded rather than clamped.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bagged_trees::RelevanceProfile;
use crate::error::{Error, Result};

pub const DEFAULT_EPS_FACTOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffProfile {
    /// diff per feature; 0.0 placeholder at excluded indices.
    pub values: Vec<f64>,
    pub clean_model_id: String,
    pub subject_model_id: String,
    /// Indices with near-zero clean relevance, skipped by all sums.
    pub excluded_features: BTreeSet<usize>,
}

impl DiffProfile {
    pub fn is_excluded(&self, i: usize) -> bool {
        self.excluded_features.contains(&i)
    }

    /// Sum of diffs over an index set, skipping excluded features.
    pub fn sum_over(&self, features: &[usize]) -> f64 {
        features
            .iter()
            .filter(|i| !self.is_excluded(**i))
            .map(|&i| self.values[i])
            .sum()
    }
}

/// Relevance difference of `other` against `clean`. `eps` overrides the
/// exclusion level; `None` uses `DEFAULT_EPS_FACTOR * max(clean)`.
pub fn relevance_diff(
    clean: &RelevanceProfile,
    other: &RelevanceProfile,
    eps: Option<f64>,
) -> Result<DiffProfile> {
    if clean.values.len() != other.values.len() {
        return Err(Error::BadArgument(format!(
            "profile dimensions differ: {} vs {}",
            clean.values.len(),
            other.values.len()
        )));
    }
    if !clean.feature_names.is_empty()
        && !other.feature_names.is_empty()
        && clean.feature_names != other.feature_names
    {
        return Err(Error::BadArgument(
            "profiles enumerate different features".into(),
        ));
    }
    let max_clean = clean.values.iter().cloned().fold(0.0f64, f64::max);
    let eps = eps.unwrap_or(DEFAULT_EPS_FACTOR * max_clean);

    let mut values = vec![0.0f64; clean.values.len()];
    let mut excluded = BTreeSet::new();
    for (i, (&c, &o)) in clean.values.iter().zip(&other.values).enumerate() {
        if c >= eps && c > 0.0 {
            values[i] = (c - o) / c;
        } else {
            excluded.insert(i);
        }
    }
    Ok(DiffProfile {
        values,
        clean_model_id: clean.model_id.clone(),
        subject_model_id: other.model_id.clone(),
        excluded_features: excluded,
    })
}
