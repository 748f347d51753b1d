//! Per-feature relevance from accumulated split risk decreases.
//!
//! For every branch node splitting on feature i the risk decrease
//! `risk(node) - risk(left) - risk(right)` is credited to i; each tree's
//! per-feature totals are divided by its branch-node count, and the profile
//! is the mean over trees. Trees with no branch nodes contribute zero.

use serde::{Deserialize, Serialize};

use super::tree::{Node, NodeKind};
use super::BaggedTreeModel;

/// Per-feature relevance values for one trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceProfile {
    pub values: Vec<f64>,
    pub feature_names: Vec<String>,
    pub model_id: String,
}

fn accumulate(node: &Node, scores: &mut [f64], branches: &mut usize) {
    if let NodeKind::Branch { feature, left, right, .. } = &node.kind {
        *branches += 1;
        scores[*feature] += node.risk - left.risk - right.risk;
        accumulate(left, scores, branches);
        accumulate(right, scores, branches);
    }
}

pub fn predictor_importance(model: &BaggedTreeModel) -> RelevanceProfile {
    let d = model.n_features;
    let mut values = vec![0.0f64; d];
    for tree in &model.trees {
        let mut scores = vec![0.0f64; d];
        let mut branches = 0usize;
        accumulate(tree, &mut scores, &mut branches);
        if branches > 0 {
            for (v, s) in values.iter_mut().zip(&scores) {
                *v += s / branches as f64;
            }
        }
    }
    let k = model.trees.len() as f64;
    for v in &mut values {
        *v /= k;
    }
    RelevanceProfile {
        values,
        feature_names: model.feature_names.clone(),
        model_id: model.model_id(),
    }
}

/// Pointwise mean of several relevance profiles. Anchor profiles (clean
/// reference, worst-case scenarios) are averaged over model replicas to
/// estimate the systematic relevance rather than one model's draw.
pub fn mean_profile(profiles: &[RelevanceProfile]) -> crate::error::Result<RelevanceProfile> {
    let first = profiles.first().ok_or_else(|| {
        crate::error::Error::EmptyInput("mean of zero relevance profiles".into())
    })?;
    let d = first.values.len();
    let mut values = vec![0.0f64; d];
    for p in profiles {
        if p.values.len() != d {
            return Err(crate::error::Error::BadArgument(
                "profiles of different dimensions".into(),
            ));
        }
        for (v, x) in values.iter_mut().zip(&p.values) {
            *v += x;
        }
    }
    for v in &mut values {
        *v /= profiles.len() as f64;
    }
    Ok(RelevanceProfile {
        values,
        feature_names: first.feature_names.clone(),
        model_id: format!("mean-of-{}-{}", profiles.len(), first.model_id),
    })
}

/// Sum of a tree's leaf risks, for the telescoping identity
/// `sum of split risk decreases = root risk - sum of leaf risks`.
pub fn leaf_risk_sum(node: &Node) -> f64 {
    match &node.kind {
        NodeKind::Leaf { .. } => node.risk,
        NodeKind::Branch { left, right, .. } => leaf_risk_sum(left) + leaf_risk_sum(right),
    }
}
