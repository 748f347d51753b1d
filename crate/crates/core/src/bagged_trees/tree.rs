//! Single CART tree: node representation and deterministic builder.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::types::ClassId;

use super::TrainConfig;

/// One tree node. Probability and risk are stored on every node so the
/// impurity bookkeeping can be audited from the serialized structure alone:
/// `probability` is the fraction of the tree's training rows reaching the
/// node and `risk = probability * gini`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub probability: f64,
    pub risk: f64,
    #[serde(flatten)]
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node")]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Branch {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        posteriors: Vec<f64>,
    },
}

impl Node {
    /// Leaf posteriors for a sample; `x[feature] < threshold` routes left.
    pub fn posteriors_for<'a>(&'a self, x: &[f64]) -> &'a [f64] {
        match &self.kind {
            NodeKind::Leaf { posteriors } => posteriors,
            NodeKind::Branch { feature, threshold, left, right } => {
                if x[*feature] < *threshold {
                    left.posteriors_for(x)
                } else {
                    right.posteriors_for(x)
                }
            }
        }
    }

    pub fn branch_count(&self) -> usize {
        match &self.kind {
            NodeKind::Leaf { .. } => 0,
            NodeKind::Branch { left, right, .. } => 1 + left.branch_count() + right.branch_count(),
        }
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        match &self.kind {
            NodeKind::Leaf { .. } => None,
            NodeKind::Branch { feature, left, right, .. } => Some(
                (*feature)
                    .max(left.max_feature_index().unwrap_or(0))
                    .max(right.max_feature_index().unwrap_or(0)),
            ),
        }
    }
}

fn gini_from_counts(counts: &[usize], total: usize) -> f64 {
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

pub(super) struct TreeBuilder<'a> {
    pub rows: &'a [Vec<f64>],
    pub labels: &'a [ClassId],
    pub class_count: usize,
    pub n_features: usize,
    pub mtry: usize,
    pub cfg: &'a TrainConfig,
    /// Size of this tree's (bootstrap) training multiset.
    pub n_total: usize,
    pub rng: ChaCha8Rng,
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl TreeBuilder<'_> {
    pub fn build(&mut self, indices: Vec<usize>, depth: usize) -> Node {
        let mut counts = vec![0usize; self.class_count];
        for &i in &indices {
            counts[self.labels[i]] += 1;
        }
        let n_node = indices.len();
        let gini = gini_from_counts(&counts, n_node);
        let probability = n_node as f64 / self.n_total as f64;
        let risk = probability * gini;

        let depth_exhausted = self.cfg.max_depth.is_some_and(|m| depth >= m);
        let too_small = n_node < 2 * self.cfg.min_leaf || n_node < 2;
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;

        let split = if pure || too_small || depth_exhausted {
            None
        } else {
            self.best_split(&indices)
        };

        match split {
            None => Node {
                probability,
                risk,
                kind: NodeKind::Leaf {
                    posteriors: counts.iter().map(|&c| c as f64 / n_node as f64).collect(),
                },
            },
            Some(best) => {
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                    .into_iter()
                    .partition(|&i| self.rows[i][best.feature] < best.threshold);
                let left = Box::new(self.build(left_idx, depth + 1));
                let right = Box::new(self.build(right_idx, depth + 1));
                Node {
                    probability,
                    risk,
                    kind: NodeKind::Branch {
                        feature: best.feature,
                        threshold: best.threshold,
                        left,
                        right,
                    },
                }
            }
        }
    }

    /// Best split over a fresh random feature subset: maximal risk decrease,
    /// ties broken by lower feature index then lower threshold (candidates
    /// are scanned in that order with a strictly-greater test).
    fn best_split(&mut self, indices: &[usize]) -> Option<BestSplit> {
        let mut candidates =
            rand::seq::index::sample(&mut self.rng, self.n_features, self.mtry).into_vec();
        candidates.sort_unstable();

        let n_node = indices.len();
        let mut best: Option<BestSplit> = None;
        let mut pairs: Vec<(f64, ClassId)> = Vec::with_capacity(n_node);

        for &feature in &candidates {
            pairs.clear();
            pairs.extend(indices.iter().map(|&i| (self.rows[i][feature], self.labels[i])));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

            let mut left_counts = vec![0usize; self.class_count];
            let mut right_counts = vec![0usize; self.class_count];
            for &(_, l) in pairs.iter() {
                right_counts[l] += 1;
            }
            let parent_weighted = n_node as f64 * gini_from_counts(&right_counts, n_node);

            for cut in 1..n_node {
                let (v, l) = pairs[cut - 1];
                left_counts[l] += 1;
                right_counts[l] -= 1;
                let next = pairs[cut].0;
                if next == v {
                    continue;
                }
                if cut < self.cfg.min_leaf || n_node - cut < self.cfg.min_leaf {
                    continue;
                }
                let weighted = cut as f64 * gini_from_counts(&left_counts, cut)
                    + (n_node - cut) as f64 * gini_from_counts(&right_counts, n_node - cut);
                // In units of probability-weighted risk over the whole tree.
                let gain = (parent_weighted - weighted) / self.n_total as f64;
                if gain > best.as_ref().map_or(0.0, |b| b.gain) {
                    let mid = 0.5 * (v + next);
                    let threshold = if mid > v { mid } else { next };
                    best = Some(BestSplit { gain, feature, threshold });
                }
            }
        }
        best
    }
}
