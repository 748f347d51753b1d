//! Bootstrap-aggregated CART classification with impurity-based feature
//! relevance.
//!
//! Each tree is fit on an n-of-n bootstrap resample with a fresh RNG
//! substream derived from (seed, tree index), so training is reproducible
//! and independent of thread scheduling. Splits maximize Gini risk decrease
//! over a random feature subset; thresholds sit midway between adjacent
//! distinct values. No pruning, no surrogates.

pub mod importance;
mod tree;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use importance::{mean_profile, predictor_importance, RelevanceProfile};
pub use tree::{Node, NodeKind};

use crate::error::{Error, Result};
use crate::seed;
use crate::types::{ClassId, FeatureMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub n_trees: usize,
    /// Features tried per split; `None` means ceil(sqrt(d)).
    pub features_per_split: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    /// Test hook: `false` trains every tree on the full sample, making a
    /// one-tree forest a deterministic CART.
    pub bootstrap: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_trees: 50,
            features_per_split: None,
            min_leaf: 1,
            max_depth: None,
            bootstrap: true,
        }
    }
}

impl TrainConfig {
    pub fn mtry(&self, d: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
            .clamp(1, d)
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedTreeModel {
    pub format_version: u32,
    pub trees: Vec<Node>,
    pub n_features: usize,
    pub class_count: usize,
    pub feature_names: Vec<String>,
    pub seed: u64,
    pub config: TrainConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: ClassId,
    pub posteriors: Vec<f64>,
}

/// Argmax with ties to the lowest class id.
pub fn argmax_class(posteriors: &[f64]) -> ClassId {
    let mut best = 0;
    for (c, &p) in posteriors.iter().enumerate().skip(1) {
        if p > posteriors[best] {
            best = c;
        }
    }
    best
}

impl BaggedTreeModel {
    pub fn model_id(&self) -> String {
        format!("bagged-{:016x}", self.seed)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.n_features {
            return Err(Error::BadArgument(format!(
                "expected {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        let mut posteriors = vec![0.0f64; self.class_count];
        for t in &self.trees {
            for (p, &leaf_p) in posteriors.iter_mut().zip(t.posteriors_for(x)) {
                *p += leaf_p;
            }
        }
        let k = self.trees.len() as f64;
        for p in &mut posteriors {
            *p /= k;
        }
        Ok(Prediction { class: argmax_class(&posteriors), posteriors })
    }

    /// Fraction of rows whose predicted class equals `labels`.
    pub fn accuracy(&self, m: &FeatureMatrix, labels: &[ClassId]) -> Result<f64> {
        let mut correct = 0usize;
        for (row, &l) in m.rows.iter().zip(labels) {
            if self.predict(row)?.class == l {
                correct += 1;
            }
        }
        Ok(correct as f64 / m.n_rows() as f64)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<BaggedTreeModel> {
        serde_json::from_str(s)
    }
}

/// Train a bagged CART ensemble. Deterministic given (data, cfg, seed).
pub fn train(m: &FeatureMatrix, cfg: &TrainConfig, train_seed: u64) -> Result<BaggedTreeModel> {
    if m.n_rows() == 0 {
        return Err(Error::EmptyInput("cannot train on an empty matrix".into()));
    }
    m.validate()?;
    m.assert_trainable("train")?;
    if cfg.n_trees == 0 {
        return Err(Error::BadArgument("n_trees must be >= 1".into()));
    }
    if cfg.min_leaf == 0 {
        return Err(Error::BadArgument("min_leaf must be >= 1".into()));
    }

    let n = m.n_rows();
    let d = m.n_features();
    let mtry = cfg.mtry(d);

    let trees: Vec<Node> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed::mix(train_seed, t as u64));
            let indices: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut builder = tree::TreeBuilder {
                rows: &m.rows,
                labels: &m.labels,
                class_count: m.class_count,
                n_features: d,
                mtry,
                cfg,
                n_total: indices.len(),
                rng,
            };
            builder.build(indices, 0)
        })
        .collect();

    Ok(BaggedTreeModel {
        format_version: MODEL_FORMAT_VERSION,
        trees,
        n_features: d,
        class_count: m.class_count,
        feature_names: m.feature_names.clone(),
        seed: train_seed,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::RowTag;

    pub(crate) fn matrix(rows: Vec<Vec<f64>>, labels: Vec<ClassId>, class_count: usize) -> FeatureMatrix {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.len());
        FeatureMatrix {
            rows,
            labels,
            subject_ids: vec!["s".into(); n],
            feature_names: (0..d).map(|i| format!("f{i}")).collect(),
            bank_version: "t".into(),
            class_count,
            row_tags: vec![RowTag::Train; n],
        }
    }

    /// Linearly separable two-feature fixture, 20 points.
    pub(crate) fn separable() -> FeatureMatrix {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            rows.push(vec![i as f64 * 0.1, 1.0 + i as f64 * 0.05]);
            labels.push(0);
            rows.push(vec![2.0 + i as f64 * 0.1, -1.0 - i as f64 * 0.05]);
            labels.push(1);
        }
        matrix(rows, labels, 2)
    }

    #[test]
    fn single_class_trains_to_single_leaves() {
        let m = matrix(vec![vec![0.0], vec![1.0], vec![2.0]], vec![1, 1, 1], 3);
        let model = train(&m, &TrainConfig::default(), 7).unwrap();
        for t in &model.trees {
            assert_eq!(t.branch_count(), 0);
            match &t.kind {
                NodeKind::Leaf { posteriors } => assert_eq!(posteriors, &vec![0.0, 1.0, 0.0]),
                _ => panic!(),
            }
        }
    }

    #[test]
    fn separable_fixture_reaches_training_accuracy_one() {
        let m = separable();
        let model = train(&m, &TrainConfig { n_trees: 20, ..Default::default() }, 3).unwrap();
        assert_eq!(model.accuracy(&m, &m.labels).unwrap(), 1.0);
    }

    #[test]
    fn training_is_bit_deterministic() {
        let m = separable();
        let cfg = TrainConfig { n_trees: 10, ..Default::default() };
        let a = train(&m, &cfg, 42).unwrap();
        let b = train(&m, &cfg, 42).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = train(&m, &cfg, 43).unwrap();
        assert_ne!(a.to_json().unwrap(), c.to_json().unwrap());
    }

    #[test]
    fn predict_checks_dimension() {
        let m = separable();
        let model = train(&m, &TrainConfig::default(), 1).unwrap();
        assert!(matches!(model.predict(&[0.0]), Err(Error::BadArgument(_))));
    }

    #[test]
    fn predict_tie_goes_to_lower_class() {
        // Two single-leaf trees voting for classes 0 and 1 with certainty.
        let leaf = |class: usize| Node {
            probability: 1.0,
            risk: 0.0,
            kind: NodeKind::Leaf {
                posteriors: (0..2).map(|c| if c == class { 1.0 } else { 0.0 }).collect(),
            },
        };
        let model = BaggedTreeModel {
            format_version: MODEL_FORMAT_VERSION,
            trees: vec![leaf(1), leaf(0)],
            n_features: 1,
            class_count: 2,
            feature_names: vec!["f0".into()],
            seed: 0,
            config: TrainConfig::default(),
        };
        let p = model.predict(&[0.0]).unwrap();
        assert_eq!(p.posteriors, vec![0.5, 0.5]);
        assert_eq!(p.class, 0);
    }

    #[test]
    fn posteriors_sum_to_one() {
        let m = separable();
        let model = train(&m, &TrainConfig { n_trees: 7, ..Default::default() }, 9).unwrap();
        for row in &m.rows {
            let p = model.predict(row).unwrap();
            assert!((p.posteriors.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn holdout_rows_are_refused() {
        let mut m = separable();
        m.row_tags[0] = RowTag::Holdout;
        assert!(matches!(
            train(&m, &TrainConfig::default(), 0),
            Err(Error::HoldoutViolation { .. })
        ));
    }

    #[test]
    fn nan_features_are_bad_data() {
        let mut m = separable();
        m.rows[3][1] = f64::NAN;
        assert!(matches!(train(&m, &TrainConfig::default(), 0), Err(Error::BadData(_))));
    }
}
