//! Sequential forward feature selection.
//!
//! Greedy: at each step the candidate feature with the best stratified
//! cross-validated accuracy of a small seeded bagged-tree model joins the
//! set. The eval model seed depends only on (seed, step, fold), never on the
//! candidate, so identical candidate columns score identically and ties fall
//! to the lower feature index. Output is prefix-stable in k.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bagged_trees::{train, TrainConfig};
use crate::error::{Error, Result};
use crate::seed;
use crate::stratify;
use crate::types::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SfsConfig {
    /// Number of features to select.
    pub k: usize,
    pub folds: usize,
    pub eval_trees: usize,
    pub eval_max_depth: Option<usize>,
    /// Optional stratified row subsample used for all evaluations.
    pub eval_rows: Option<usize>,
    pub seed: u64,
}

impl Default for SfsConfig {
    fn default() -> Self {
        SfsConfig {
            k: 20,
            folds: 3,
            eval_trees: 8,
            eval_max_depth: Some(8),
            eval_rows: None,
            seed: 0,
        }
    }
}

const SALT_SUBSAMPLE: u64 = 0x5f5;
const SALT_FOLDS: u64 = 0xf01d;
const SALT_EVAL: u64 = 0xe7a1;

/// Greedy forward selection; returns feature indices in selection order.
pub fn sfs_select(m: &FeatureMatrix, cfg: &SfsConfig) -> Result<Vec<usize>> {
    m.validate()?;
    m.assert_trainable("sfs_select")?;
    let d = m.n_features();
    if cfg.k > d {
        return Err(Error::BadArgument(format!(
            "cannot select {} features out of {d}",
            cfg.k
        )));
    }
    if cfg.folds < 2 {
        return Err(Error::BadArgument("need at least 2 folds".into()));
    }
    let classes_present = m.class_histogram().iter().filter(|&&c| c > 0).count();
    if classes_present < 2 {
        return Err(Error::BadArgument(
            "SFS needs at least 2 classes present".into(),
        ));
    }

    let eval = match cfg.eval_rows {
        Some(target) if target < m.n_rows() => {
            let idx = stratify::stratified_subsample(m, target, seed::mix(cfg.seed, SALT_SUBSAMPLE));
            m.select_rows(&idx)
        }
        _ => m.clone(),
    };

    let fold_of = stratify::stratified_folds(
        &eval.labels,
        eval.class_count,
        cfg.folds,
        seed::mix(cfg.seed, SALT_FOLDS),
    );

    let train_cfg = TrainConfig {
        n_trees: cfg.eval_trees,
        max_depth: cfg.eval_max_depth,
        ..TrainConfig::default()
    };

    let mut selected: Vec<usize> = Vec::with_capacity(cfg.k);
    let mut remaining: Vec<usize> = (0..d).collect();

    for step in 0..cfg.k {
        let scores: Vec<f64> = remaining
            .par_iter()
            .map(|&cand| {
                let mut cols = selected.clone();
                cols.push(cand);
                cv_accuracy(&eval, &cols, &fold_of, cfg.folds, &train_cfg, cfg.seed, step)
            })
            .collect::<Result<Vec<f64>>>()?;

        // Strictly-greater scan keeps the lowest index on exact ties.
        let mut best = 0usize;
        for (i, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = i;
            }
        }
        selected.push(remaining.remove(best));
    }
    Ok(selected)
}

fn cv_accuracy(
    m: &FeatureMatrix,
    cols: &[usize],
    fold_of: &[usize],
    folds: usize,
    train_cfg: &TrainConfig,
    sfs_seed: u64,
    step: usize,
) -> Result<f64> {
    let sub = m.select_columns(cols)?;
    let mut correct = 0usize;
    let mut total = 0usize;
    for f in 0..folds {
        let train_idx: Vec<usize> =
            (0..sub.n_rows()).filter(|&i| fold_of[i] != f).collect();
        let val_idx: Vec<usize> = (0..sub.n_rows()).filter(|&i| fold_of[i] == f).collect();
        if train_idx.is_empty() || val_idx.is_empty() {
            continue;
        }
        let model = train(
            &sub.select_rows(&train_idx),
            train_cfg,
            seed::mix_path(sfs_seed, &[SALT_EVAL, step as u64, f as u64]),
        )?;
        for &i in &val_idx {
            if model.predict(&sub.rows[i])?.class == sub.labels[i] {
                correct += 1;
            }
            total += 1;
        }
    }
    Ok(correct as f64 / total.max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ClassId, RowTag};
    use rand::Rng;

    /// Feature 0 separates the classes perfectly; the rest are noise.
    fn separable_plus_noise(d_noise: usize, n: usize, seed: u64) -> FeatureMatrix {
        let mut rng = seed::rng(seed);
        let mut rows = Vec::new();
        let mut labels: Vec<ClassId> = Vec::new();
        for i in 0..n {
            let class = i % 2;
            let mut row = vec![class as f64 * 10.0 + rng.gen_range(-1.0..1.0)];
            for _ in 0..d_noise {
                row.push(rng.gen_range(-1.0..1.0));
            }
            rows.push(row);
            labels.push(class);
        }
        FeatureMatrix {
            rows,
            labels,
            subject_ids: vec!["s".into(); n],
            feature_names: (0..=d_noise).map(|i| format!("f{i}")).collect(),
            bank_version: "t".into(),
            class_count: 2,
            row_tags: vec![RowTag::Train; n],
        }
    }

    fn fast_cfg(k: usize) -> SfsConfig {
        SfsConfig { k, eval_trees: 4, eval_max_depth: Some(4), ..Default::default() }
    }

    #[test]
    fn perfect_feature_is_selected_first() {
        let m = separable_plus_noise(5, 60, 1);
        let sel = sfs_select(&m, &fast_cfg(3)).unwrap();
        assert_eq!(sel[0], 0);
    }

    #[test]
    fn k_equals_d_returns_permutation() {
        let m = separable_plus_noise(4, 40, 2);
        let mut sel = sfs_select(&m, &fast_cfg(5)).unwrap();
        sel.sort_unstable();
        assert_eq!(sel, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn k_too_large_is_rejected() {
        let m = separable_plus_noise(2, 20, 3);
        assert!(matches!(
            sfs_select(&m, &fast_cfg(4)),
            Err(Error::BadArgument(_))
        ));
    }

    #[test]
    fn duplicate_columns_tie_break_to_lower_index() {
        // Feature 1 duplicates feature 0 exactly; features 2..4 each carry
        // independent signal. The duplicate must lose to every informative
        // feature (zero marginal gain) and appear only in the last slot,
        // while the step-0 tie between the identical pair goes to index 0.
        let mut rng = seed::rng(40);
        let n = 120;
        let mut rows = Vec::new();
        let mut labels: Vec<ClassId> = Vec::new();
        for i in 0..n {
            let class = i % 2;
            let c = class as f64;
            let f0 = c * 2.0 + rng.gen_range(-1.1..1.1);
            rows.push(vec![
                f0,
                f0,
                c * 1.6 + rng.gen_range(-1.1..1.1),
                c * 1.4 + rng.gen_range(-1.1..1.1),
                c * 1.2 + rng.gen_range(-1.1..1.1),
            ]);
            labels.push(class);
        }
        let m = FeatureMatrix {
            rows,
            labels,
            subject_ids: vec!["s".into(); n],
            feature_names: (0..5).map(|i| format!("f{i}")).collect(),
            bank_version: "t".into(),
            class_count: 2,
            row_tags: vec![RowTag::Train; n],
        };
        let sel = sfs_select(&m, &fast_cfg(5)).unwrap();
        assert_eq!(sel[0], 0, "lower duplicate index wins the step-0 tie");
        assert!(
            !sel[..4].contains(&1),
            "duplicate must not beat informative features: {sel:?}"
        );
        assert_eq!(sel[4], 1, "duplicate fills the final slot: {sel:?}");
    }

    #[test]
    fn prefix_stability() {
        let m = separable_plus_noise(6, 60, 5);
        let short = sfs_select(&m, &fast_cfg(3)).unwrap();
        let long = sfs_select(&m, &fast_cfg(6)).unwrap();
        assert_eq!(short[..], long[..3]);
    }

    #[test]
    fn single_class_is_rejected() {
        let mut m = separable_plus_noise(2, 20, 6);
        m.labels = vec![0; m.n_rows()];
        assert!(sfs_select(&m, &fast_cfg(2)).is_err());
    }
}
