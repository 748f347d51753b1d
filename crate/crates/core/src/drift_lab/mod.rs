//! Declarative label-corruption scenarios and desk-scale synthetic data.
//!
//! Corruption touches labels only — never features or row order — and is a
//! pure function of (matrix, scenario, seed).

pub mod split;
pub mod synthetic;

use serde::{Deserialize, Serialize};

pub use split::{split_three_parts, ThreeWaySplit};
pub use synthetic::{generate_synthetic, ClassArchetype, SyntheticConfig};

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;
use crate::types::{ClassId, FeatureMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    /// A uniformly chosen subset of all rows gets labels redrawn uniformly
    /// over all classes. The redraw may reproduce the original label unless
    /// `redraw_excludes_original` is set.
    UniformNoise {
        #[serde(default)]
        redraw_excludes_original: bool,
    },
    /// A subset of `source_class` rows is relabeled `target_class`.
    ClassConfusion {
        source_class: ClassId,
        target_class: ClassId,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftScenario {
    pub id: String,
    #[serde(flatten)]
    pub kind: ScenarioKind,
    /// Fraction of eligible rows corrupted, in [0, 1].
    pub ratio: f64,
    pub seed: u64,
}

impl DriftScenario {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ratio) {
            return Err(Error::BadArgument(format!(
                "scenario {} ratio {} outside [0,1]",
                self.id, self.ratio
            )));
        }
        if let ScenarioKind::ClassConfusion { source_class, target_class } = self.kind {
            if source_class == target_class {
                return Err(Error::BadArgument(format!(
                    "scenario {}: source and target class are both {source_class}",
                    self.id
                )));
            }
        }
        Ok(())
    }

    /// Same corruption at a different ratio.
    pub fn with_ratio(&self, ratio: f64) -> DriftScenario {
        DriftScenario { ratio, ..self.clone() }
    }

    /// Classes whose labels the scenario can move (empty = all).
    pub fn affected_classes(&self) -> Vec<ClassId> {
        match self.kind {
            ScenarioKind::UniformNoise { .. } => Vec::new(),
            ScenarioKind::ClassConfusion { source_class, target_class } => {
                vec![source_class, target_class]
            }
        }
    }
}

/// Apply a corruption scenario to training labels.
pub fn corrupt_labels(m: &FeatureMatrix, s: &DriftScenario) -> Result<FeatureMatrix> {
    s.validate()?;
    m.validate()?;
    m.assert_trainable("corrupt_labels")?;
    let mut out = m.clone();
    let mut rng = seed::rng(s.seed);

    match s.kind {
        ScenarioKind::UniformNoise { redraw_excludes_original } => {
            let n = m.n_rows();
            let k = (s.ratio * n as f64).floor() as usize;
            let subset = rand::seq::index::sample(&mut rng, n, k);
            for i in subset {
                let new = if redraw_excludes_original {
                    let draw = rng.gen_range(0..m.class_count - 1);
                    if draw >= out.labels[i] {
                        draw + 1
                    } else {
                        draw
                    }
                } else {
                    rng.gen_range(0..m.class_count)
                };
                out.labels[i] = new;
            }
        }
        ScenarioKind::ClassConfusion { source_class, target_class } => {
            for class in [source_class, target_class] {
                if class >= m.class_count || !m.labels.iter().any(|&l| l == class) {
                    return Err(Error::BadArgument(format!(
                        "scenario {}: class {class} not present in matrix",
                        s.id
                    )));
                }
            }
            let source_rows: Vec<usize> = (0..m.n_rows())
                .filter(|&i| m.labels[i] == source_class)
                .collect();
            let k = (s.ratio * source_rows.len() as f64).floor() as usize;
            let picks = rand::seq::index::sample(&mut rng, source_rows.len(), k);
            for p in picks {
                out.labels[source_rows[p]] = target_class;
            }
        }
    }
    Ok(out)
}

/// The 95/5 near-clean label mix used for reference models: uniform noise at
/// ratio 0.05.
pub fn clean_label_mix(m: &FeatureMatrix, mix_seed: u64) -> Result<FeatureMatrix> {
    corrupt_labels(
        m,
        &DriftScenario {
            id: "clean_mix".into(),
            kind: ScenarioKind::UniformNoise { redraw_excludes_original: false },
            ratio: 0.05,
            seed: mix_seed,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::RowTag;

    pub(crate) fn labeled_matrix(labels: Vec<ClassId>, class_count: usize) -> FeatureMatrix {
        let n = labels.len();
        FeatureMatrix {
            rows: (0..n).map(|i| vec![i as f64, (i * i) as f64]).collect(),
            labels,
            subject_ids: vec!["s".into(); n],
            feature_names: vec!["f0".into(), "f1".into()],
            bank_version: "t".into(),
            class_count,
            row_tags: vec![RowTag::Train; n],
        }
    }

    fn uniform(ratio: f64, seed: u64) -> DriftScenario {
        DriftScenario {
            id: "S1".into(),
            kind: ScenarioKind::UniformNoise { redraw_excludes_original: false },
            ratio,
            seed,
        }
    }

    fn confusion(source: ClassId, target: ClassId, ratio: f64) -> DriftScenario {
        DriftScenario {
            id: "S2".into(),
            kind: ScenarioKind::ClassConfusion { source_class: source, target_class: target },
            ratio,
            seed: 77,
        }
    }

    #[test]
    fn ratio_zero_is_identity() {
        let m = labeled_matrix((0..70).map(|i| i % 7).collect(), 7);
        assert_eq!(corrupt_labels(&m, &uniform(0.0, 1)).unwrap(), m);
        assert_eq!(corrupt_labels(&m, &confusion(1, 2, 0.0)).unwrap(), m);
    }

    #[test]
    fn full_confusion_leaves_no_source_rows() {
        let m = labeled_matrix((0..70).map(|i| i % 7).collect(), 7);
        let out = corrupt_labels(&m, &confusion(4, 0, 1.0)).unwrap();
        assert!(out.labels.iter().all(|&l| l != 4));
        let target_count = out.labels.iter().filter(|&&l| l == 0).count();
        assert_eq!(target_count, 20);
    }

    #[test]
    fn confusion_changes_exactly_floor_ratio_source_rows() {
        let m = labeled_matrix((0..70).map(|i| i % 7).collect(), 7);
        // 10 source rows, ratio 0.45 -> floor(4.5) = 4 changed.
        let out = corrupt_labels(&m, &confusion(3, 5, 0.45)).unwrap();
        let changed: Vec<usize> = (0..70).filter(|&i| out.labels[i] != m.labels[i]).collect();
        assert_eq!(changed.len(), 4);
        for i in changed {
            assert_eq!(m.labels[i], 3);
            assert_eq!(out.labels[i], 5);
        }
    }

    #[test]
    fn uniform_noise_redraws_exact_count_with_binomial_bound() {
        let m = labeled_matrix((0..700).map(|i| i % 7).collect(), 7);
        let out = corrupt_labels(&m, &uniform(0.5, 9)).unwrap();
        let changed = (0..700).filter(|&i| out.labels[i] != m.labels[i]).count();
        // 350 rows redrawn; expected changes 350*6/7 = 300, sd ~ 6.55.
        // 5 sigma on either side.
        assert!(changed <= 350);
        assert!((267..=333).contains(&changed), "changed = {changed}");
    }

    #[test]
    fn strictly_wrong_mode_always_changes() {
        let m = labeled_matrix((0..70).map(|i| i % 7).collect(), 7);
        let s = DriftScenario {
            id: "S1w".into(),
            kind: ScenarioKind::UniformNoise { redraw_excludes_original: true },
            ratio: 1.0,
            seed: 5,
        };
        let out = corrupt_labels(&m, &s).unwrap();
        assert!(out
            .labels
            .iter()
            .zip(&m.labels)
            .all(|(&a, &b)| a != b && a < 7));
    }

    #[test]
    fn corruption_never_touches_features_or_order() {
        let m = labeled_matrix((0..70).map(|i| i % 7).collect(), 7);
        let out = corrupt_labels(&m, &uniform(0.8, 3)).unwrap();
        assert_eq!(out.rows, m.rows);
        assert_eq!(out.subject_ids, m.subject_ids);
    }

    #[test]
    fn corruption_is_deterministic() {
        let m = labeled_matrix((0..70).map(|i| i % 7).collect(), 7);
        assert_eq!(
            corrupt_labels(&m, &uniform(0.3, 12)).unwrap(),
            corrupt_labels(&m, &uniform(0.3, 12)).unwrap()
        );
    }

    #[test]
    fn missing_class_is_rejected() {
        let m = labeled_matrix(vec![0, 0, 1, 1], 3);
        assert!(matches!(
            corrupt_labels(&m, &confusion(2, 0, 1.0)),
            Err(Error::BadArgument(_))
        ));
    }

    #[test]
    fn clean_mix_floor_rule() {
        // n = 19 -> floor(0.95) = 0 rows redrawn.
        let m = labeled_matrix((0..19).map(|i| i % 2).collect(), 2);
        assert_eq!(clean_label_mix(&m, 8).unwrap(), m);
        // n = 40 -> exactly 2 rows redrawn (possibly to the same label).
        let m2 = labeled_matrix((0..40).map(|i| i % 2).collect(), 2);
        let out = clean_label_mix(&m2, 8).unwrap();
        let changed = (0..40).filter(|&i| out.labels[i] != m2.labels[i]).count();
        assert!(changed <= 2);
        assert_eq!(clean_label_mix(&m2, 8).unwrap(), out);
    }

    #[test]
    fn holdout_rows_refuse_corruption() {
        let mut m = labeled_matrix((0..70).map(|i| i % 7).collect(), 7);
        m.row_tags[0] = RowTag::Holdout;
        assert!(matches!(
            corrupt_labels(&m, &uniform(0.5, 1)),
            Err(Error::HoldoutViolation { .. })
        ));
    }
}
