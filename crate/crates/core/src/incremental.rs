//! Chunked incremental ensemble: a user-independent base model personalized
//! by appending one bagged-tree model per incoming data chunk.
//!
//! Chunk labels come from the ensemble's own predictions; under the
//! posterior-gate policy, rows whose top posterior falls below a threshold
//! are referred to an injected labeler instead. New models join with a
//! log-odds weight derived from their error on the chunk labels (uniform
//! weighting available by config). Mutation must be externally serialized;
//! prediction on a snapshot is freely concurrent.

use serde::{Deserialize, Serialize};

use crate::bagged_trees::{argmax_class, train, BaggedTreeModel, Prediction, TrainConfig};
use crate::error::{Error, Result};
use crate::types::{ClassId, FeatureMatrix};

/// Supplies trusted labels for queried rows (in experiments: ground truth).
pub trait Labeler {
    fn label_for(&self, row: usize) -> ClassId;
}

/// Labeler backed by a ground-truth label vector.
pub struct GroundTruthLabeler<'a> {
    pub labels: &'a [ClassId],
}

impl Labeler for GroundTruthLabeler<'_> {
    fn label_for(&self, row: usize) -> ClassId {
        self.labels[row]
    }
}

pub enum LabelPolicy<'a> {
    /// Predicted labels are trusted as-is.
    PureSelfTraining,
    /// Rows with max posterior < threshold are labeled by `labeler`.
    PosteriorGate {
        threshold: f64,
        labeler: &'a dyn Labeler,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightingRule {
    /// ln((1 - e) / max(e, 1e-6)), clamped at 0.
    #[default]
    LogOdds,
    Uniform,
}

const ERROR_FLOOR: f64 = 1e-6;

impl WeightingRule {
    pub fn weight_for_error(&self, error_rate: f64) -> f64 {
        match self {
            WeightingRule::Uniform => 1.0,
            WeightingRule::LogOdds => {
                ((1.0 - error_rate) / error_rate.max(ERROR_FLOOR)).ln().max(0.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkProvenance {
    pub chunk_index: usize,
    pub rows: usize,
    /// Rows labeled by the injected labeler.
    pub queried: usize,
    /// Rows labeled by the ensemble's own predictions.
    pub self_labeled: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub base_models: Vec<BaggedTreeModel>,
    pub weights: Vec<f64>,
    /// Provenance of appended chunk models (the initial model has none).
    pub chunk_log: Vec<ChunkProvenance>,
}

/// Labeling outcome for one chunk, before any model is trained.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkLabels {
    pub predicted_labels: Vec<ClassId>,
    pub posteriors: Vec<Vec<f64>>,
    pub queried_mask: Vec<bool>,
    /// Labels to train on: predictions, overridden by the labeler where queried.
    pub training_labels: Vec<ClassId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkResult {
    pub predicted_labels: Vec<ClassId>,
    pub posteriors: Vec<Vec<f64>>,
    pub queried_mask: Vec<bool>,
    pub training_labels: Vec<ClassId>,
    pub new_model_id: String,
    /// Error of the new model on the chunk's training labels.
    pub error_rate: f64,
    pub weight: f64,
}

/// Start an ensemble from a trained user-independent model, weight 1.
pub fn init(user_independent: BaggedTreeModel) -> EnsembleModel {
    EnsembleModel {
        base_models: vec![user_independent],
        weights: vec![1.0],
        chunk_log: Vec::new(),
    }
}

/// Weight-normalized mean of base-model posteriors; argmax class with ties
/// to the lowest id. Zero total weight falls back to the unweighted mean.
pub fn ensemble_predict(e: &EnsembleModel, x: &[f64]) -> Result<Prediction> {
    let first = e
        .base_models
        .first()
        .ok_or_else(|| Error::EmptyInput("ensemble has no base models".into()))?;
    if x.len() != first.n_features {
        return Err(Error::BadArgument(format!(
            "expected {} features, got {}",
            first.n_features,
            x.len()
        )));
    }
    let total: f64 = e.weights.iter().sum();
    let uniform = total <= 0.0;
    let denom = if uniform { e.base_models.len() as f64 } else { total };

    let mut posteriors = vec![0.0f64; first.class_count];
    for (model, &w) in e.base_models.iter().zip(&e.weights) {
        let p = model.predict(x)?;
        let scale = if uniform { 1.0 } else { w };
        for (acc, v) in posteriors.iter_mut().zip(&p.posteriors) {
            *acc += scale * v;
        }
    }
    for p in &mut posteriors {
        *p /= denom;
    }
    Ok(Prediction { class: argmax_class(&posteriors), posteriors })
}

/// Label a chunk with the ensemble, querying the labeler where the policy
/// says the prediction is unreliable. Does not mutate the ensemble.
pub fn label_chunk(
    e: &EnsembleModel,
    chunk: &FeatureMatrix,
    policy: &LabelPolicy,
) -> Result<ChunkLabels> {
    if chunk.n_rows() == 0 {
        return Err(Error::EmptyInput("chunk has no rows".into()));
    }
    let n = chunk.n_rows();
    let mut predicted = Vec::with_capacity(n);
    let mut posteriors = Vec::with_capacity(n);
    let mut queried = vec![false; n];
    let mut training = Vec::with_capacity(n);

    for (i, row) in chunk.rows.iter().enumerate() {
        let p = ensemble_predict(e, row)?;
        let label = match policy {
            LabelPolicy::PureSelfTraining => p.class,
            LabelPolicy::PosteriorGate { threshold, labeler } => {
                let top = p.posteriors.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if top < *threshold {
                    queried[i] = true;
                    labeler.label_for(i)
                } else {
                    p.class
                }
            }
        };
        predicted.push(p.class);
        posteriors.push(p.posteriors);
        training.push(label);
    }
    Ok(ChunkLabels {
        predicted_labels: predicted,
        posteriors,
        queried_mask: queried,
        training_labels: training,
    })
}

/// Append an already-trained chunk model, weighting it by its error on the
/// chunk's training labels.
pub fn admit_model(
    e: &mut EnsembleModel,
    model: BaggedTreeModel,
    chunk: &FeatureMatrix,
    training_labels: &[ClassId],
    weighting: WeightingRule,
    chunk_index: usize,
    queried: usize,
) -> Result<(String, f64, f64)> {
    let error_rate = 1.0 - model.accuracy(chunk, training_labels)?;
    let weight = weighting.weight_for_error(error_rate);
    let id = model.model_id();
    e.base_models.push(model);
    e.weights.push(weight);
    e.chunk_log.push(ChunkProvenance {
        chunk_index,
        rows: chunk.n_rows(),
        queried,
        self_labeled: chunk.n_rows() - queried,
    });
    Ok((id, error_rate, weight))
}

/// Full chunk step: label, train a new base model on those labels, append.
pub fn process_chunk(
    e: &mut EnsembleModel,
    chunk: &FeatureMatrix,
    policy: &LabelPolicy,
    train_cfg: &TrainConfig,
    weighting: WeightingRule,
    train_seed: u64,
) -> Result<ChunkResult> {
    let first = e
        .base_models
        .first()
        .ok_or_else(|| Error::EmptyInput("ensemble has no base models".into()))?;
    if chunk.n_features() != first.n_features {
        return Err(Error::BadArgument(format!(
            "chunk has {} features, ensemble expects {}",
            chunk.n_features(),
            first.n_features
        )));
    }
    let labels = label_chunk(e, chunk, policy)?;
    let mut training_matrix = chunk.clone();
    training_matrix.labels = labels.training_labels.clone();
    let model = train(&training_matrix, train_cfg, train_seed)?;
    let queried = labels.queried_mask.iter().filter(|&&q| q).count();
    let chunk_index = e.chunk_log.len();
    let (new_model_id, error_rate, weight) = admit_model(
        e,
        model,
        chunk,
        &labels.training_labels,
        weighting,
        chunk_index,
        queried,
    )?;
    Ok(ChunkResult {
        predicted_labels: labels.predicted_labels,
        posteriors: labels.posteriors,
        queried_mask: labels.queried_mask,
        training_labels: labels.training_labels,
        new_model_id,
        error_rate,
        weight,
    })
}
