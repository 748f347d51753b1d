//! Feature-relevance fingerprinting for concept drift in windowed sensor
//! classification.
//!
//! The pipeline: raw tri-axial accelerometer/gyroscope recordings become
//! windowed feature matrices ([`signal_features`]); bagged CART models
//! expose per-feature relevance ([`bagged_trees`]); label-corruption
//! scenarios produce worst-case drifting models ([`drift_lab`]); comparing
//! relevance profiles yields per-scenario drift signatures that both detect
//! a drifting model and name the corruption that caused it
//! ([`fingerprint`]); and a chunked incremental ensemble consumes streaming
//! data while screening each new base model ([`incremental`]).
//!
//! Everything is deterministic given a root seed: all randomness flows
//! through [`seed`], and parallel sections reduce in fixed order.

pub mod bagged_trees;
pub mod drift_lab;
pub mod error;
pub mod fingerprint;
pub mod incremental;
pub mod io;
pub mod seed;
pub mod signal_features;
pub mod stratify;
pub mod types;

pub use bagged_trees::{predictor_importance, train, BaggedTreeModel, RelevanceProfile, TrainConfig};
pub use error::{Error, Result};
pub use fingerprint::{
    calibrate_thresholds, detect_and_explain, relevance_diff, select_signatures, DriftSignature,
    DriftVerdict,
};
pub use types::{ClassId, FeatureMatrix, RowTag, SensorRecording};
