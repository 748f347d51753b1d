//! Relevance fingerprinting: diff profiles, drift signatures, threshold
//! calibration and detection with explanation.

pub mod calibrate;
pub mod detect;
pub mod diff;
pub mod signature;

pub use calibrate::{
    calibrate_thresholds, clean_replica_profile, replica_seeds, CalibrationConfig,
    CalibrationReport, THRESHOLD_FLOOR,
};
pub use detect::{detect_and_explain, DetectConfig, DriftVerdict, UNKNOWN_EXPLANATION};
pub use diff::{relevance_diff, DiffProfile, DEFAULT_EPS_FACTOR};
pub use signature::{
    select_signatures, AllToken, DriftSignature, DroppedScenario, OverrideSpec,
    SignatureSelection, SignatureSelectionConfig, SumSign, DEFAULT_K_PER_SCENARIO,
};
