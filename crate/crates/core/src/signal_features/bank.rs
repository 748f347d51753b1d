//! The feature bank: which derived signals get which feature blocks.
//!
//! The enumeration order is deterministic and versioned: all time-domain
//! blocks first (one per configured signal, 20 features each), then the
//! spectral blocks (3 + band_count features each).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal_features::spectral::{spectral_feature_names, SPECTRAL_BASE_FEATURES};
use crate::signal_features::stats::{TIME_DOMAIN_FEATURE_COUNT, TIME_DOMAIN_FEATURE_NAMES};
use crate::signal_features::{derived_signal_names, DERIVED_SIGNAL_COUNT};

pub const BANK_VERSION: &str = "bank-v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureBank {
    /// Derived-signal indices that get the 20 time-domain features.
    pub time_domain_signals: Vec<usize>,
    /// Derived-signal indices that get the spectral features.
    pub spectral_signals: Vec<usize>,
    /// Number of equal-width spectral bands.
    pub band_count: usize,
    pub version: String,
}

impl Default for FeatureBank {
    /// Every derived signal gets the time-domain block; the two magnitude
    /// signals get the spectral block.
    fn default() -> Self {
        FeatureBank {
            time_domain_signals: (0..DERIVED_SIGNAL_COUNT).collect(),
            spectral_signals: vec![6, 7], // acc_mag, gyro_mag
            band_count: 4,
            version: BANK_VERSION.to_string(),
        }
    }
}

impl FeatureBank {
    pub fn dimension(&self) -> usize {
        self.time_domain_signals.len() * TIME_DOMAIN_FEATURE_COUNT
            + self.spectral_signals.len() * (SPECTRAL_BASE_FEATURES + self.band_count)
    }

    /// Versioned identifier carried by every matrix this bank produces.
    pub fn version_tag(&self) -> String {
        format!("{}-d{}", self.version, self.dimension())
    }

    /// Feature names in enumeration order.
    pub fn feature_names(&self) -> Vec<String> {
        let signals = derived_signal_names();
        let mut names = Vec::with_capacity(self.dimension());
        for &s in &self.time_domain_signals {
            for f in TIME_DOMAIN_FEATURE_NAMES {
                names.push(format!("{}_{}", signals[s], f));
            }
        }
        for &s in &self.spectral_signals {
            for f in spectral_feature_names(self.band_count) {
                names.push(format!("{}_{}", signals[s], f));
            }
        }
        names
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |list: &[usize]| list.iter().all(|&s| s < DERIVED_SIGNAL_COUNT);
        if !in_range(&self.time_domain_signals) || !in_range(&self.spectral_signals) {
            return Err(Error::BadArgument(format!(
                "bank references a signal index >= {DERIVED_SIGNAL_COUNT}"
            )));
        }
        let unique = |list: &[usize]| {
            let mut seen = vec![false; DERIVED_SIGNAL_COUNT];
            list.iter().all(|&s| !std::mem::replace(&mut seen[s], true))
        };
        if !unique(&self.time_domain_signals) || !unique(&self.spectral_signals) {
            return Err(Error::BadArgument("bank signal lists contain duplicates".into()));
        }
        if self.time_domain_signals.is_empty() && self.spectral_signals.is_empty() {
            return Err(Error::BadArgument("bank selects no signals".into()));
        }
        Ok(())
    }
}
