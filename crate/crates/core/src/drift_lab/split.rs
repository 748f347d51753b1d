//! Stratified three-way splitting with holdout tagging.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;
use crate::types::FeatureMatrix;

/// Three class-balanced, disjoint parts. `test` rows are tagged holdout so
/// training and corruption paths reject them.
#[derive(Debug, Clone)]
pub struct ThreeWaySplit {
    pub train_a: FeatureMatrix,
    pub train_b: FeatureMatrix,
    pub test: FeatureMatrix,
    /// Rows dropped per class to equalize part sizes (remainder of n/3).
    pub dropped_per_class: Vec<usize>,
}

impl ThreeWaySplit {
    pub fn dropped_total(&self) -> usize {
        self.dropped_per_class.iter().sum()
    }

    /// Parts 1 + 2 combined: the training pool.
    pub fn train_pool(&self) -> Result<FeatureMatrix> {
        FeatureMatrix::concat(&[&self.train_a, &self.train_b])
    }
}

/// Shuffle each class (seeded) and deal equal per-class counts into three
/// parts; per-class remainders are dropped and reported. Rows inside each
/// part keep their original order.
pub fn split_three_parts(m: &FeatureMatrix, split_seed: u64) -> Result<ThreeWaySplit> {
    m.validate()?;
    let hist = m.class_histogram();
    if let Some((class, &count)) = hist.iter().enumerate().find(|(_, &c)| c < 3) {
        return Err(Error::InsufficientData(format!(
            "class {class} has {count} rows; three-way split needs >= 3"
        )));
    }

    let mut parts: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut dropped_per_class = vec![0usize; m.class_count];

    for class in 0..m.class_count {
        let mut rows: Vec<usize> = (0..m.n_rows()).filter(|&i| m.labels[i] == class).collect();
        rows.shuffle(&mut seed::rng(seed::mix(split_seed, class as u64)));
        let q = rows.len() / 3;
        dropped_per_class[class] = rows.len() - 3 * q;
        for (p, chunk) in rows.chunks(q).take(3).enumerate() {
            parts[p].extend_from_slice(chunk);
        }
    }

    for part in &mut parts {
        part.sort_unstable();
    }

    let train_a = m.select_rows(&parts[0]);
    let train_b = m.select_rows(&parts[1]);
    let mut test = m.select_rows(&parts[2]);
    test.mark_holdout();

    Ok(ThreeWaySplit { train_a, train_b, test, dropped_per_class })
}
