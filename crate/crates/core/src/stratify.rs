//! Seeded, class-stratified row partitioning helpers.

use rand::seq::SliceRandom;

use crate::seed;
use crate::types::{ClassId, FeatureMatrix};

/// Per-class row indices, shuffled deterministically by `seed`.
fn shuffled_by_class(labels: &[ClassId], class_count: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); class_count];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    for (c, list) in by_class.iter_mut().enumerate() {
        list.shuffle(&mut seed::rng(seed::mix(seed, c as u64)));
    }
    by_class
}

/// Assign every row to one of `k` folds, stratified by class.
/// Returns per-row fold ids.
pub fn stratified_folds(labels: &[ClassId], class_count: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut fold_of = vec![0usize; labels.len()];
    for list in shuffled_by_class(labels, class_count, seed) {
        for (j, &row) in list.iter().enumerate() {
            fold_of[row] = j % k;
        }
    }
    fold_of
}

/// Pick about `target` rows, proportionally per class (largest remainder),
/// at least one row per present class when possible. Indices come back sorted.
pub fn stratified_subsample(m: &FeatureMatrix, target: usize, seed: u64) -> Vec<usize> {
    let n = m.n_rows();
    if target >= n {
        return (0..n).collect();
    }
    let by_class = shuffled_by_class(&m.labels, m.class_count, seed);
    let mut take: Vec<usize> = Vec::new();
    let mut quotas: Vec<(usize, usize, f64)> = Vec::new(); // (class, floor, remainder)
    for (c, list) in by_class.iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        let exact = target as f64 * list.len() as f64 / n as f64;
        let fl = (exact.floor() as usize).min(list.len());
        quotas.push((c, fl, exact - fl as f64));
    }
    let assigned: usize = quotas.iter().map(|q| q.1).sum();
    // Hand out the remaining slots by largest remainder, class id as tiebreak.
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        quotas[b]
            .2
            .partial_cmp(&quotas[a].2)
            .unwrap()
            .then(quotas[a].0.cmp(&quotas[b].0))
    });
    let mut extra = target.saturating_sub(assigned);
    for &qi in &order {
        if extra == 0 {
            break;
        }
        let (c, fl, _) = quotas[qi];
        if fl < by_class[c].len() {
            quotas[qi].1 += 1;
            extra -= 1;
        }
    }
    for &(c, count, _) in &quotas {
        take.extend_from_slice(&by_class[c][..count]);
    }
    take.sort_unstable();
    take
}

/// Deal rows into `k` chunks, stratified per class. Chunk row indices are
/// sorted so chunks preserve the original row order.
pub fn stratified_chunks(m: &FeatureMatrix, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut chunks: Vec<Vec<usize>> = vec![Vec::new(); k];
    for list in shuffled_by_class(&m.labels, m.class_count, seed) {
        for (j, &row) in list.iter().enumerate() {
            chunks[j % k].push(row);
        }
    }
    for chunk in &mut chunks {
        chunk.sort_unstable();
    }
    chunks
}
