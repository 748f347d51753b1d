//! Structural oracle for predictor importance: an independent, stack-based
//! walk over the serialized trees recomputes every profile bit-exactly, and
//! per-tree risk decreases telescope to root risk minus leaf risk.

use driftsig_core::bagged_trees::{predictor_importance, train, Node, NodeKind, TrainConfig};
use driftsig_core::seed;
use driftsig_core::types::{ClassId, FeatureMatrix, RowTag};
use rand::Rng;

/// Iterative pre-order recomputation (explicit stack, right pushed first so
/// left pops first), accumulating in the same order as any pre-order walk.
fn oracle_importance(trees: &[Node], d: usize) -> Vec<f64> {
    let mut values = vec![0.0f64; d];
    for root in trees {
        let mut scores = vec![0.0f64; d];
        let mut branches = 0usize;
        let mut stack = vec![root];
        while let Some(node) = stack.pop() {
            if let NodeKind::Branch { feature, left, right, .. } = &node.kind {
                branches += 1;
                scores[*feature] += node.risk - left.risk - right.risk;
                stack.push(right);
                stack.push(left);
            }
        }
        if branches > 0 {
            for (v, s) in values.iter_mut().zip(&scores) {
                *v += s / branches as f64;
            }
        }
    }
    for v in &mut values {
        *v /= trees.len() as f64;
    }
    values
}

fn oracle_leaf_risk(root: &Node) -> f64 {
    match &root.kind {
        NodeKind::Leaf { .. } => root.risk,
        NodeKind::Branch { left, right, .. } => oracle_leaf_risk(left) + oracle_leaf_risk(right),
    }
}

fn random_dataset(rng: &mut impl Rng) -> FeatureMatrix {
    let n = rng.gen_range(20..=200);
    let d = rng.gen_range(2..=10);
    let classes = rng.gen_range(2..=5);
    let mut rows = Vec::with_capacity(n);
    let mut labels: Vec<ClassId> = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % classes;
        let informative = rng.gen_range(0.0..1.5);
        rows.push(
            (0..d)
                .map(|j| {
                    if j < 2 {
                        class as f64 * informative + rng.gen_range(-1.0..1.0)
                    } else {
                        rng.gen_range(-1.0..1.0)
                    }
                })
                .collect(),
        );
        labels.push(class);
    }
    FeatureMatrix {
        rows,
        labels,
        subject_ids: vec!["s".into(); n],
        feature_names: (0..d).map(|j| format!("f{j}")).collect(),
        bank_version: "t".into(),
        class_count: classes,
        row_tags: vec![RowTag::Train; n],
    }
}

#[test]
fn importance_matches_oracle_exactly_on_50_random_datasets() {
    let mut rng = seed::rng(0x1337);
    for case in 0..50 {
        let m = random_dataset(&mut rng);
        let cfg = TrainConfig {
            n_trees: rng.gen_range(3..=10),
            max_depth: if rng.gen_bool(0.5) { Some(rng.gen_range(2..=8)) } else { None },
            min_leaf: rng.gen_range(1..=3),
            ..Default::default()
        };
        let model = train(&m, &cfg, 1000 + case).unwrap();
        let profile = predictor_importance(&model);
        let oracle = oracle_importance(&model.trees, model.n_features);
        for (i, (got, exp)) in profile.values.iter().zip(&oracle).enumerate() {
            assert_eq!(
                got.to_bits(),
                exp.to_bits(),
                "case {case}, feature {i}: {got} vs oracle {exp}"
            );
            assert!(*got >= 0.0, "importance must be non-negative");
        }
    }
}

#[test]
fn per_tree_risk_decreases_telescope_to_1e9() {
    let mut rng = seed::rng(0x7e1e);
    for case in 0..50 {
        let m = random_dataset(&mut rng);
        let cfg = TrainConfig { n_trees: 5, ..Default::default() };
        let model = train(&m, &cfg, 2000 + case).unwrap();
        for tree in &model.trees {
            let mut scores = vec![0.0f64; model.n_features];
            let mut stack = vec![tree];
            while let Some(node) = stack.pop() {
                if let NodeKind::Branch { feature, left, right, .. } = &node.kind {
                    scores[*feature] += node.risk - left.risk - right.risk;
                    stack.push(right);
                    stack.push(left);
                }
            }
            let total: f64 = scores.iter().sum();
            let expected = tree.risk - oracle_leaf_risk(tree);
            assert!(
                (total - expected).abs() <= 1e-9,
                "case {case}: telescoping off by {}",
                (total - expected).abs()
            );
        }
    }
}

#[test]
fn hand_traced_two_leaf_average() {
    // One tree: split sends x[0] < 0.5 to a (0.75, 0.25) leaf, else to a
    // (0.2, 0.8) leaf; predictions must equal the traced leaf posteriors.
    let m = FeatureMatrix {
        rows: vec![vec![0.0], vec![0.1], vec![0.2], vec![0.3], vec![1.0], vec![1.1], vec![1.2], vec![1.3], vec![1.4]],
        labels: vec![0, 0, 0, 1, 1, 1, 1, 0, 1],
        subject_ids: vec!["s".into(); 9],
        feature_names: vec!["f0".into()],
        bank_version: "t".into(),
        class_count: 2,
        row_tags: vec![RowTag::Train; 9],
    };
    let cfg = TrainConfig {
        n_trees: 1,
        bootstrap: false,
        max_depth: Some(1),
        ..Default::default()
    };
    let model = train(&m, &cfg, 0).unwrap();
    match &model.trees[0].kind {
        NodeKind::Branch { left, right, .. } => {
            let (l, r) = match (&left.kind, &right.kind) {
                (NodeKind::Leaf { posteriors: l }, NodeKind::Leaf { posteriors: r }) => (l, r),
                _ => panic!("expected depth-1 tree"),
            };
            let pl = model.predict(&[-5.0]).unwrap();
            let pr = model.predict(&[5.0]).unwrap();
            assert_eq!(&pl.posteriors, l);
            assert_eq!(&pr.posteriors, r);
        }
        _ => panic!("expected a branch at the root"),
    }
}
