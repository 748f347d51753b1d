//! Temporary diagnostics for acceptance tuning. Run with --nocapture.

use driftsig_core::bagged_trees::TrainConfig;
use driftsig_core::drift_lab::SyntheticConfig;
use driftsig_core::fingerprint::SumSign;
use driftsig_harness::config::{InjectionConfig, SelectionSettings, SfsSettings};
use driftsig_harness::pipeline;
use driftsig_harness::protocol::{self, LoadedProtocol};
use driftsig_harness::sweep::run_sweep;
use driftsig_harness::{with_jobs, DataSource, ExperimentConfig};

fn acceptance_config(root_seed: u64) -> ExperimentConfig {
    let mut selection = SelectionSettings::default();
    selection.overrides.insert(
        "S1".into(),
        driftsig_core::fingerprint::OverrideSpec::All(driftsig_core::fingerprint::AllToken::All),
    );
    ExperimentConfig {
        data: DataSource::Synthetic(SyntheticConfig {
            subjects: 5,
            duration_per_class_s: 60.0,
            ..Default::default()
        }),
        sfs: SfsSettings {
            k: Some(20),
            folds: 3,
            eval_trees: 5,
            eval_max_depth: Some(6),
            eval_rows: Some(300),
        },
        train: TrainConfig { n_trees: 150, ..Default::default() },
        selection,
        anchor_replicas: 5,
        seed: root_seed,
        ..Default::default()
    }
}

fn loaded_view(protocols: &[protocol::SubjectProtocol]) -> Vec<LoadedProtocol> {
    protocols
        .iter()
        .map(|p| LoadedProtocol {
            subject_id: p.subject_id.clone(),
            clean_profile: p.clean_profile.clone(),
            signatures: p.selection.signatures.clone(),
        })
        .collect()
}

#[test]
#[ignore]
fn diag_sweep_cells() {
    for root in [101u64, 202] {
        let cfg = acceptance_config(root);
        let (protocols, sweep) = with_jobs(0, || {
            let bundle = pipeline::prepare_data(&cfg)?;
            let protocols = protocol::run_protocol(&cfg, &bundle)?;
            let sweep = run_sweep(&cfg, &bundle, &loaded_view(&protocols))?;
            Ok::<_, driftsig_harness::HarnessError>((protocols, sweep))
        })
        .unwrap()
        .unwrap();

        for p in &protocols {
            println!("== seed {root} subject {}", p.subject_id);
            for s in &p.selection.signatures {
                println!(
                    "   sig {}: features {:?} thr {:.3} pattern {:?}",
                    s.scenario_id,
                    if s.covers_all_features { vec![999] } else { s.feature_indices.clone() },
                    s.threshold,
                    s.expected_sign_pattern
                );
            }
            for d in &p.selection.dropped {
                println!("   DROPPED {} ({})", d.scenario_id, d.reason);
            }
        }
        for row in sweep.rows.iter().filter(|r| r.ratio >= 0.5) {
            let own = row.signature_sums.get(&row.scenario_id);
            let sig = protocols
                .iter()
                .find(|p| p.subject_id == row.subject_id)
                .unwrap()
                .selection
                .signatures
                .iter()
                .find(|s| s.scenario_id == row.scenario_id);
            let (thr, expected) = sig
                .map(|s| (s.threshold, Some(s.expected_sign_pattern[&row.scenario_id])))
                .unwrap_or((f64::NAN, None));
            let own_v = own.copied().unwrap_or(f64::NAN);
            let sign_ok = expected == Some(SumSign::of(own_v));
            let fired = own_v.abs() > thr;
            let exp_str = row.explanation.clone().unwrap_or_else(|| "unknown".into());
            let ok = sign_ok && fired && exp_str == row.scenario_id;
            println!(
                "{} seed {root} {} {} r={:.1} own={own_v:8.3} thr={thr:6.3} sign_ok={sign_ok} fired={fired} exp={exp_str} {}",
                if ok { "ok  " } else { "MISS" },
                row.subject_id,
                row.scenario_id,
                row.ratio,
            );
        }
    }
}

#[test]
#[ignore]
fn diag_incremental() {
    let mut cfg = acceptance_config(777);
    cfg.data = DataSource::Synthetic(SyntheticConfig {
        subjects: 5,
        duration_per_class_s: 150.0,
        ..Default::default()
    });
    cfg.injection =
        Some(InjectionConfig { scenario_id: "S2".into(), at_chunk: 1, ratio: 1.0 });

    let report = with_jobs(0, || {
        let bundle = pipeline::prepare_data(&cfg)?;
        let protocols = protocol::run_protocol(&cfg, &bundle)?;
        driftsig_harness::incremental_run::run_incremental(&cfg, &bundle, &loaded_view(&protocols))
    })
    .unwrap()
    .unwrap();
    for r in &report.records {
        println!(
            "{} chunk {} rows {} injected={} detected={} exp={:?} sums={:?} explained_req={} whole={} repaired={} post={:?}",
            r.subject_id,
            r.chunk_index,
            r.rows,
            r.injected,
            r.drift_detected,
            r.explanation,
            r.signature_sums,
            r.labels_requested_explained,
            r.labels_requested_whole_chunk,
            r.repaired,
            r.post_repair_detected,
        );
    }
}
