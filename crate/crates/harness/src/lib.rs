//! Experiment driver: data preparation, the fingerprinting protocol,
//! corruption-ratio sweeps, the incremental streaming run and report
//! emission, all deterministic in (config, seed) and independent of the
//! worker-thread count.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod incremental_run;
pub mod pipeline;
pub mod protocol;
pub mod report;
pub mod sweep;

pub use artifacts::{Manifest, OutputLayout};
pub use config::{DataSource, ExperimentConfig, RepairPolicy};
pub use error::{HarnessError, Result};

use driftsig_core::io;

/// Run a closure inside a rayon pool with the configured thread count
/// (0 = rayon default). Results must not depend on the pool size; every
/// parallel section reduces in a fixed order.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if jobs > 0 {
        builder = builder.num_threads(jobs);
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// `synth`: materialize synthetic recordings as ingest-compatible CSVs.
pub fn stage_synth(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    let layout = OutputLayout::new(&cfg.out_dir);
    let recordings = pipeline::load_recordings(cfg)?;
    let dir = layout.raw_dir();
    layout.ensure_dir(&dir)?;
    for rec in &recordings {
        io::write_recording_csv(&dir.join(format!("{}.csv", rec.subject_id)), rec)?;
    }
    let map = io::LabelMap {
        activities: recordings[0].activity_names.clone(),
        sample_rate_hz: Some(recordings[0].sample_rate_hz),
    };
    map.save(&dir.join("label_map.json"))?;
    layout.record_stage(cfg, "raw", "synth", &format!("{} recordings", recordings.len()))?;
    Ok(())
}

/// `ingest`: extract windowed features (and the selected subset) to CSVs.
pub fn stage_ingest(cfg: &ExperimentConfig) -> Result<()> {
    let bundle = with_jobs(cfg.jobs, || pipeline::prepare_data(cfg))??;
    let layout = OutputLayout::new(&cfg.out_dir);
    let dir = layout.features_dir();
    layout.ensure_dir(&dir)?;
    for subject in &bundle.subjects {
        let m = driftsig_core::FeatureMatrix::concat(&[
            &subject.split.train_a,
            &subject.split.train_b,
            &subject.split.test,
        ])?;
        io::write_feature_matrix_csv(&dir.join(format!("{}.csv", subject.subject_id)), &m)?;
    }
    let sidecar = io::BankSidecar {
        bank_version: bundle.bank_version.clone(),
        feature_names: bundle.feature_names.clone(),
        class_count: bundle.activity_names.len(),
        activity_names: bundle.activity_names.clone(),
        selected_features_one_based: bundle
            .selected
            .as_ref()
            .map(|sel| sel.iter().map(|&i| i + 1).collect()),
    };
    io::write_json(&dir.join("bank.json"), &sidecar)?;
    layout.record_stage(
        cfg,
        &bundle.bank_version,
        "ingest",
        &format!("{} subjects, d={}", bundle.subjects.len(), bundle.dimension()),
    )?;
    Ok(())
}

/// `protocol`: clean + worst-case models, signatures, thresholds.
pub fn stage_protocol(cfg: &ExperimentConfig) -> Result<()> {
    let (bundle, outputs) = with_jobs(cfg.jobs, || -> Result<_> {
        let bundle = pipeline::prepare_data(cfg)?;
        let outputs = protocol::run_protocol(cfg, &bundle)?;
        Ok((bundle, outputs))
    })??;
    let layout = OutputLayout::new(&cfg.out_dir);
    protocol::persist_protocol(&layout, cfg, &bundle, &outputs)?;
    Ok(())
}

/// `sweep`: corruption-ratio grid over existing protocol artifacts.
pub fn stage_sweep(cfg: &ExperimentConfig) -> Result<()> {
    let layout = OutputLayout::new(&cfg.out_dir);
    let report = with_jobs(cfg.jobs, || -> Result<_> {
        let bundle = pipeline::prepare_data(cfg)?;
        let loaded = protocol::load_protocol(&layout, cfg, &bundle)?;
        let report = sweep::run_sweep(cfg, &bundle, &loaded)?;
        Ok((bundle, report))
    })??;
    let (bundle, report) = report;
    sweep::write_sweep_csv(&layout.sweep_csv(), &report)?;
    layout.record_stage(
        cfg,
        &bundle.bank_version,
        "sweep",
        &format!("{} rows", report.rows.len()),
    )?;
    Ok(())
}

/// `incremental`: streaming chunked run with screening.
pub fn stage_incremental(cfg: &ExperimentConfig) -> Result<()> {
    let layout = OutputLayout::new(&cfg.out_dir);
    let (bundle, report) = with_jobs(cfg.jobs, || -> Result<_> {
        let bundle = pipeline::prepare_data(cfg)?;
        let loaded = protocol::load_protocol(&layout, cfg, &bundle)?;
        let report = incremental_run::run_incremental(cfg, &bundle, &loaded)?;
        Ok((bundle, report))
    })??;
    incremental_run::persist_incremental(&layout, cfg, &bundle, &report)?;
    Ok(())
}

/// `report`: figure CSVs and summary from the persisted sweep.
pub fn stage_report(cfg: &ExperimentConfig) -> Result<()> {
    let layout = OutputLayout::new(&cfg.out_dir);
    layout.check_manifest(cfg, "sweep")?;
    let bundle = with_jobs(cfg.jobs, || pipeline::prepare_data(cfg))??;
    let scenarios = cfg.resolve_scenarios(&bundle.activity_names)?;
    let shape = sweep::SweepShape {
        scenario_ids: scenarios.iter().map(|s| s.id.clone()).collect(),
        activity_names: bundle.activity_names.clone(),
        grid: cfg.sweep_grid.clone(),
        subject_ids: bundle.subject_ids(),
    };
    let report = sweep::read_sweep_csv(&layout.sweep_csv(), &shape)?;
    report::emit_report(&layout, cfg, &bundle, &report)?;
    Ok(())
}
