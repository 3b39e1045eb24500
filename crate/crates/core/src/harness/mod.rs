//! Batch experiments: configuration, persisted records and profiles.

pub mod config;
pub mod profile;
pub mod record;

use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::problems::{base_function, problem};
use crate::rng::RngState;
use crate::xrego::run_xrego;

pub use config::{preset, AlgorithmConfig, AlgorithmEntry, ExperimentConfig, ProblemFilter, PRESETS, SCHEMA_VERSION};
pub use profile::{performance_profile, ProfileCurve, ProfileReport};
pub use record::{evals_to_target, load_records, CellKey, CellRecord, CellStatus, RecordWriter, TracePoint};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    /// Records for every cell of the config, sorted by key.
    pub records: Vec<CellRecord>,
    pub computed: usize,
    pub skipped: usize,
    pub failed: usize,
}

/// Problem instance for seed index `s`; shared by all algorithms.
pub fn problem_rng(base_seed: u64, seed_index: u64) -> RngState {
    RngState::from_seed(base_seed).labeled("problem").substream(seed_index)
}

/// Algorithm randomness for one cell.
pub fn run_rng(base_seed: u64, seed_index: u64, problem_slug: &str) -> RngState {
    RngState::from_seed(base_seed).labeled("run").substream(seed_index).labeled(problem_slug)
}

/// Runs one cell. Errors become failed records rather than aborting.
pub fn run_cell(cfg: &ExperimentConfig, algo: &AlgorithmConfig, key: CellKey) -> CellRecord {
    let base = match base_function(&key.problem) {
        Ok(b) => b,
        Err(e) => return CellRecord::failed(key.clone(), &key.problem, None, None, e.to_string()),
    };
    let (name, de, f_star) = (base.name.clone(), Some(base.dim()), Some(base.f_star));
    let outcome = problem(&key.problem, key.dim, &problem_rng(cfg.seed, key.seed)).and_then(|obj| {
        let rng = run_rng(cfg.seed, key.seed, &key.problem);
        run_xrego(&obj, &algo.strategy, &algo.schedule, &algo.solver, &cfg.stop_for(algo), &rng)
            .map(|res| (obj.meta.f_star, res))
    });
    match outcome {
        Ok((fs, res)) => CellRecord::from_result(key, &name, de, fs.or(f_star), cfg.eps, &res),
        Err(e) => {
            log::warn!("cell {}@{} {} seed {} failed: {e}", key.problem, key.dim, key.algorithm, key.seed);
            CellRecord::failed(key, &name, de, f_star, e.to_string())
        }
    }
}

/// Every cell of the config, in deterministic order. Problems whose
/// effective dimension exceeds `D` are skipped.
pub fn cells(cfg: &ExperimentConfig) -> Result<Vec<(AlgorithmConfig, CellKey)>> {
    let algos = cfg.resolved_algorithms()?;
    let mut out = Vec::new();
    for &dim in &cfg.problems.dims {
        for slug in cfg.problem_slugs() {
            let de = base_function(&slug)?.dim();
            if de > dim {
                log::warn!("skipping {slug} at D = {dim}: effective dimension {de} exceeds D");
                continue;
            }
            for a in &algos {
                for s in 0..cfg.seeds {
                    out.push((a.clone(), CellKey { problem: slug.clone(), dim, algorithm: a.id.clone(), seed: s }));
                }
            }
        }
    }
    Ok(out)
}

/// Runs all missing cells on `jobs` threads, appending each record to
/// `output` as it completes. Existing records are kept and not recomputed.
pub fn run_experiment(cfg: &ExperimentConfig, output: &Path, jobs: usize) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let existing = load_records(output)?;
    let done = record::existing_keys(&existing);
    let all = cells(cfg)?;
    let todo: Vec<_> = all.iter().filter(|(_, k)| !done.contains(k)).collect();
    let skipped = all.len() - todo.len();
    log::info!("{} cells, {} already recorded", all.len(), skipped);

    let writer = Mutex::new(RecordWriter::open(output)?);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    let fresh: Vec<CellRecord> = pool.install(|| {
        todo.par_iter()
            .map(|(algo, key)| {
                let rec = run_cell(cfg, algo, key.clone());
                writer.lock().expect("writer poisoned").write(&rec)?;
                Ok(rec)
            })
            .collect::<Result<_>>()
    })?;

    let failed = fresh.iter().filter(|r| r.status == CellStatus::Failed).count();
    let computed = fresh.len();
    let wanted: std::collections::BTreeSet<&CellKey> = all.iter().map(|(_, k)| k).collect();
    let mut records: Vec<CellRecord> = existing.into_iter().filter(|r| wanted.contains(&r.key)).chain(fresh).collect();
    records.sort_by(|a, b| a.key.cmp(&b.key));
    records.dedup_by(|a, b| a.key == b.key);
    Ok(ExperimentSummary { records, computed, skipped, failed })
}
