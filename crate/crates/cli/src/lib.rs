//! Experiment runner for dual-averaging regret studies.

pub mod config;
pub mod plot;
pub mod report;

use std::path::{Path, PathBuf};

use anyhow::Context;
use rayon::prelude::*;

pub use config::{ConfigError, Experiment};

/// Runs every experiment of a config file and writes their outputs.
///
/// Returns the directories written. Nothing is written unless the whole
/// config validates.
pub fn run_config(path: &Path, out: Option<&Path>, workers: usize) -> anyhow::Result<Vec<PathBuf>> {
    let experiments = config::load(path)?;
    let sweep = experiments.len() > 1 || experiments.iter().any(|e| !e.label.is_empty());
    let jobs: Vec<(Experiment, PathBuf)> = experiments
        .into_iter()
        .map(|e| {
            let root = out.map(Path::to_path_buf).unwrap_or_else(|| e.output.clone());
            let dir = if sweep { root.join(e.run_id()) } else { root };
            (e, dir)
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .context("building worker pool")?;
    let results: Vec<anyhow::Result<PathBuf>> = pool.install(|| {
        jobs.par_iter()
            .map(|(exp, dir)| {
                let done = report::execute(exp).with_context(|| format!("run {}", exp.run_id()))?;
                report::write_outputs(exp, &done, dir)?;
                Ok(dir.clone())
            })
            .collect()
    });
    results.into_iter().collect()
}

/// Checks a config without running it; returns one line per run.
pub fn validate_config(path: &Path) -> anyhow::Result<Vec<String>> {
    let experiments = config::load(path)?;
    Ok(experiments
        .iter()
        .map(|e| {
            format!(
                "{}: {} cells, {}, {}, horizon {}",
                e.run_id(),
                e.domain.len(),
                e.potential.name(),
                e.losses.family.name(),
                e.horizon
            )
        })
        .collect())
}
