//! Experiment runner around `efmarket`: TOML configs, named presets, and
//! deterministic CSV/JSON artifact emission.

pub mod config;
pub mod presets;
pub mod runner;

use std::path::Path;

use runner::{run_experiment, RunError, RunResult};

/// Expands a preset into its configs and runs them all under `out_dir`.
pub fn run_preset(
    preset: &presets::Preset,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<Vec<(String, Vec<RunResult>)>, RunError> {
    let mut all = Vec::new();
    for (name, cfg) in &preset.configs {
        let results = run_experiment(cfg, out_dir, seed_override)?;
        all.push((name.clone(), results));
    }
    Ok(all)
}
