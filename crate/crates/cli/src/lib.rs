//! Experiment runner for `pseudotherm`: JSON configs in, CSV (and optional
//! SVG) artifacts out.

pub mod config;
pub mod error;
pub mod pipelines;
pub mod svg;
pub mod table;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use table::{Cell, Table};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable that overrides the configured output directory.
pub const OUT_ENV: &str = "PSEUDOTHERM_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Spectrum,
    Metric,
    Evolve,
    Work,
    Jarzynski,
    Carnot,
    Fig1Left,
    Fig1Right,
    Fig2Left,
    Fig2Right,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Metric => "metric",
            Command::Evolve => "evolve",
            Command::Work => "work",
            Command::Jarzynski => "jarzynski",
            Command::Carnot => "carnot",
            Command::Fig1Left => "fig1-left",
            Command::Fig1Right => "fig1-right",
            Command::Fig2Left => "fig2-left",
            Command::Fig2Right => "fig2-right",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Takes precedence over the environment and the config.
    pub out: Option<PathBuf>,
    pub svg: bool,
    /// Worker threads for sweeps; `None` uses every core.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub status: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub files: Vec<PathBuf>,
    pub values: BTreeMap<String, serde_json::Value>,
    pub failures: Vec<String>,
}

pub fn output_directory(cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    if let Some(d) = &opts.out {
        return d.clone();
    }
    match std::env::var_os(OUT_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => cfg.output.directory.clone(),
    }
}

pub fn provenance(cfg: &ExperimentConfig) -> String {
    format!("pseudotherm v{VERSION} config={} seed={}", cfg.hash(), cfg.seed)
}

/// Runs `command` and writes its artifacts. Check failures are reported in
/// the summary (status "failed"), not as an error, so the files still exist.
pub fn run(command: Command, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary, CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = opts.workers {
        pool = pool.num_threads(w.max(1));
    }
    let pool = pool.build().map_err(|e| CliError::Invalid { field: "workers".into(), message: e.to_string() })?;
    let output = pool.install(|| match command {
        Command::Spectrum => pipelines::spectrum(cfg),
        Command::Metric => pipelines::metric(cfg),
        Command::Evolve => pipelines::evolve(cfg),
        Command::Work => pipelines::work(cfg),
        Command::Jarzynski => pipelines::jarzynski(cfg),
        Command::Carnot => pipelines::carnot(cfg),
        Command::Fig1Left => pipelines::fig1_left(cfg),
        Command::Fig1Right => pipelines::fig1_right(cfg),
        Command::Fig2Left => pipelines::fig2_left(cfg),
        Command::Fig2Right => pipelines::fig2_right(cfg),
    })?;

    let dir = output_directory(cfg, opts);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io { path: dir.clone(), message: e.to_string() })?;
    let mut files = vec![];
    let header = provenance(cfg);
    for mut fig in output.figures {
        fig.table.comments.insert(0, header.clone());
        let csv = dir.join(format!("{}.csv", fig.name));
        fig.table.write(&csv)?;
        files.push(csv);
        if let (Some(plot), true) = (&fig.plot, opts.svg || cfg.output.emit_svg) {
            let path = dir.join(format!("{}.svg", fig.name));
            write_text(&path, &svg::render(&fig.table, plot))?;
            files.push(path);
        }
    }
    Ok(RunSummary {
        status: if output.failures.is_empty() { "ok" } else { "failed" },
        command: command.name(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        files,
        values: output.values,
        failures: output.failures,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })
}

/// Directory holding the preset configs shipped with the crate.
pub fn preset_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets")
}
