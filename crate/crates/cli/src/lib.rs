//! Scenario runner behind the `kreindyn` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod inputs;
pub mod output;
pub mod scenarios;
pub mod validate;

use std::fs;
use std::path::Path;
use std::time::Instant;

use sha2::{Digest, Sha256};

pub use config::{OutputFormat, ScenarioConfig, ScenarioKind};
pub use output::{Check, Manifest, Table};
pub use validate::{validate_model, Report};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("input: {0}")]
    Input(String),
    #[error("{name} error: {0}", name = .0.name())]
    Numerical(kreindyn::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("{} check(s) failed: {}", .0.len(), .0.join(", "))]
    ChecksFailed(Vec<String>),
}

impl From<kreindyn::Error> for CliError {
    fn from(e: kreindyn::Error) -> Self {
        match e {
            kreindyn::Error::Model(msg) => CliError::Input(msg),
            other => CliError::Numerical(other),
        }
    }
}

impl CliError {
    /// 2 for bad invocations or inputs, 1 for failed runs.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => 2,
            _ => 1,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs one scenario, writes its tables and `manifest.json` into `cfg.out`,
/// and fails with [`CliError::ChecksFailed`] if any check fails (the files
/// are written either way).
pub fn run(cfg: &ScenarioConfig) -> Result<Manifest, CliError> {
    let start = Instant::now();
    if let Some(e) = cfg.eps {
        if !(e > 0.0) || !e.is_finite() {
            return Err(CliError::Usage(format!("--eps must be positive, got {e}")));
        }
    }
    if cfg.threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let bytes = fs::read(&cfg.input)
        .map_err(|e| CliError::Input(format!("{}: {e}", cfg.input.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Input(format!("{}: not UTF-8", cfg.input.display())))?;

    faer::set_global_parallelism(faer::Par::Seq);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let outcome = pool.install(|| scenarios::dispatch(cfg.kind, &cfg.input, &text, cfg.eps))?;

    fs::create_dir_all(&cfg.out)?;
    let mut outputs = Vec::new();
    for table in &outcome.tables {
        outputs.push(table.write(&cfg.out, cfg.format)?);
    }
    let pass = outcome.checks.iter().all(|c| c.pass);
    let manifest = Manifest {
        tool: "kreindyn".into(),
        version: VERSION.into(),
        library_version: kreindyn::VERSION.into(),
        scenario: cfg.kind.name().into(),
        input: cfg.input.display().to_string(),
        input_sha256: sha256_hex(&bytes),
        format: cfg.format.name().into(),
        threads: pool.current_num_threads(),
        eps: outcome.eps,
        tolerances: outcome.tolerances,
        summary: outcome.summary,
        checks: outcome.checks,
        outputs,
        pass,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    write_manifest(&cfg.out, &manifest)?;
    if !pass {
        let failed = manifest
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{} ({:.3e} > {:.3e})", c.name, c.value, c.limit))
            .collect();
        return Err(CliError::ChecksFailed(failed));
    }
    Ok(manifest)
}

fn write_manifest(dir: &Path, m: &Manifest) -> std::io::Result<()> {
    let mut s = serde_json::to_string_pretty(m).expect("manifest serializes");
    s.push('\n');
    fs::write(dir.join("manifest.json"), s)
}
