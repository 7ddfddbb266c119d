use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Two-point problem for a block Hamiltonian: io map and trajectory.
    IoDemo,
    /// S-matrix and unitarity diagnostics over a model's energy grid.
    ScatterSweep,
    /// Rate from T(E) against first order and a time-domain slope.
    RateCheck,
    /// Closed-form two-channel vacuum problem and its decay.
    Vacuum,
    /// Total cross sections from coupling constants.
    CrossSection,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::IoDemo => "io-demo",
            ScenarioKind::ScatterSweep => "scatter-sweep",
            ScenarioKind::RateCheck => "rate-check",
            ScenarioKind::Vacuum => "vacuum",
            ScenarioKind::CrossSection => "cross-section",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub input: PathBuf,
    pub out: PathBuf,
    /// Overrides the model's broadening.
    pub eps: Option<f64>,
    pub format: OutputFormat,
    /// Worker threads for grid sweeps; `None` lets rayon decide.
    pub threads: Option<usize>,
}
