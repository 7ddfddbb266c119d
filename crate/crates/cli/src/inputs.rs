//! Parameter files for the non-scattering scenarios. Same conventions as
//! model files: a `format` tag, `version: 1`, unknown fields rejected.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use kreindyn::models::coupling::CouplingConstants;
use kreindyn::models::vacuum::VacuumParams;
use kreindyn::scattering::{GridSpec, MatrixSpec};

use crate::CliError;

pub const IO_FORMAT: &str = "kreindyn-io";
pub const VACUUM_FORMAT: &str = "kreindyn-vacuum";
pub const CROSS_SECTION_FORMAT: &str = "kreindyn-cross-section";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureSpec {
    pub n_forward: usize,
    pub n_backward: usize,
}

/// `H(t) = H + sin(omega t) V`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    pub operator: MatrixSpec,
    pub frequency: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    /// `[re, im]` pairs, the forward block at `t_minus`.
    pub forward: Vec<[f64; 2]>,
    /// The backward block at `t_plus`.
    pub backward: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoFile {
    pub format: String,
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub signature: SignatureSpec,
    pub hamiltonian: MatrixSpec,
    #[serde(default)]
    pub drive: Option<DriveSpec>,
    pub t_minus: f64,
    pub t_plus: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub input: InputSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VacuumFile {
    pub format: String,
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub params: VacuumParams,
    /// Points of the trajectory table over `[0, tau]`.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Interval lengths for the expectation-value table; defaults to 200
    /// points covering the decay window.
    #[serde(default)]
    pub tau_grid: Option<GridSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossSectionFile {
    pub format: String,
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub couplings: CouplingConstants,
    /// Centre-of-mass energies in joules.
    #[serde(default)]
    pub e_cm: Option<GridSpec>,
    /// Alternatively `hbar c / E_CM` in metres.
    #[serde(default)]
    pub lengths: Option<GridSpec>,
}

fn default_samples() -> usize {
    101
}

trait Header {
    fn header(&self) -> (&str, u32);
}

impl Header for IoFile {
    fn header(&self) -> (&str, u32) {
        (&self.format, self.version)
    }
}

impl Header for VacuumFile {
    fn header(&self) -> (&str, u32) {
        (&self.format, self.version)
    }
}

impl Header for CrossSectionFile {
    fn header(&self) -> (&str, u32) {
        (&self.format, self.version)
    }
}

fn parse<T: DeserializeOwned + Header>(path: &Path, text: &str, format: &str) -> Result<T, CliError> {
    let file: T = serde_json::from_str(text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let (found, version) = file.header();
    if found != format {
        return Err(CliError::Input(format!(
            "{}: format: expected '{format}', found '{found}'",
            path.display()
        )));
    }
    if version != 1 {
        return Err(CliError::Input(format!(
            "{}: version: unsupported version {version}",
            path.display()
        )));
    }
    Ok(file)
}

pub fn parse_io(path: &Path, text: &str) -> Result<IoFile, CliError> {
    parse(path, text, IO_FORMAT)
}

pub fn parse_vacuum(path: &Path, text: &str) -> Result<VacuumFile, CliError> {
    parse(path, text, VACUUM_FORMAT)
}

pub fn parse_cross_section(path: &Path, text: &str) -> Result<CrossSectionFile, CliError> {
    parse(path, text, CROSS_SECTION_FORMAT)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_file_parses() {
        let text = r#"{
            "format": "kreindyn-vacuum", "version": 1, "name": "v",
            "params": {"couplings": {"zeta_f": 1.0, "zeta_b": 1.0, "xi": 0.5},
                       "e0": 1.0, "e1": 1.0, "tau": 4.0, "theta": 0.7, "psi": 0.0}
        }"#;
        let f = parse_vacuum(Path::new("v.json"), text).unwrap();
        assert_eq!(f.samples, 101);
        assert!(f.tau_grid.is_none());
    }

    #[test]
    fn wrong_tag_rejected() {
        let text = r#"{"format": "kreindyn-io", "version": 1, "name": "c",
                       "couplings": {"zeta_f": 0, "zeta_b": 0, "xi": 1e-10}}"#;
        let err = parse_cross_section(Path::new("c.json"), text).unwrap_err().to_string();
        assert!(err.contains("format"), "{err}");
    }
}
