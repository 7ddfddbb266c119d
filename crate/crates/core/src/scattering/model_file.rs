//! JSON model files for scattering runs.
//!
//! ```json
//! {
//!   "format": "kreindyn-model",
//!   "version": 1,
//!   "name": "one_forward_channel",
//!   "signature": {"n_forward": 2, "n_backward": 0},
//!   "h0": {"diagonal": [0.0, 0.5]},
//!   "h1": {"entries": [[0, 1, 0.1, 0.0]]},
//!   "channels": [{"name": "in", "kind": "continuum", "slots": [0], "density": {"constant": 1.0}}],
//!   "energy_grid": {"start": -1.0, "stop": 1.0, "points": 41}
//! }
//! ```
//!
//! Each `[i, j, re, im]` entry sets `H_ij`; unless `(j, i)` is listed too, the
//! partner `H_ji = alpha_i alpha_j conj(H_ij)` is filled in, so one triangle
//! is enough. Diagonals are real. Both operators must be pseudo-Hermitian.
//! Channel `slots` name basis states; each is mapped to the open level of
//! `H0` it dominates.

use std::collections::HashMap;
use std::path::Path;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krein::{BlockOperator, KreinSignature};
use crate::linalg::ZERO;
use crate::scattering::channel::{Channel, ChannelKind, DensityTable};
use crate::scattering::spectral::{canonical_form, SpectralModel};

pub const FORMAT: &str = "kreindyn-model";
pub const VERSION: u32 = 1;

/// Relative tolerance of the pseudo-Hermiticity check on `H0` and `H1`.
pub const PSEUDO_HERMITIAN_TOL: f64 = 1e-9;

/// Fallback `eps` when the model has no discretized band.
pub const DEFAULT_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureSpec {
    pub n_forward: usize,
    pub n_backward: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    #[serde(default)]
    pub diagonal: Vec<f64>,
    #[serde(default)]
    pub entries: Vec<(usize, usize, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub name: String,
    pub kind: ChannelKind,
    pub slots: Vec<usize>,
    pub density: DensityTable,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

/// Golden-rule comparison: the rate from `T(E)` against the slope of the
/// transition probability out of the single level of channel `from`,
/// sampled at `times`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateCheckSpec {
    pub from: String,
    pub to: String,
    pub energy: f64,
    pub times: Vec<f64>,
    #[serde(default = "default_rate_tolerance")]
    pub tolerance: f64,
}

fn default_rate_tolerance() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub signature: SignatureSpec,
    pub h0: MatrixSpec,
    #[serde(default)]
    pub h1: MatrixSpec,
    pub channels: Vec<ChannelSpec>,
    pub energy_grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_check: Option<RateCheckSpec>,
}

/// Energy grid, strictly increasing and non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGrid(Vec<f64>);

impl EnergyGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Model("grid is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Model("grid values must be finite".into()));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Model("grid values must be strictly increasing".into()));
        }
        Ok(Self(values))
    }

    /// `points` evenly spaced values from `start` to `stop` inclusive.
    pub fn linspace(start: f64, stop: f64, points: usize) -> Result<Self> {
        match points {
            0 => Err(Error::Model("grid needs at least one point".into())),
            1 => Self::new(vec![start]),
            _ => {
                let h = (stop - start) / (points - 1) as f64;
                Self::new((0..points).map(|k| start + h * k as f64).collect())
            }
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A model file turned into operators and a canonical form.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub name: String,
    pub description: String,
    pub h0: BlockOperator,
    pub h1: BlockOperator,
    pub model: SpectralModel,
    pub grid: EnergyGrid,
    pub eps: f64,
    pub rate_check: Option<RateCheckSpec>,
}

impl MatrixSpec {
    /// Dense operator; `field` names the section in diagnostics.
    pub fn to_operator(&self, field: &str, signature: KreinSignature) -> Result<BlockOperator> {
        let n = signature.dim();
        if !self.diagonal.is_empty() && self.diagonal.len() != n {
            return Err(Error::Model(format!(
                "{field}.diagonal has {} values, signature needs {n}",
                self.diagonal.len()
            )));
        }
        let mut m = Mat::<c64>::zeros(n, n);
        for (i, d) in self.diagonal.iter().enumerate() {
            if !d.is_finite() {
                return Err(Error::Model(format!("{field}.diagonal[{i}] is not finite")));
            }
            m[(i, i)] = c64::new(*d, 0.0);
        }
        let mut seen = HashMap::new();
        for (k, &(i, j, re, im)) in self.entries.iter().enumerate() {
            let at = format!("{field}.entries[{k}]");
            if i >= n || j >= n {
                return Err(Error::Model(format!("{at}: index ({i}, {j}) out of range for dimension {n}")));
            }
            if i == j {
                return Err(Error::Model(format!("{at}: diagonal entries belong in {field}.diagonal")));
            }
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::Model(format!("{at}: value is not finite")));
            }
            if let Some(prev) = seen.insert((i, j), k) {
                return Err(Error::Model(format!("{at}: entry ({i}, {j}) already set by {field}.entries[{prev}]")));
            }
        }
        for &(i, j, re, im) in &self.entries {
            let v = c64::new(re, im);
            m[(i, j)] = v;
            if !seen.contains_key(&(j, i)) {
                m[(j, i)] = v.conj() * (signature.alpha(i) * signature.alpha(j));
            }
        }
        BlockOperator::new(signature, m)
    }
}

impl GridSpec {
    /// Either `{start, stop, points}` or `{values}`; `field` names the section
    /// in diagnostics.
    pub fn to_grid(&self, field: &str) -> Result<EnergyGrid> {
        let grid = match (self.start, self.stop, self.points, &self.values) {
            (None, None, None, Some(v)) => EnergyGrid::new(v.clone()),
            (Some(a), Some(b), Some(n), None) => {
                if !(b > a) && n > 1 {
                    return Err(Error::Model(format!("{field}: stop {b} must exceed start {a}")));
                }
                EnergyGrid::linspace(a, b, n)
            }
            _ => {
                return Err(Error::Model(format!(
                    "{field}: give either {{start, stop, points}} or {{values}}"
                )))
            }
        };
        grid.map_err(|e| match e {
            Error::Model(msg) => Error::Model(format!("{field}: {msg}")),
            other => other,
        })
    }
}

impl ModelFile {
    pub fn build(&self) -> Result<LoadedModel> {
        if self.format != FORMAT {
            return Err(Error::Model(format!("format: expected '{FORMAT}', found '{}'", self.format)));
        }
        if self.version != VERSION {
            return Err(Error::Model(format!("version: unsupported version {}", self.version)));
        }
        let signature = KreinSignature::new(self.signature.n_forward, self.signature.n_backward)?;
        let h0 = self.h0.to_operator("h0", signature)?;
        let h1 = self.h1.to_operator("h1", signature)?;
        for op in [&h0, &h1] {
            let tolerance = PSEUDO_HERMITIAN_TOL * op.max_abs().max(1.0);
            let residual = op.pseudo_hermitian_residual();
            if residual > tolerance {
                return Err(Error::NotPseudoHermitian { residual, tolerance });
            }
        }
        let model = canonical_form(&h0)?;
        let mut channels = Vec::with_capacity(self.channels.len());
        for (ci, spec) in self.channels.iter().enumerate() {
            let mut levels = Vec::with_capacity(spec.slots.len());
            for &slot in &spec.slots {
                let level = model.open_level_for_slot(slot).ok_or_else(|| {
                    Error::Model(format!(
                        "channels[{ci}] ('{}'): slot {slot} is not dominated by an open level of h0",
                        spec.name
                    ))
                })?;
                levels.push(level);
            }
            let channel = Channel::new(spec.name.clone(), spec.kind, levels, spec.density.clone())
                .map_err(|e| Error::Model(format!("channels[{ci}]: {e}")))?;
            channels.push(channel);
        }
        let model = model.with_channels(channels)?;
        let grid = self.energy_grid.to_grid("energy_grid")?;
        let eps = match self.eps {
            Some(e) if e > 0.0 && e.is_finite() => e,
            Some(e) => return Err(Error::Model(format!("eps: {e} must be positive"))),
            None => default_eps(&model),
        };
        if let Some(rc) = &self.rate_check {
            for name in [&rc.from, &rc.to] {
                model
                    .channel(name)
                    .map_err(|_| Error::Model(format!("rate_check: unknown channel '{name}'")))?;
            }
            if rc.times.len() < 2 || rc.times.windows(2).any(|w| !(w[1] > w[0])) || rc.times[0] < 0.0 {
                return Err(Error::Model(
                    "rate_check.times: need at least two increasing, non-negative times".into(),
                ));
            }
        }
        Ok(LoadedModel {
            name: self.name.clone(),
            description: self.description.clone(),
            h0,
            h1,
            model,
            grid,
            eps,
            rate_check: self.rate_check.clone(),
        })
    }
}

/// Three band spacings when a discretized channel is present, otherwise
/// [`DEFAULT_EPS`]; never more than a quarter of the closed-spectrum gap.
pub fn default_eps(model: &SpectralModel) -> f64 {
    let levels = model.levels();
    let spacing = model
        .channels()
        .iter()
        .filter(|c| c.kind() == ChannelKind::Discretized)
        .filter_map(|c| c.spacing(|k| levels[k].energy.re))
        .reduce(f64::min);
    let eps = spacing.map_or(DEFAULT_EPS, |d| 3.0 * d);
    eps.min(0.25 * model.closed_gap())
}

pub fn parse_model(text: &str) -> Result<LoadedModel> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
    file.build()
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LoadedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| match e {
        Error::Model(msg) => Error::Model(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Dense `H1` entries outside the diagonal, for round-tripping.
pub fn matrix_spec(op: &BlockOperator) -> MatrixSpec {
    let n = op.dim();
    let d = op.data();
    MatrixSpec {
        diagonal: (0..n).map(|i| d[(i, i)].re).collect(),
        entries: (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| d[(i, j)] != ZERO)
            .map(|(i, j)| (i, j, d[(i, j)].re, d[(i, j)].im))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"{
        "format": "kreindyn-model", "version": 1, "name": "t",
        "signature": {"n_forward": 1, "n_backward": 1},
        "h0": {"diagonal": [0.0, 0.0]},
        "h1": {"entries": [[0, 1, 0.1, 0.0]]},
        "channels": [
            {"name": "f", "kind": "continuum", "slots": [0], "density": {"constant": 1.0}},
            {"name": "b", "kind": "continuum", "slots": [1], "density": {"constant": 1.0}}
        ],
        "energy_grid": {"start": -1.0, "stop": 1.0, "points": 5}
    }"#;

    #[test]
    fn parses_basic_file() {
        let m = parse_model(BASIC).unwrap();
        assert_eq!(m.grid.values(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(m.eps, DEFAULT_EPS);
        assert_eq!(m.h1.data()[(1, 0)], c64::new(-0.1, 0.0));
        assert!(m.h1.is_pseudo_hermitian(1e-15));
        assert_eq!(m.model.channels().len(), 2);
    }

    #[test]
    fn wrong_format_and_unknown_fields_rejected() {
        let bad = BASIC.replace("kreindyn-model", "other");
        assert!(matches!(parse_model(&bad), Err(Error::Model(m)) if m.contains("format")));
        let bad = BASIC.replace("\"name\": \"t\"", "\"name\": \"t\", \"extra\": 1");
        let err = parse_model(&bad).unwrap_err().to_string();
        assert!(err.contains("extra") && err.contains("line"), "{err}");
    }

    #[test]
    fn bad_entries_are_located() {
        let bad = BASIC.replace("[[0, 1, 0.1, 0.0]]", "[[0, 1, 0.1, 0.0], [0, 1, 0.2, 0.0]]");
        let err = parse_model(&bad).unwrap_err().to_string();
        assert!(err.contains("h1.entries[1]"), "{err}");
        let bad = BASIC.replace("[[0, 1, 0.1, 0.0]]", "[[0, 1, 0.1, 0.0], [1, 0, 0.2, 0.0]]");
        assert!(matches!(parse_model(&bad), Err(Error::NotPseudoHermitian { .. })));
        let ok = BASIC.replace("[[0, 1, 0.1, 0.0]]", "[[0, 1, 0.1, 0.0], [1, 0, -0.1, 0.0]]");
        assert_eq!(parse_model(&ok).unwrap().h1, parse_model(BASIC).unwrap().h1);
        let bad = BASIC.replace("[[0, 1, 0.1, 0.0]]", "[[0, 5, 0.1, 0.0]]");
        assert!(parse_model(&bad).unwrap_err().to_string().contains("out of range"));
    }

    #[test]
    fn grid_variants() {
        let v = BASIC.replace(r#"{"start": -1.0, "stop": 1.0, "points": 5}"#, r#"{"values": [0.0, 0.2]}"#);
        assert_eq!(parse_model(&v).unwrap().grid.len(), 2);
        let v = BASIC.replace(r#"{"start": -1.0, "stop": 1.0, "points": 5}"#, r#"{"values": [0.2, 0.0]}"#);
        assert!(parse_model(&v).is_err());
        let v = BASIC.replace(r#"{"start": -1.0, "stop": 1.0, "points": 5}"#, r#"{"values": []}"#);
        assert!(parse_model(&v).is_err());
        let v = BASIC.replace(r#""points": 5}"#, r#""points": 5, "values": [1.0]}"#);
        assert!(parse_model(&v).is_err());
    }

    #[test]
    fn channel_on_closed_slot_rejected() {
        let closed = BASIC
            .replace(r#""h0": {"diagonal": [0.0, 0.0]}"#, r#""h0": {"diagonal": [0.0, 0.0], "entries": [[0, 1, 1.0, 0.0]]}"#);
        let err = parse_model(&closed).unwrap_err().to_string();
        assert!(err.contains("slot 0"), "{err}");
    }

    #[test]
    fn matrix_spec_round_trips() {
        let m = parse_model(BASIC).unwrap();
        let spec = matrix_spec(&m.h1);
        let back = spec.to_operator("h1", m.h1.signature()).unwrap();
        assert_eq!(back, m.h1);
    }
}
