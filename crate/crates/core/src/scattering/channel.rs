//! Scattering channels: groups of open canonical levels with a density of
//! states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a channel stands in for a continuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// One level representing a wide flat band; its on-shell propagator is
    /// `-i pi alpha rho(E)`.
    Continuum,
    /// A band of discrete levels, each broadened by `eps`; the level nearest
    /// `E` is the on-shell one.
    Discretized,
}

/// Density of states `rho(E)` of one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityTable {
    Constant(f64),
    /// Piecewise-linear table; zero outside `[energy[0], energy[last]]`.
    Table { energy: Vec<f64>, rho: Vec<f64> },
}

impl DensityTable {
    pub fn validate(&self) -> Result<()> {
        match self {
            DensityTable::Constant(r) => {
                if !(*r > 0.0) || !r.is_finite() {
                    return Err(Error::Model(format!("constant density {r} must be positive")));
                }
            }
            DensityTable::Table { energy, rho } => {
                if energy.len() < 2 || energy.len() != rho.len() {
                    return Err(Error::Model(format!(
                        "density table needs matching energy/rho columns of length >= 2 (got {} and {})",
                        energy.len(),
                        rho.len()
                    )));
                }
                if energy.windows(2).any(|w| !(w[1] > w[0])) || energy.iter().any(|e| !e.is_finite()) {
                    return Err(Error::Model("density table energies must be strictly increasing".into()));
                }
                if rho.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
                    return Err(Error::Model("density table values must be finite and non-negative".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, e: f64) -> f64 {
        match self {
            DensityTable::Constant(r) => *r,
            DensityTable::Table { energy, rho } => {
                let last = energy.len() - 1;
                if e < energy[0] || e > energy[last] {
                    return 0.0;
                }
                let k = energy.partition_point(|&x| x <= e).clamp(1, last);
                let (x0, x1) = (energy[k - 1], energy[k]);
                let w = (e - x0) / (x1 - x0);
                rho[k - 1] * (1.0 - w) + rho[k] * w
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    name: String,
    kind: ChannelKind,
    levels: Vec<usize>,
    density: DensityTable,
}

impl Channel {
    /// `levels` are canonical level indices.
    pub fn new(name: impl Into<String>, kind: ChannelKind, levels: Vec<usize>, density: DensityTable) -> Result<Self> {
        let name = name.into();
        density.validate()?;
        match kind {
            ChannelKind::Continuum if levels.len() != 1 => {
                return Err(Error::Model(format!(
                    "continuum channel '{name}' must cover exactly one level, got {}",
                    levels.len()
                )));
            }
            ChannelKind::Discretized if levels.is_empty() => {
                return Err(Error::Model(format!("discretized channel '{name}' has no levels")));
            }
            _ => {}
        }
        Ok(Self {
            name,
            kind,
            levels,
            density,
        })
    }

    pub fn continuum(name: impl Into<String>, level: usize, density: DensityTable) -> Result<Self> {
        Self::new(name, ChannelKind::Continuum, vec![level], density)
    }

    pub fn discretized(name: impl Into<String>, levels: Vec<usize>, density: DensityTable) -> Result<Self> {
        Self::new(name, ChannelKind::Discretized, levels, density)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn density(&self) -> &DensityTable {
        &self.density
    }

    pub fn rho(&self, e: f64) -> f64 {
        self.density.eval(e)
    }

    /// Smallest gap between adjacent level energies (`None` for one level).
    pub fn spacing(&self, energies: impl Fn(usize) -> f64) -> Option<f64> {
        let mut e: Vec<f64> = self.levels.iter().map(|&k| energies(k)).collect();
        e.sort_by(f64::total_cmp);
        e.windows(2).map(|w| w[1] - w[0]).reduce(f64::min)
    }

    /// Level standing for the channel at energy `e`.
    pub fn on_shell_level(&self, e: f64, energies: impl Fn(usize) -> f64) -> usize {
        match self.kind {
            ChannelKind::Continuum => self.levels[0],
            ChannelKind::Discretized => *self
                .levels
                .iter()
                .min_by(|&&a, &&b| (energies(a) - e).abs().total_cmp(&(energies(b) - e).abs()))
                .expect("non-empty"),
        }
    }
}
