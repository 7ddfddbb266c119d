//! Resolvent scattering theory on top of a diagonalizable pseudo-Hermitian
//! `H0` with open (real) and closed (complex-pair) levels.

pub mod channel;
pub mod model_file;
pub mod resolvent;
pub mod smatrix;
pub mod spectral;

pub use channel::{Channel, ChannelKind, DensityTable};
pub use model_file::{load_model, parse_model, EnergyGrid, LoadedModel, ModelFile, RateCheckSpec, GridSpec, MatrixSpec};
pub use resolvent::{green_function, GreenFunction, MethodUsed, TransitionMethod, TransitionOperator};
pub use smatrix::{s_matrix, transition_operator, transition_rate, unitarity_defect, OnShell, SMatrix, Scatterer};
pub use spectral::{canonical_form, canonical_form_with, CanonicalOptions, Level, Sector, SpectralModel};
