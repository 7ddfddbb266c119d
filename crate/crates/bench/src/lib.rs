//! Shared fixtures for the criterion benches.

use std::path::{Path, PathBuf};

use kreindyn::scattering::{load_model, LoadedModel};

/// Path of a model shipped in the workspace `models/` directory.
pub fn shipped_model_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name)
}

pub fn shipped_model(name: &str) -> LoadedModel {
    load_model(shipped_model_path(name)).expect("shipped model loads")
}
