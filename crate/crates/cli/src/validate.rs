//! Model-file validation report.

use std::path::Path;

use serde::Serialize;

use kreindyn::scattering::model_file::PSEUDO_HERMITIAN_TOL;
use kreindyn::scattering::{canonical_form, ModelFile};
use kreindyn::KreinSignature;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub check: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub file: String,
    pub pass: bool,
    pub findings: Vec<Finding>,
}

struct Builder {
    findings: Vec<Finding>,
}

impl Builder {
    fn record(&mut self, check: &str, pass: bool, detail: impl Into<String>) -> bool {
        self.findings.push(Finding {
            check: check.into(),
            pass,
            detail: detail.into(),
        });
        pass
    }
}

/// Runs the checks in order, stopping at the first one that later checks
/// depend on.
pub fn validate_model(path: &Path) -> Report {
    let mut b = Builder { findings: Vec::new() };
    run_checks(path, &mut b);
    Report {
        file: path.display().to_string(),
        pass: b.findings.iter().all(|f| f.pass),
        findings: b.findings,
    }
}

fn run_checks(path: &Path, b: &mut Builder) {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            b.record("readable", false, e.to_string());
            return;
        }
    };
    let file: ModelFile = match serde_json::from_str(&text) {
        Ok(f) => f,
        Err(e) => {
            b.record("schema", false, e.to_string());
            return;
        }
    };
    b.record("schema", true, "parsed");
    let header_ok = file.format == kreindyn::scattering::model_file::FORMAT
        && file.version == kreindyn::scattering::model_file::VERSION;
    if !b.record("header", header_ok, format!("format '{}', version {}", file.format, file.version)) {
        return;
    }
    let sig = match KreinSignature::new(file.signature.n_forward, file.signature.n_backward) {
        Ok(s) => s,
        Err(e) => {
            b.record("signature", false, e.to_string());
            return;
        }
    };
    b.record("signature", true, sig.to_string());

    let mut ops = Vec::new();
    for (field, spec) in [("h0", &file.h0), ("h1", &file.h1)] {
        match spec.to_operator(field, sig) {
            Ok(op) => {
                let tol = PSEUDO_HERMITIAN_TOL * op.max_abs().max(1.0);
                let r = op.pseudo_hermitian_residual();
                let detail = if r <= tol {
                    format!("residual {r:.3e}")
                } else {
                    format!("NotPseudoHermitian: residual {r:.3e} > {tol:.3e}")
                };
                b.record(&format!("{field}_pseudo_hermitian"), r <= tol, detail);
                ops.push(op);
            }
            Err(e) => {
                b.record(&format!("{field}_entries"), false, e.to_string());
            }
        }
    }
    if ops.len() != 2 || b.findings.iter().any(|f| !f.pass) {
        return;
    }
    let h0 = &ops[0];
    match canonical_form(h0) {
        Ok(m) => {
            let (eig, metric) = m.residuals(h0);
            let tol = 1e-9 * h0.max_abs().max(1.0);
            b.record(
                "canonical_form",
                eig <= tol && metric <= tol,
                format!(
                    "{} open forward, {} open backward, {} closed pairs; residuals {eig:.2e}, {metric:.2e}",
                    m.open_forward_levels().len(),
                    m.open_backward_levels().len(),
                    m.n_pairs()
                ),
            );
        }
        Err(e) => {
            b.record("canonical_form", false, format!("{}: {e}", e.name()));
            return;
        }
    }
    match file.build() {
        Ok(m) => {
            b.record(
                "channels",
                true,
                format!("{} channels, {} grid points, eps {:e}", m.model.channels().len(), m.grid.len(), m.eps),
            );
        }
        Err(e) => {
            b.record("channels", false, format!("{}: {e}", e.name()));
        }
    }
}
