//! Scenario bodies. Each returns its tables, checks and a summary; writing
//! files and the manifest is left to [`crate::run`].

use std::f64::consts::PI;
use std::path::Path;

use faer::{c64, Col};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use kreindyn::dynamics::{propagator, HamiltonianSpec, PropagatorOptions};
use kreindyn::io_map::{io_transform, normalize_input, solve_interior, solve_two_point, IoRole, IoState};
use kreindyn::linalg::identity_defect;
use kreindyn::models::coupling::{cross_sections, cross_sections_at_length, discriminant, HBAR_C};
use kreindyn::models::vacuum::{
    decay_grid, vacuum_decay_fit, vacuum_expectations, vacuum_hamiltonian, vacuum_signature, vacuum_solution,
};
use kreindyn::scattering::{ChannelKind, LoadedModel, Scatterer};
use kreindyn::{BlockVector, KreinSignature};

use crate::inputs::{CrossSectionFile, IoFile, VacuumFile};
use crate::output::{Cell, Check, Table};
use crate::CliError;

/// Everything a scenario produces.
#[derive(Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub summary: Map<String, Value>,
    pub tolerances: Map<String, Value>,
    /// Broadening actually used, when it applies.
    pub eps: Option<f64>,
}

impl Outcome {
    fn tolerance(&mut self, name: &str, v: f64) {
        self.tolerances.insert(name.into(), json!(v));
    }

    fn note(&mut self, name: &str, v: Value) {
        self.summary.insert(name.into(), v);
    }
}

pub const UNITARITY_TOL: f64 = 1e-10;
pub const S_UNITARITY_TOL: f64 = 1e-8;
pub const DRIFT_TOL: f64 = 1e-8;
pub const CLOSED_FORM_TOL: f64 = 1e-10;
pub const DECAY_TOL: f64 = 0.01;

fn complex_col(values: &[[f64; 2]]) -> Col<c64> {
    Col::from_fn(values.len(), |i| c64::new(values[i][0], values[i][1]))
}

pub fn io_demo(file: &IoFile) -> Result<Outcome, CliError> {
    let sig = KreinSignature::new(file.signature.n_forward, file.signature.n_backward)?;
    let h = file.hamiltonian.to_operator("hamiltonian", sig)?;
    let spec = match &file.drive {
        None => HamiltonianSpec::constant(h)?,
        Some(d) => {
            let v = d.operator.to_operator("drive.operator", sig)?;
            // validates both pieces before the closure captures them
            HamiltonianSpec::constant(v.clone())?;
            HamiltonianSpec::constant(h.clone())?;
            let w = d.frequency;
            HamiltonianSpec::time_dependent(sig, file.t_minus, file.t_plus, move |t| {
                h.add(&v.scale(c64::new((w * t).sin(), 0.0))).expect("same signature")
            })?
        }
    };
    if file.samples < 2 {
        return Err(CliError::Input(format!("samples: need at least 2, got {}", file.samples)));
    }
    let input = normalize_input(&IoState::new(
        sig,
        complex_col(&file.input.forward),
        complex_col(&file.input.backward),
        IoRole::Input,
    )?)?;

    let (t0, t1) = (file.t_minus, file.t_plus);
    let whole = propagator(&spec, t0, t1)?;
    let u = io_transform(&whole)?;
    let sol = solve_two_point(&whole, &input)?;
    let times: Vec<f64> = (0..file.samples)
        .map(|k| {
            if k + 1 == file.samples {
                t1
            } else {
                t0 + (t1 - t0) * k as f64 / (file.samples - 1) as f64
            }
        })
        .collect();
    let states: Vec<BlockVector> = times
        .par_iter()
        .enumerate()
        .map(|(k, &t)| {
            if k == 0 {
                Ok(sol.at_t_minus.clone())
            } else if k + 1 == times.len() {
                Ok(sol.at_t_plus.clone())
            } else {
                let first = propagator(&spec, t0, t)?;
                let second = propagator(&spec, t, t1)?;
                solve_interior(&first, &second, &input)
            }
        })
        .collect::<kreindyn::Result<_>>()?;

    let n = sig.dim();
    let mut columns = vec!["t".to_string(), "eta_norm".into(), "hilbert_norm_sqr".into()];
    for i in 0..n {
        columns.push(format!("phi{i}_re"));
        columns.push(format!("phi{i}_im"));
    }
    let mut traj = Table::with_columns("trajectory", columns);
    let mut eta = Vec::with_capacity(states.len());
    let mut max_hilbert = 0.0_f64;
    for (t, s) in times.iter().zip(&states) {
        let e = s.eta_norm();
        let hn = s.hilbert_norm_sqr();
        eta.push(e);
        max_hilbert = max_hilbert.max(hn);
        let mut row: Vec<Cell> = vec![(*t).into(), e.into(), hn.into()];
        for z in s.data().iter() {
            row.push(z.re.into());
            row.push(z.im.into());
        }
        traj.push(row);
    }
    let mut map = Table::new("io_map", &["row", "col", "re", "im"]);
    for i in 0..n {
        for j in 0..n {
            let z = u.data()[(i, j)];
            map.push(vec![i.into(), j.into(), z.re.into(), z.im.into()]);
        }
    }

    let gram = u.data().adjoint() * u.data();
    let unitarity = identity_defect(gram.as_ref());
    let drift = eta.iter().map(|e| (e - eta[0]).abs()).fold(0.0, f64::max) / max_hilbert.max(1.0);
    let norm_defect = (sol.output.hilbert_norm_sqr() - 1.0).abs();
    let residual = sol.residual / whole.max_abs().max(1.0);

    let mut out = Outcome::default();
    out.tolerance("io_unitarity", UNITARITY_TOL);
    out.tolerance("output_norm", UNITARITY_TOL);
    out.tolerance("eta_norm_drift", DRIFT_TOL);
    out.tolerance("propagator", PropagatorOptions::default().tolerance);
    out.checks.push(Check::at_most("io_unitarity", unitarity, UNITARITY_TOL));
    out.checks.push(Check::at_most("output_norm", norm_defect, UNITARITY_TOL));
    out.checks.push(Check::at_most("eta_norm_drift", drift, DRIFT_TOL));
    out.checks.push(Check::at_most("two_point_residual", residual, DRIFT_TOL));
    out.note("name", json!(file.name));
    out.note("eta_norm", json!(eta[0]));
    out.note("propagator_max_abs", json!(whole.max_abs()));
    out.note(
        "output",
        json!({
            "forward_at_t_plus": sol.output.forward().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "backward_at_t_minus": sol.output.backward().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        }),
    );
    out.tables = vec![traj, map];
    Ok(out)
}

/// True when every open level sits in a continuum channel, so the S-matrix is
/// unitary for any `eps` rather than only in the limit.
pub fn exactly_unitary(m: &LoadedModel) -> bool {
    let mut covered = vec![false; m.model.n_open()];
    for ch in m.model.channels() {
        if ch.kind() == ChannelKind::Continuum {
            for &k in ch.levels() {
                covered[k] = true;
            }
        }
    }
    covered.iter().all(|&c| c)
}

pub fn scatter_sweep(m: &LoadedModel, eps: Option<f64>) -> Result<Outcome, CliError> {
    let eps = eps.unwrap_or(m.eps);
    let sc = Scatterer::new(&m.model, &m.h1)?;
    let results = m
        .grid
        .values()
        .par_iter()
        .map(|&e| Ok((sc.s_matrix(e, eps)?, sc.unitarity_defect(e, eps)?)))
        .collect::<kreindyn::Result<Vec<_>>>()?;

    let mut s_table = Table::new("s_matrix", &["energy", "out_channel", "in_channel", "re", "im", "abs2"]);
    let mut u_table = Table::new("unitarity", &["energy", "open_channels", "unitarity_error", "unitarity_defect"]);
    let mut worst = 0.0_f64;
    let mut worst_defect = 0.0_f64;
    for (s, defect) in &results {
        for (a, ca) in s.channels.iter().enumerate() {
            for (b, cb) in s.channels.iter().enumerate() {
                let z = s.matrix[(a, b)];
                s_table.push(vec![
                    s.energy.into(),
                    ca.name.as_str().into(),
                    cb.name.as_str().into(),
                    z.re.into(),
                    z.im.into(),
                    z.norm_sqr().into(),
                ]);
            }
        }
        let err = s.unitarity_error();
        worst = worst.max(err);
        worst_defect = worst_defect.max(*defect);
        u_table.push(vec![s.energy.into(), s.channels.len().into(), err.into(), (*defect).into()]);
    }

    let mut out = Outcome {
        eps: Some(eps),
        ..Outcome::default()
    };
    out.note("name", json!(m.name));
    out.note("grid_points", json!(m.grid.len()));
    out.note("closed_pairs", json!(m.model.n_pairs()));
    out.note("max_unitarity_error", json!(worst));
    out.note("max_unitarity_defect", json!(worst_defect));
    if exactly_unitary(m) {
        out.tolerance("s_matrix_unitarity", S_UNITARITY_TOL);
        out.checks.push(Check::at_most("s_matrix_unitarity", worst, S_UNITARITY_TOL));
    } else {
        out.note(
            "unitarity_check",
            json!("not enforced: discretized or uncovered open levels leak flux at finite eps"),
        );
    }
    out.tables = vec![s_table, u_table];
    Ok(out)
}

pub fn rate_check(m: &LoadedModel, eps: Option<f64>) -> Result<Outcome, CliError> {
    let rc = m
        .rate_check
        .as_ref()
        .ok_or_else(|| CliError::Input(format!("model '{}' has no rate_check section", m.name)))?;
    let eps = eps.unwrap_or(m.eps);
    let sc = Scatterer::new(&m.model, &m.h1)?;
    let rate = sc.transition_rate(rc.energy, &rc.from, &rc.to, eps)?;

    let (_, from) = m.model.channel(&rc.from)?;
    let (_, to) = m.model.channel(&rc.to)?;
    if from.levels().len() != 1 {
        return Err(CliError::Input(format!(
            "rate_check.from: channel '{}' must hold exactly one level",
            rc.from
        )));
    }
    let levels = m.model.levels();
    let k_from = from.levels()[0];
    let k_to = to.on_shell_level(rc.energy, |k| levels[k].energy.re);
    let born = 2.0 * PI * sc.h1_canonical()[(k_to, k_from)].norm_sqr() * to.rho(rc.energy);

    // Probabilities are read in the basis of slots.
    let slot_from = levels[k_from].slot;
    let slots_to: Vec<usize> = to.levels().iter().map(|&k| levels[k].slot).collect();
    let h = HamiltonianSpec::constant(m.h0.add(&m.h1)?)?;
    let probs = rc
        .times
        .par_iter()
        .map(|&t| {
            let u = io_transform(&propagator(&h, 0.0, t)?)?;
            Ok(slots_to.iter().map(|&s| u.data()[(s, slot_from)].norm_sqr()).sum::<f64>())
        })
        .collect::<kreindyn::Result<Vec<f64>>>()?;

    let n = rc.times.len() as f64;
    let mt = rc.times.iter().sum::<f64>() / n;
    let mp = probs.iter().sum::<f64>() / n;
    let sxy: f64 = rc.times.iter().zip(&probs).map(|(t, p)| (t - mt) * (p - mp)).sum();
    let sxx: f64 = rc.times.iter().map(|t| (t - mt).powi(2)).sum();
    let slope = sxy / sxx;

    let mut table = Table::new("rate_check", &["t", "probability"]);
    for (t, p) in rc.times.iter().zip(&probs) {
        table.push(vec![(*t).into(), (*p).into()]);
    }
    let mut out = Outcome {
        eps: Some(eps),
        ..Outcome::default()
    };
    out.tolerance("rate_relative", rc.tolerance);
    out.checks.push(Check::at_most("time_domain_slope", (slope / rate - 1.0).abs(), rc.tolerance));
    out.checks.push(Check::at_most("first_order_rate", (born / rate - 1.0).abs(), rc.tolerance));
    out.note("name", json!(m.name));
    out.note("from", json!(rc.from));
    out.note("to", json!(rc.to));
    out.note("energy", json!(rc.energy));
    out.note("rate", json!(rate));
    out.note("first_order_rate", json!(born));
    out.note("time_domain_slope", json!(slope));
    out.note("intercept", json!(mp - slope * mt));
    out.tables = vec![table];
    Ok(out)
}

pub fn vacuum(file: &VacuumFile) -> Result<Outcome, CliError> {
    let p = file.params;
    let k = p.constants()?;
    if file.samples < 2 {
        return Err(CliError::Input(format!("samples: need at least 2, got {}", file.samples)));
    }
    let taus = match &file.tau_grid {
        Some(g) => g.to_grid("tau_grid")?.values().to_vec(),
        None => decay_grid(&p, 200)?,
    };
    if let Some(bad) = taus.iter().find(|t| !(**t > 0.0)) {
        return Err(CliError::Input(format!("tau_grid: interval length {bad} must be positive")));
    }
    let w = k.mu * p.e1;

    let mut traj = Table::new(
        "trajectory",
        &["t", "phi_f_re", "phi_f_im", "phi_b_re", "phi_b_im", "eta_norm"],
    );
    for i in 0..file.samples {
        let t = if i + 1 == file.samples {
            p.tau
        } else {
            p.tau * i as f64 / (file.samples - 1) as f64
        };
        let [f, b] = vacuum_solution(&p, t)?;
        traj.push(vec![
            t.into(),
            f.re.into(),
            f.im.into(),
            b.re.into(),
            b.im.into(),
            (f.norm_sqr() - b.norm_sqr()).into(),
        ]);
    }

    let rows = taus
        .par_iter()
        .map(|&tau| {
            let (vi, vh) = vacuum_expectations(&p.with_tau(tau), 0.0)?;
            Ok((tau, vi, vh))
        })
        .collect::<kreindyn::Result<Vec<_>>>()?;
    let mut exp_table = Table::new(
        "expectations",
        &["tau", "mu_e1_tau", "identity_av", "hamiltonian_av", "envelope"],
    );
    for (tau, vi, vh) in &rows {
        exp_table.push(vec![
            (*tau).into(),
            (w * tau).into(),
            (*vi).into(),
            (*vh).into(),
            (-w * tau).exp().into(),
        ]);
    }

    // endpoint conditions and agreement with the numerical two-point solve
    let (f0, b1) = p.input();
    let start = vacuum_solution(&p, 0.0)?;
    let end = vacuum_solution(&p, p.tau)?;
    let endpoint = (start[0] - f0).norm().max((end[1] - b1).norm());
    let sig = vacuum_signature();
    let spec = HamiltonianSpec::constant(vacuum_hamiltonian(&p).operator)?;
    let input = IoState::new(sig, Col::from_fn(1, |_| f0), Col::from_fn(1, |_| b1), IoRole::Input)?;
    let sol = solve_two_point(&propagator(&spec, 0.0, p.tau)?, &input)?;
    let bvp = (0..2)
        .map(|i| {
            (sol.at_t_minus.data()[i] - start[i])
                .norm()
                .max((sol.at_t_plus.data()[i] - end[i]).norm())
        })
        .fold(0.0, f64::max);

    let mut out = Outcome::default();
    out.tolerance("closed_form", CLOSED_FORM_TOL);
    out.checks.push(Check::at_most("input_conditions", endpoint, CLOSED_FORM_TOL));
    out.checks.push(Check::at_most("two_point_agreement", bvp, CLOSED_FORM_TOL));
    match vacuum_decay_fit(&p, &taus) {
        Ok(fit) => {
            out.tolerance("decay_rate_relative", DECAY_TOL);
            out.checks.push(Check::at_most(
                "identity_decay_rate",
                (fit.identity_rate / fit.expected - 1.0).abs(),
                DECAY_TOL,
            ));
            out.checks.push(Check::at_most(
                "hamiltonian_decay_rate",
                (fit.hamiltonian_rate / fit.expected - 1.0).abs(),
                DECAY_TOL,
            ));
            out.note("decay_fit", serde_json::to_value(fit).expect("fit serializes"));
        }
        Err(e) => out.note("decay_fit", json!(format!("not fitted: {e}"))),
    }
    out.note("name", json!(file.name));
    out.note("discriminant", json!(discriminant(&p.couplings)));
    out.note(
        "constants",
        json!({"e_bar": k.e_bar, "kappa": k.kappa, "mu": k.mu, "sigma": k.sigma, "decay_rate": -w}),
    );
    out.tables = vec![traj, exp_table];
    Ok(out)
}

pub fn cross_section(file: &CrossSectionFile) -> Result<Outcome, CliError> {
    file.couplings.validate()?;
    let rows: Vec<(f64, f64)> = match (&file.e_cm, &file.lengths) {
        (Some(g), None) => g.to_grid("e_cm")?.values().iter().map(|&e| (e, HBAR_C / e)).collect(),
        (None, Some(g)) => g.to_grid("lengths")?.values().iter().map(|&l| (HBAR_C / l, l)).collect(),
        _ => return Err(CliError::Input("give exactly one of e_cm or lengths".into())),
    };
    let mut table = Table::new(
        "cross_sections",
        &["e_cm_joule", "length_m", "sigma_ff_m2", "sigma_bb_m2", "sigma_bf_m2", "sigma_fb_m2"],
    );
    let mut scaling = 0.0_f64;
    let mut reference: Option<f64> = None;
    for &(e, l) in &rows {
        let s = if file.e_cm.is_some() {
            cross_sections(&file.couplings, e)?
        } else {
            cross_sections_at_length(&file.couplings, l)
        };
        // sigma * E^2 is constant
        let inv = (s.ff + s.bb + s.bf) * e * e;
        match reference {
            None => reference = Some(inv),
            Some(r) if r > 0.0 => scaling = scaling.max((inv / r - 1.0).abs()),
            Some(_) => {}
        }
        table.push(vec![e.into(), l.into(), s.ff.into(), s.bb.into(), s.bf.into(), s.fb.into()]);
    }
    let mut out = Outcome::default();
    out.tolerance("inverse_square_scaling", 1e-12);
    out.checks.push(Check::at_most("inverse_square_scaling", scaling, 1e-12));
    out.note("name", json!(file.name));
    out.note("hbar_c_joule_metre", json!(HBAR_C));
    out.tables = vec![table];
    Ok(out)
}

/// Reads and builds the scenario's input, then runs it.
pub fn dispatch(kind: crate::config::ScenarioKind, path: &Path, text: &str, eps: Option<f64>) -> Result<Outcome, CliError> {
    use crate::config::ScenarioKind as K;
    use crate::inputs;
    match kind {
        K::IoDemo => io_demo(&inputs::parse_io(path, text)?),
        K::Vacuum => vacuum(&inputs::parse_vacuum(path, text)?),
        K::CrossSection => cross_section(&inputs::parse_cross_section(path, text)?),
        K::ScatterSweep | K::RateCheck => {
            let m = kreindyn::scattering::parse_model(text).map_err(|e| match e {
                kreindyn::Error::Model(msg) => CliError::Input(format!("{}: {msg}", path.display())),
                other => CliError::Numerical(other),
            })?;
            if kind == K::ScatterSweep {
                scatter_sweep(&m, eps)
            } else {
                rate_check(&m, eps)
            }
        }
    }
}
