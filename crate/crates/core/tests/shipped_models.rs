use std::path::PathBuf;

use kreindyn::scattering::{load_model, LoadedModel, Scatterer};

fn shipped(name: &str) -> LoadedModel {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models").join(format!("{name}.json"));
    load_model(path).unwrap()
}

#[test]
fn continuum_models_are_unitary_on_their_grids() {
    for name in ["one_forward_channel", "forward_backward_channels", "closed_pair"] {
        let m = shipped(name);
        let sc = Scatterer::new(&m.model, &m.h1).unwrap();
        assert_eq!(m.grid.len(), 50);
        for &e in m.grid.values() {
            let s = sc.s_matrix(e, m.eps).unwrap();
            assert!(s.unitarity_error() <= 1e-8, "{name} at E = {e}: {}", s.unitarity_error());
        }
    }
}

#[test]
fn closed_pair_is_not_an_s_matrix_index() {
    let m = shipped("closed_pair");
    assert_eq!(m.model.n_pairs(), 1);
    let sc = Scatterer::new(&m.model, &m.h1).unwrap();
    let s = sc.s_matrix(0.0, m.eps).unwrap();
    assert_eq!(s.matrix.nrows(), 2);
    assert!(s.channels.iter().all(|c| c.level < m.model.n_open()));
}

#[test]
fn quasi_continuum_defect_shrinks_with_eps() {
    // 3d, 1.5d, 0.75d: below the level spacing the band stops acting as a continuum
    let m = shipped("quasi_continuum");
    let sc = Scatterer::new(&m.model, &m.h1).unwrap();
    for e in [-0.4, 0.0, 0.0031, 0.25] {
        let mut eps = m.eps;
        let mut prev = f64::INFINITY;
        for _ in 0..3 {
            let d = sc.unitarity_defect(e, eps).unwrap();
            assert!(d < prev, "E = {e}, eps = {eps}: {d} !< {prev}");
            prev = d;
            eps /= 2.0;
        }
    }
}

#[test]
fn golden_rule_rate() {
    let m = shipped("golden_rule");
    let rate = kreindyn::scattering::transition_rate(&m.model, &m.h1, 0.0, "level", "band", m.eps).unwrap();
    let golden = 2.0 * std::f64::consts::PI * 5e-4_f64.powi(2) * 100.0;
    assert!((rate / golden - 1.0).abs() < 0.05);
}
