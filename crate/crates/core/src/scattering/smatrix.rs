//! On-shell S-matrix, unitarity diagnostic and transition rates.
//!
//! Everything is evaluated in the canonical frame of `H0`. With `eta'` the
//! canonical metric and `rho` the channel densities,
//!
//! ```text
//! S_ab = delta_ab - 2 pi i sqrt(rho_a) [eta' T]_ab sqrt(rho_b)
//! ```
//!
//! where `a`, `b` run over the on-shell levels of the open channels only.

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::krein::BlockOperator;
use crate::linalg::{identity_defect, max_abs, ZERO};
use crate::scattering::resolvent::{green_function, transition_canonical, GreenFunction, TransitionMethod, TransitionOperator};
use crate::scattering::spectral::SpectralModel;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// One open channel at a given energy.
#[derive(Debug, Clone, PartialEq)]
pub struct OnShell {
    pub channel: usize,
    pub name: String,
    /// Canonical index of the level standing for the channel.
    pub level: usize,
    pub rho: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct SMatrix {
    pub energy: f64,
    pub channels: Vec<OnShell>,
    pub matrix: Mat<c64>,
}

impl SMatrix {
    /// `max(|S S^H - I|, |S^H S - I|)`.
    pub fn unitarity_error(&self) -> f64 {
        let s = &self.matrix;
        identity_defect((s * s.adjoint()).as_ref()).max(identity_defect((s.adjoint() * s).as_ref()))
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.name == name)
    }
}

/// A model together with a validated perturbation, ready for energy sweeps.
#[derive(Debug, Clone)]
pub struct Scatterer<'a> {
    model: &'a SpectralModel,
    h1: Mat<c64>,
}

/// Relative tolerance of the pseudo-Hermiticity check on `H1`.
pub const H1_TOLERANCE: f64 = 1e-9;

impl<'a> Scatterer<'a> {
    /// Checks that `H1` is pseudo-Hermitian (Hermitian diagonal blocks,
    /// off-diagonal blocks related by `-H`) and moves it to the canonical
    /// frame.
    pub fn new(model: &'a SpectralModel, h1: &BlockOperator) -> Result<Self> {
        if h1.signature() != model.signature() {
            return Err(Error::SignatureMismatch {
                left: model.signature(),
                right: h1.signature(),
            });
        }
        let tolerance = H1_TOLERANCE * h1.max_abs().max(1.0);
        let residual = h1.pseudo_hermitian_residual();
        if residual > tolerance {
            return Err(Error::NotPseudoHermitian {
                residual,
                tolerance,
            });
        }
        Ok(Self {
            model,
            h1: model.to_canonical(h1.data()),
        })
    }

    pub fn model(&self) -> &SpectralModel {
        self.model
    }

    /// `H1` in the canonical frame.
    pub fn h1_canonical(&self) -> &Mat<c64> {
        &self.h1
    }

    pub fn green_function(&self, energy: f64, eps: f64) -> Result<GreenFunction> {
        green_function(self.model, energy, eps)
    }

    pub fn transition_operator(&self, energy: f64, eps: f64, method: TransitionMethod) -> Result<TransitionOperator> {
        let g = self.green_function(energy, eps)?;
        transition_canonical(self.h1.as_ref(), &g, method)
    }

    /// Channels with `rho(E) > 0`, in declaration order.
    pub fn on_shell(&self, energy: f64) -> Result<Vec<OnShell>> {
        let levels = self.model.levels();
        let out: Vec<OnShell> = self
            .model
            .channels()
            .iter()
            .enumerate()
            .filter_map(|(ci, ch)| {
                let rho = ch.rho(energy);
                (rho > 0.0).then(|| {
                    let level = ch.on_shell_level(energy, |k| levels[k].energy.re);
                    OnShell {
                        channel: ci,
                        name: ch.name().to_string(),
                        level,
                        rho,
                        alpha: levels[level].sector.alpha(),
                    }
                })
            })
            .collect();
        if out.is_empty() {
            return Err(Error::NoOpenChannelAtE { energy });
        }
        Ok(out)
    }

    pub fn s_matrix(&self, energy: f64, eps: f64) -> Result<SMatrix> {
        let channels = self.on_shell(energy)?;
        let t = self.transition_operator(energy, eps, TransitionMethod::Direct)?;
        Ok(s_from_t(energy, channels, &t.matrix))
    }

    /// `max |sqrt(rho) [T eta' - eta' T^H + 2 pi i T P T^H] sqrt(rho)|` over
    /// the on-shell block, `P` the on-shell density projector. Zero exactly
    /// when the S-matrix is unitary; equals `max |S S^H - I| / (2 pi)`.
    pub fn unitarity_defect(&self, energy: f64, eps: f64) -> Result<f64> {
        let channels = self.on_shell(energy)?;
        let t = self.transition_operator(energy, eps, TransitionMethod::Direct)?.matrix;
        let mut defect = 0.0_f64;
        for ca in &channels {
            for cb in &channels {
                let (ka, kb) = (ca.level, cb.level);
                let sum: c64 = channels
                    .iter()
                    .map(|cc| t[(ka, cc.level)] * t[(kb, cc.level)].conj() * cc.rho)
                    .sum();
                let xi = t[(ka, kb)] * cb.alpha - t[(kb, ka)].conj() * ca.alpha + c64::new(0.0, TWO_PI) * sum;
                defect = defect.max(xi.norm() * (ca.rho * cb.rho).sqrt());
            }
        }
        Ok(defect)
    }

    /// `2 pi |T_{to, from}|^2 rho_to(E)`.
    pub fn transition_rate(&self, energy: f64, from: &str, to: &str, eps: f64) -> Result<f64> {
        if from == to {
            return Err(Error::InvalidTransition(format!("'{from}' -> '{to}' does not change channel")));
        }
        self.model.channel(from)?;
        self.model.channel(to)?;
        let channels = self.on_shell(energy)?;
        let find = |name: &str| {
            channels
                .iter()
                .find(|c| c.name == name)
                .cloned()
                .ok_or(Error::NoOpenChannelAtE { energy })
        };
        let (cf, ct) = (find(from)?, find(to)?);
        let t = self.transition_operator(energy, eps, TransitionMethod::Direct)?.matrix;
        Ok(TWO_PI * t[(ct.level, cf.level)].norm_sqr() * ct.rho)
    }
}

fn s_from_t(energy: f64, channels: Vec<OnShell>, t: &Mat<c64>) -> SMatrix {
    let m = channels.len();
    let matrix = Mat::from_fn(m, m, |a, b| {
        let (ca, cb) = (&channels[a], &channels[b]);
        let d = if a == b { c64::new(1.0, 0.0) } else { ZERO };
        let w = (ca.rho * cb.rho).sqrt() * ca.alpha;
        d - c64::new(0.0, TWO_PI * w) * t[(ca.level, cb.level)]
    });
    SMatrix {
        energy,
        channels,
        matrix,
    }
}

pub fn transition_operator(
    model: &SpectralModel,
    h1: &BlockOperator,
    energy: f64,
    eps: f64,
    method: TransitionMethod,
) -> Result<TransitionOperator> {
    Scatterer::new(model, h1)?.transition_operator(energy, eps, method)
}

pub fn s_matrix(model: &SpectralModel, h1: &BlockOperator, energy: f64, eps: f64) -> Result<SMatrix> {
    Scatterer::new(model, h1)?.s_matrix(energy, eps)
}

pub fn unitarity_defect(model: &SpectralModel, h1: &BlockOperator, energy: f64, eps: f64) -> Result<f64> {
    Scatterer::new(model, h1)?.unitarity_defect(energy, eps)
}

pub fn transition_rate(
    model: &SpectralModel,
    h1: &BlockOperator,
    energy: f64,
    from: &str,
    to: &str,
    eps: f64,
) -> Result<f64> {
    Scatterer::new(model, h1)?.transition_rate(energy, from, to, eps)
}

/// `max |T|` helper for reporting.
pub fn t_magnitude(t: &TransitionOperator) -> f64 {
    max_abs(t.matrix.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krein::KreinSignature;
    use crate::random::{random_hermitian, seeded};
    use crate::scattering::channel::{Channel, DensityTable};
    use crate::scattering::spectral::canonical_form;

    fn op(nf: usize, nb: usize, diag: &[f64], entries: &[(usize, usize, c64)]) -> BlockOperator {
        let s = KreinSignature::new(nf, nb).unwrap();
        let mut m = Mat::<c64>::zeros(s.dim(), s.dim());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = c64::new(*d, 0.0);
        }
        for &(i, j, v) in entries {
            m[(i, j)] = v;
            m[(j, i)] = v.conj() * (s.alpha(i) * s.alpha(j));
        }
        BlockOperator::new(s, m).unwrap()
    }

    fn continuum(h0: &BlockOperator, slots: &[(&str, usize, f64)]) -> SpectralModel {
        let m = canonical_form(h0).unwrap();
        let chans = slots
            .iter()
            .map(|&(n, s, rho)| Channel::continuum(n, m.open_level_for_slot(s).unwrap(), DensityTable::Constant(rho)).unwrap())
            .collect();
        m.with_channels(chans).unwrap()
    }

    #[test]
    fn no_perturbation_gives_identity() {
        let h0 = op(2, 1, &[0.0, 0.3, -0.2], &[]);
        let m = continuum(&h0, &[("a", 0, 1.0), ("b", 2, 0.5)]);
        let h1 = BlockOperator::zeros(h0.signature());
        let s = s_matrix(&m, &h1, 0.1, 1e-9).unwrap();
        assert_eq!(s.channels.len(), 2);
        assert!(identity_defect(s.matrix.as_ref()) == 0.0);
    }

    #[test]
    fn single_channel_phase_shift() {
        // S = (1 - i x) / (1 + i x), x = pi rho v
        let (v, rho) = (0.3, 0.7);
        let h0 = op(1, 0, &[0.0], &[]);
        let m = continuum(&h0, &[("a", 0, rho)]);
        let h1 = op(1, 0, &[v], &[]);
        let s = s_matrix(&m, &h1, 0.0, 1e-9).unwrap();
        let x = std::f64::consts::PI * rho * v;
        let expected = c64::new(1.0, -x) / c64::new(1.0, x);
        assert!((s.matrix[(0, 0)] - expected).norm() < 1e-14);
        assert!((s.matrix[(0, 0)].arg() + 2.0 * x.atan()).abs() < 1e-14);
    }

    #[test]
    fn forward_backward_pair_is_unitary_and_matches_closed_form() {
        // S = [[1 - x^2, -2ix], [-2ix, 1 - x^2]] / (1 + x^2), x = pi rho g
        let (g, rho) = (0.25, 0.8);
        let h0 = op(1, 1, &[0.0, 0.0], &[]);
        let m = continuum(&h0, &[("f", 0, rho), ("b", 1, rho)]);
        let h1 = op(1, 1, &[0.0, 0.0], &[(0, 1, c64::new(g, 0.0))]);
        let sc = Scatterer::new(&m, &h1).unwrap();
        let s = sc.s_matrix(0.05, 1e-9).unwrap();
        let x = std::f64::consts::PI * rho * g;
        let d = 1.0 + x * x;
        let diag = c64::new((1.0 - x * x) / d, 0.0);
        let off = c64::new(0.0, -2.0 * x / d);
        assert!((s.matrix[(0, 0)] - diag).norm() < 1e-14);
        assert!((s.matrix[(1, 1)] - diag).norm() < 1e-14);
        assert!((s.matrix[(0, 1)] - off).norm() < 1e-14);
        assert!((s.matrix[(1, 0)] - off).norm() < 1e-14);
        assert!(s.unitarity_error() < 1e-14);
        assert!(sc.unitarity_defect(0.05, 1e-9).unwrap() < 1e-14);
    }

    #[test]
    fn closed_pair_keeps_unitarity() {
        // F slots 0, 1; B slots 2, 3; slots 1 and 3 form a closed pair.
        let h0 = op(2, 2, &[0.0, 0.1, 0.0, -0.1], &[(1, 3, c64::new(0.6, 0.0))]);
        let m = continuum(&h0, &[("f", 0, 1.0), ("b", 2, 0.6)]);
        assert_eq!(m.n_pairs(), 1);
        let mut rng = seeded(11);
        let herm = random_hermitian(&mut rng, 4);
        let h1 = BlockOperator::new(h0.signature(), h0.signature().eta_left(herm.as_ref())).unwrap().scale(c64::new(0.2, 0.0));
        let sc = Scatterer::new(&m, &h1).unwrap();
        for e in [-0.4, 0.0, 0.3] {
            let s = sc.s_matrix(e, 1e-9).unwrap();
            assert!(s.unitarity_error() < 1e-10, "E = {e}: {}", s.unitarity_error());
            assert!(sc.unitarity_defect(e, 1e-9).unwrap() < 1e-10);
        }
    }

    #[test]
    fn defect_tracks_unitarity_error() {
        // A free discrete level broadened by eps leaks flux.
        let h0 = op(3, 0, &[0.0, 0.0, 0.05], &[]);
        let m = continuum(&h0, &[("a", 0, 1.0), ("b", 1, 1.0)]);
        let h1 = op(3, 0, &[0.0; 3], &[(0, 2, c64::new(0.2, 0.0)), (1, 2, c64::new(0.1, 0.0))]);
        let sc = Scatterer::new(&m, &h1).unwrap();
        let s = sc.s_matrix(0.0, 0.01).unwrap();
        let err = identity_defect((&s.matrix * s.matrix.adjoint()).as_ref());
        let defect = sc.unitarity_defect(0.0, 0.01).unwrap();
        assert!(err > 1e-4);
        assert!((2.0 * std::f64::consts::PI * defect - err).abs() < 1e-12 * err.max(1.0));
    }

    #[test]
    fn weak_coupling_rate_matches_golden_rule() {
        let (g, rho) = (1e-3, 0.9);
        let h0 = op(2, 0, &[0.0, 0.0], &[]);
        let m = continuum(&h0, &[("a", 0, rho), ("b", 1, rho)]);
        let h1 = op(2, 0, &[0.0, 0.0], &[(0, 1, c64::new(g, 0.0))]);
        let rate = transition_rate(&m, &h1, 0.0, "a", "b", 1e-9).unwrap();
        let golden = 2.0 * std::f64::consts::PI * g * g * rho;
        assert!((rate / golden - 1.0).abs() < 1e-4, "{rate} vs {golden}");
    }

    #[test]
    fn error_cases() {
        let rho = DensityTable::Table {
            energy: vec![-1.0, 1.0],
            rho: vec![1.0, 1.0],
        };
        let h0 = op(2, 0, &[0.0, 0.0], &[]);
        let base = canonical_form(&h0).unwrap();
        let m = base
            .with_channels(vec![
                Channel::continuum("a", 0, rho.clone()).unwrap(),
                Channel::continuum("b", 1, rho).unwrap(),
            ])
            .unwrap();
        let h1 = op(2, 0, &[0.0, 0.0], &[(0, 1, c64::new(0.1, 0.0))]);
        assert!(matches!(transition_rate(&m, &h1, 0.0, "a", "a", 1e-9), Err(Error::InvalidTransition(_))));
        assert!(matches!(transition_rate(&m, &h1, 0.0, "a", "zz", 1e-9), Err(Error::UnknownChannel(_))));
        assert!(matches!(s_matrix(&m, &h1, 2.0, 1e-9), Err(Error::NoOpenChannelAtE { .. })));
        assert!(matches!(s_matrix(&m, &h1, 0.0, -1.0), Err(Error::EpsilonTooLarge { .. })));
        let skew = BlockOperator::from_fn(h0.signature(), |i, j| if i < j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) });
        assert!(matches!(Scatterer::new(&m, &skew), Err(Error::NotPseudoHermitian { .. })));
    }
}
