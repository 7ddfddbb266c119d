//! Free Green's function in the canonical frame and the transition operator
//! `T(E) = H1 [I - G(E) H1]^-1`.

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};
use crate::linalg::{max_abs, GuardedSolver, ZERO};
use crate::scattering::channel::ChannelKind;
use crate::scattering::spectral::{Sector, SpectralModel};

/// Diagonal of the canonical-frame resolvent at one energy.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenFunction {
    pub energy: f64,
    pub eps: f64,
    diag: Vec<c64>,
    /// Set when `E` lies within `eps / 100` of a broadened real level; the
    /// result is valid but dominated by the regularization.
    pub pole_hit: bool,
}

impl GreenFunction {
    pub fn diag(&self) -> &[c64] {
        &self.diag
    }

    pub fn matrix(&self) -> Mat<c64> {
        let n = self.diag.len();
        Mat::from_fn(n, n, |i, j| if i == j { self.diag[i] } else { ZERO })
    }
}

/// Open levels get `1/(E - L + i eps alpha)` (retarded for forward, advanced
/// for backward levels), closed levels `1/(E - L)` without a shift, and
/// levels of continuum channels their wide-band value `-i pi alpha rho(E)`.
pub fn green_function(model: &SpectralModel, energy: f64, eps: f64) -> Result<GreenFunction> {
    let limit = 0.5 * model.closed_gap();
    if !(eps > 0.0) || !eps.is_finite() || eps >= limit {
        return Err(Error::EpsilonTooLarge { eps, limit });
    }
    let mut continuum_rho = vec![None; model.dim()];
    for ch in model.channels() {
        if ch.kind() == ChannelKind::Continuum {
            continuum_rho[ch.levels()[0]] = Some(ch.rho(energy));
        }
    }
    let mut pole_hit = false;
    let diag = model
        .levels()
        .iter()
        .zip(&continuum_rho)
        .map(|(level, rho)| match (level.sector, rho) {
            (Sector::OpenForward | Sector::OpenBackward, Some(rho)) => {
                c64::new(0.0, -std::f64::consts::PI * level.sector.alpha() * rho)
            }
            (Sector::OpenForward | Sector::OpenBackward, None) => {
                let d = energy - level.energy.re;
                if d.abs() < eps / 100.0 {
                    pole_hit = true;
                }
                c64::new(d, eps * level.sector.alpha()).inv()
            }
            _ => (c64::new(energy, 0.0) - level.energy).inv(),
        })
        .collect();
    Ok(GreenFunction {
        energy,
        eps,
        diag,
        pole_hit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransitionMethod {
    /// One factorized solve of `T (I - G H1) = H1`.
    Direct,
    /// Partial sums of `H1 + H1 G H1 + ...`.
    Neumann { tolerance: f64, max_iterations: usize },
}

impl TransitionMethod {
    pub fn neumann() -> Self {
        TransitionMethod::Neumann {
            tolerance: 1e-12,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodUsed {
    Direct,
    Neumann { iterations: usize },
}

/// `T(E)` in the canonical basis.
#[derive(Debug, Clone)]
pub struct TransitionOperator {
    pub energy: f64,
    pub eps: f64,
    pub matrix: Mat<c64>,
    pub method: MethodUsed,
    /// `max |T - H1 - H1 G T|`.
    pub residual: f64,
}

/// Largest accepted condition number of `I - G H1`.
pub const RESOLVENT_CONDITION_CAP: f64 = 1e12;

/// Solves for `T(E)` given `H1` already in the canonical frame.
pub fn transition_canonical(
    h1: MatRef<'_, c64>,
    g: &GreenFunction,
    method: TransitionMethod,
) -> Result<TransitionOperator> {
    let n = h1.nrows();
    let gd = g.diag();
    let gh = Mat::from_fn(n, n, |i, j| gd[i] * h1[(i, j)]);
    let (matrix, used) = match method {
        TransitionMethod::Direct => {
            let a = Mat::from_fn(n, n, |i, j| if i == j { c64::new(1.0, 0.0) - gh[(i, j)] } else { -gh[(i, j)] });
            let solver = GuardedSolver::factor(a.as_ref(), RESOLVENT_CONDITION_CAP).map_err(|s| {
                Error::SingularResolvent {
                    energy: g.energy,
                    condition: s.condition,
                }
            })?;
            (solver.solve_right(h1), MethodUsed::Direct)
        }
        TransitionMethod::Neumann {
            tolerance,
            max_iterations,
        } => {
            let scale = max_abs(h1).max(f64::MIN_POSITIVE);
            let mut t = h1.to_owned();
            let mut term = h1.to_owned();
            let mut iterations = 0;
            loop {
                if iterations >= max_iterations {
                    return Err(Error::NonConvergent {
                        iterations,
                        spectral_radius: spectral_radius(gh.as_ref()),
                    });
                }
                term = &term * &gh;
                t += &term;
                iterations += 1;
                let size = max_abs(term.as_ref());
                if !size.is_finite() || size > 1e12 * scale {
                    return Err(Error::NonConvergent {
                        iterations,
                        spectral_radius: spectral_radius(gh.as_ref()),
                    });
                }
                if size <= tolerance * max_abs(t.as_ref()).max(scale) {
                    break;
                }
            }
            (t, MethodUsed::Neumann { iterations })
        }
    };
    // T = H1 + H1 G T
    let ght = Mat::from_fn(n, n, |i, j| gd[i] * matrix[(i, j)]);
    let rebuilt = h1 + h1 * ght;
    let residual = crate::linalg::max_abs_diff(rebuilt.as_ref(), matrix.as_ref());
    Ok(TransitionOperator {
        energy: g.energy,
        eps: g.eps,
        matrix,
        method: used,
        residual,
    })
}

/// Largest eigenvalue modulus of `G H1`, the convergence radius of the
/// Born series.
pub fn spectral_radius(gh: MatRef<'_, c64>) -> f64 {
    gh.eigenvalues()
        .map(|v| v.iter().map(|z| z.norm()).fold(0.0, f64::max))
        .unwrap_or(f64::NAN)
}
