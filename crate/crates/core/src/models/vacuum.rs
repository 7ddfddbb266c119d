//! Two-channel vacuum problem: one forward and one backward vacuum state
//! coupled through the quartic interaction, with input data `cos(theta)` on
//! the forward channel at `t = 0` and `e^{i psi} sin(theta)` on the backward
//! channel at `t = tau`.
//!
//! For `D < 0` the evolution matrix has the complex pair
//! `E_bar -/+ i mu E1`, and everything below is closed form. Quantities that
//! grow like `e^{mu E1 tau}` are evaluated with that factor divided out, so
//! the formulas stay finite for arbitrarily long intervals.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krein::{BlockOperator, BlockVector, KreinSignature};
use crate::models::coupling::{discriminant, CouplingConstants};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VacuumParams {
    pub couplings: CouplingConstants,
    /// Free vacuum energy `E0`.
    pub e0: f64,
    /// Interaction energy scale `E1 > 0`.
    pub e1: f64,
    /// Interval length.
    pub tau: f64,
    pub theta: f64,
    pub psi: f64,
}

/// Derived constants of the closed-form branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VacuumConstants {
    pub e_bar: f64,
    pub kappa: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl VacuumParams {
    pub fn validate(&self) -> Result<()> {
        self.couplings.validate()?;
        let finite = [self.e0, self.e1, self.tau, self.theta, self.psi]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Domain {
                what: "vacuum parameters",
                detail: "all parameters must be finite".into(),
            });
        }
        if !(self.e1 > 0.0) {
            return Err(Error::Domain {
                what: "vacuum parameters",
                detail: format!("e1 = {} must be positive", self.e1),
            });
        }
        if !(self.tau > 0.0) {
            return Err(Error::Domain {
                what: "vacuum parameters",
                detail: format!("tau = {} must be positive", self.tau),
            });
        }
        Ok(())
    }

    /// Fails with [`Error::ClosedFormInvalid`] unless `D < 0`.
    pub fn constants(&self) -> Result<VacuumConstants> {
        self.validate()?;
        let c = &self.couplings;
        let d = discriminant(c);
        if !(d < 0.0) {
            return Err(Error::ClosedFormInvalid { discriminant: d });
        }
        let kappa = 0.5 * (c.zeta_f - c.zeta_b);
        let mu = (-d).sqrt();
        Ok(VacuumConstants {
            e_bar: self.e0 + self.e1 * 0.5 * (c.zeta_f + c.zeta_b),
            kappa,
            mu,
            sigma: (mu / c.xi).atan2(kappa / c.xi),
        })
    }

    /// `mu E1 tau`.
    pub fn decay_exponent(&self) -> Result<f64> {
        Ok(self.constants()?.mu * self.e1 * self.tau)
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        Self { tau, ..*self }
    }

    /// Input data `(cos theta, e^{i psi} sin theta)`.
    pub fn input(&self) -> (c64, c64) {
        (
            c64::new(self.theta.cos(), 0.0),
            c64::from_polar(self.theta.sin(), self.psi),
        )
    }
}

/// The evolution operator and the matrix of eta-products it comes from.
#[derive(Debug, Clone)]
pub struct VacuumHamiltonian {
    /// `K = diag(alpha) M`, the operator in `i dPhi/dt = K Phi`.
    pub operator: BlockOperator,
    /// `M_{YY'} = (Psi^Y; H Psi^Y')`.
    pub eta_matrix: Mat<c64>,
}

pub fn vacuum_signature() -> KreinSignature {
    KreinSignature::new(1, 1).expect("1+1 signature")
}

pub fn vacuum_hamiltonian(p: &VacuumParams) -> VacuumHamiltonian {
    let c = &p.couplings;
    let m = [
        [p.e0 + p.e1 * c.zeta_f, -p.e1 * c.xi],
        [-p.e1 * c.xi, -p.e0 - p.e1 * c.zeta_b],
    ];
    let alpha = [1.0, -1.0];
    let eta_matrix = Mat::from_fn(2, 2, |i, j| c64::new(m[i][j], 0.0));
    let operator = BlockOperator::from_fn(vacuum_signature(), |i, j| c64::new(alpha[i] * m[i][j], 0.0));
    VacuumHamiltonian {
        operator,
        eta_matrix,
    }
}

/// `[E_bar - i mu E1, E_bar + i mu E1]`, the forward label first.
pub fn vacuum_eigenvalues(p: &VacuumParams) -> Result<[c64; 2]> {
    let k = p.constants()?;
    let w = k.mu * p.e1;
    Ok([c64::new(k.e_bar, -w), c64::new(k.e_bar, w)])
}

/// Unnormalized eigensolution `Phi^(Y)(t)`; `forward` selects the solution
/// that decays as `t` grows.
pub fn eigensolution(p: &VacuumParams, forward: bool, t: f64) -> Result<[c64; 2]> {
    let k = p.constants()?;
    let alpha = if forward { 1.0 } else { -1.0 };
    let phase = c64::new(-alpha * k.mu * p.e1 * t, -k.e_bar * t).exp();
    let xi = p.couplings.xi;
    Ok([phase * c64::new(0.0, xi), phase * c64::new(-alpha * k.mu, k.kappa)])
}

// Numerators of C^(F) and e^{x} C^(B) and their shared denominator, all
// multiplied through by e^{-x}.
fn scaled_coefficients(p: &VacuumParams, k: &VacuumConstants) -> (c64, c64, c64) {
    let x = k.mu * p.e1 * p.tau;
    let ex = (-x).exp();
    let (st, ct) = p.theta.sin_cos();
    let a = p.psi + k.e_bar * p.tau;
    let eia = c64::from_polar(1.0, a);
    let em = c64::from_polar(1.0, -k.sigma);
    let ep = c64::from_polar(1.0, k.sigma);
    let den = c64::new(0.0, p.couplings.xi) * (em - ep * (ex * ex));
    let num_f = -eia * (st * ex) + em * ct;
    let num_b = eia * st - ep * (ct * ex);
    (num_f, num_b, den)
}

/// `(C^(F), C^(B))` fitted to the input data. `C^(B)` carries `e^{-mu E1 tau}`
/// and underflows for very long intervals; [`vacuum_solution`] avoids that.
pub fn vacuum_coefficients(p: &VacuumParams) -> Result<(c64, c64)> {
    let k = p.constants()?;
    let (nf, nb, den) = scaled_coefficients(p, &k);
    let x = k.mu * p.e1 * p.tau;
    Ok((nf / den, nb * (-x).exp() / den))
}

/// `(Phi_F(t), Phi_B(t))` for `t` in `[0, tau]`.
pub fn vacuum_solution(p: &VacuumParams, t: f64) -> Result<[c64; 2]> {
    let k = p.constants()?;
    if !(0.0..=p.tau).contains(&t) {
        return Err(Error::OutsideInterval {
            time: t,
            start: 0.0,
            end: p.tau,
        });
    }
    let (nf, nb, den) = scaled_coefficients(p, &k);
    let w = k.mu * p.e1;
    let phase = c64::from_polar(1.0, -k.e_bar * t);
    let decay_f = (-w * t).exp();
    let decay_b = (-w * (p.tau - t)).exp();
    let vf = [c64::new(0.0, p.couplings.xi), c64::new(-k.mu, k.kappa)];
    let vb = [c64::new(0.0, p.couplings.xi), c64::new(k.mu, k.kappa)];
    let cf = nf / den * decay_f;
    let cb = nb / den * decay_b;
    Ok([phase * (cf * vf[0] + cb * vb[0]), phase * (cf * vf[1] + cb * vb[1])])
}

pub fn vacuum_state(p: &VacuumParams, t: f64) -> Result<BlockVector> {
    let [f, b] = vacuum_solution(p, t)?;
    BlockVector::from_slice(vacuum_signature(), &[f, b])
}

/// `([I]_Av, [H]_Av)`. Both are conserved, so the value does not depend on
/// `t`; `t` is still checked against the interval.
pub fn vacuum_expectations(p: &VacuumParams, t: f64) -> Result<(f64, f64)> {
    let k = p.constants()?;
    if !(0.0..=p.tau).contains(&t) {
        return Err(Error::OutsideInterval {
            time: t,
            start: 0.0,
            end: p.tau,
        });
    }
    let x = k.mu * p.e1 * p.tau;
    let (e1x, e2x) = ((-x).exp(), (-2.0 * x).exp());
    let e3x = e1x * e2x;
    let (ss, cs) = k.sigma.sin_cos();
    let a = p.psi + k.e_bar * p.tau;
    let s2t = (2.0 * p.theta).sin();
    let c2t = (2.0 * p.theta).cos();
    // Every term below is the textbook expression times 2 e^{-2x}.
    let delta = 1.0 + e2x * e2x - 2.0 * (2.0 * k.sigma).cos() * e2x;
    let sinh = e1x - e3x;
    let cosh = e1x + e3x;
    let identity = 2.0 * ss * (ss * c2t * 2.0 * e2x - s2t * a.sin() * sinh) / delta;
    let a_term = 2.0 * p.couplings.xi * ss * ss * (cs * 2.0 * e2x - s2t * a.cos() * cosh) / delta;
    Ok((identity, k.e_bar * identity + p.e1 * a_term))
}

/// Leading large-interval behaviour of `([I]_Av, [H]_Av)`.
pub fn vacuum_asymptotics(p: &VacuumParams) -> Result<(f64, f64)> {
    let k = p.constants()?;
    let x = k.mu * p.e1 * p.tau;
    let a = p.psi + k.e_bar * p.tau;
    let pre = -2.0 * k.sigma.sin() * (2.0 * p.theta).sin() * (-x).exp();
    let h = k.e_bar * a.sin() + p.e1 * p.couplings.xi * k.sigma.sin() * a.cos();
    Ok((pre * a.sin(), pre * h))
}

/// Least-squares decay rates of the expectation-value envelopes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// Fitted `d ln|[I]_Av| / d tau` with the oscillation divided out.
    pub identity_rate: f64,
    /// Same for `[H]_Av`.
    pub hamiltonian_rate: f64,
    /// Predicted rate `-mu E1`.
    pub expected: f64,
    pub identity_points: usize,
    pub hamiltonian_points: usize,
}

/// Window of `mu E1 tau` over which the fit is taken.
pub const DECAY_WINDOW: (f64, f64) = (5.0, 30.0);

/// `n` interval lengths evenly covering [`DECAY_WINDOW`].
pub fn decay_grid(p: &VacuumParams, n: usize) -> Result<Vec<f64>> {
    let w = p.constants()?.mu * p.e1;
    let (lo, hi) = DECAY_WINDOW;
    if n < 2 {
        return Err(Error::InsufficientGrid {
            points: n,
            required: 3,
        });
    }
    Ok((0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64) / w)
        .collect())
}

/// Fits the decay of `|[I]_Av|` and `|[H]_Av|` over the supplied interval
/// lengths (points outside [`DECAY_WINDOW`] are ignored). The known
/// oscillating factor is divided out; samples near its zeros are skipped.
pub fn vacuum_decay_fit(p: &VacuumParams, taus: &[f64]) -> Result<DecayFit> {
    let k = p.constants()?;
    let w = k.mu * p.e1;
    if (2.0 * p.theta).sin().abs() < 1e-6 {
        return Err(Error::Domain {
            what: "decay fit",
            detail: "sin(2 theta) vanishes, so the leading envelope term is absent".into(),
        });
    }
    let (lo, hi) = DECAY_WINDOW;
    let h_amp = k.e_bar.hypot(p.e1 * p.couplings.xi * k.sigma.sin());
    let mut pts_i = Vec::new();
    let mut pts_h = Vec::new();
    for &tau in taus {
        let x = w * tau;
        if !(x >= lo * (1.0 - 1e-12) && x <= hi * (1.0 + 1e-12)) {
            continue;
        }
        let q = p.with_tau(tau);
        let (vi, vh) = vacuum_expectations(&q, 0.0)?;
        let a = p.psi + k.e_bar * tau;
        let osc_i = a.sin();
        if osc_i.abs() > 0.1 {
            pts_i.push((tau, vi.abs().ln() - osc_i.abs().ln()));
        }
        let osc_h = k.e_bar * a.sin() + p.e1 * p.couplings.xi * k.sigma.sin() * a.cos();
        if osc_h.abs() > 0.1 * h_amp {
            pts_h.push((tau, vh.abs().ln() - osc_h.abs().ln()));
        }
    }
    Ok(DecayFit {
        identity_rate: slope(&pts_i)?,
        hamiltonian_rate: slope(&pts_h)?,
        expected: -w,
        identity_points: pts_i.len(),
        hamiltonian_points: pts_h.len(),
    })
}

fn slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InsufficientGrid {
            points: points.len(),
            required: 3,
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}
