//! Propagators and trajectories for `i dPhi/dt = H(t) Phi`.
//!
//! Constant Hamiltonians are exponentiated directly. Time-dependent ones use a
//! fourth-order Magnus step whose generator is eta-skew, so every step is
//! pseudounitary; the step count is doubled until the propagator stops
//! changing.

use std::fmt;
use std::sync::Arc;

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::krein::{eta_product, BlockOperator, BlockVector, KreinSignature};
use crate::linalg::{self, commutator, expm, max_abs, max_abs_diff};

pub type HamiltonianFn = Arc<dyn Fn(f64) -> BlockOperator + Send + Sync>;

/// Relative pseudo-Hermiticity tolerance applied to every evaluation of H.
const HERMITICITY_TOL: f64 = 1e-9;

#[derive(Clone)]
pub enum HamiltonianSpec {
    Constant(BlockOperator),
    TimeDependent {
        signature: KreinSignature,
        start: f64,
        end: f64,
        f: HamiltonianFn,
    },
}

impl fmt::Debug for HamiltonianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(h) => f.debug_tuple("Constant").field(h).finish(),
            Self::TimeDependent {
                signature,
                start,
                end,
                ..
            } => f
                .debug_struct("TimeDependent")
                .field("signature", signature)
                .field("start", start)
                .field("end", end)
                .finish_non_exhaustive(),
        }
    }
}

fn check_pseudo_hermitian(h: &BlockOperator) -> Result<()> {
    let tolerance = HERMITICITY_TOL * h.max_abs().max(1.0);
    let residual = h.pseudo_hermitian_residual();
    if residual <= tolerance {
        Ok(())
    } else {
        Err(Error::NotPseudoHermitian {
            residual,
            tolerance,
        })
    }
}

impl HamiltonianSpec {
    pub fn constant(h: BlockOperator) -> Result<Self> {
        check_pseudo_hermitian(&h)?;
        Ok(Self::Constant(h))
    }

    /// `f` is only ever called inside `[start, end]`.
    pub fn time_dependent(
        signature: KreinSignature,
        start: f64,
        end: f64,
        f: impl Fn(f64) -> BlockOperator + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(start < end) || !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidInterval {
                t_minus: start,
                t_plus: end,
            });
        }
        Ok(Self::TimeDependent {
            signature,
            start,
            end,
            f: Arc::new(f),
        })
    }

    pub fn signature(&self) -> KreinSignature {
        match self {
            Self::Constant(h) => h.signature(),
            Self::TimeDependent { signature, .. } => *signature,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant(_))
    }

    /// Evaluates and validates `H(t)`.
    pub fn at(&self, t: f64) -> Result<BlockOperator> {
        match self {
            Self::Constant(h) => Ok(h.clone()),
            Self::TimeDependent {
                signature,
                start,
                end,
                f,
            } => {
                if t < *start || t > *end {
                    return Err(Error::OutsideInterval {
                        time: t,
                        start: *start,
                        end: *end,
                    });
                }
                let h = f(t);
                if h.signature() != *signature {
                    return Err(Error::SignatureMismatch {
                        left: *signature,
                        right: h.signature(),
                    });
                }
                check_pseudo_hermitian(&h)?;
                Ok(h)
            }
        }
    }
}

/// Step control for time-dependent propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorOptions {
    /// Successive step doublings must agree to `tol * max(1, |U|)`.
    pub tolerance: f64,
    pub initial_steps: usize,
    pub max_steps: usize,
}

impl Default for PropagatorOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            initial_steps: 16,
            max_steps: 1 << 16,
        }
    }
}

/// `Upsilon(t_plus, t_minus)` with `Phi(t_plus) = Upsilon Phi(t_minus)`.
pub fn propagator(h: &HamiltonianSpec, t_minus: f64, t_plus: f64) -> Result<BlockOperator> {
    propagator_with(h, t_minus, t_plus, &PropagatorOptions::default())
}

pub fn propagator_with(
    h: &HamiltonianSpec,
    t_minus: f64,
    t_plus: f64,
    opts: &PropagatorOptions,
) -> Result<BlockOperator> {
    if !(t_plus > t_minus) || !t_minus.is_finite() || !t_plus.is_finite() {
        return Err(Error::InvalidInterval { t_minus, t_plus });
    }
    let sig = h.signature();
    match h {
        HamiltonianSpec::Constant(op) => Ok(BlockOperator::new(sig, constant_step(op, t_plus - t_minus))?),
        HamiltonianSpec::TimeDependent { .. } => {
            // Fail fast on the endpoints before integrating.
            h.at(t_minus)?;
            h.at(t_plus)?;
            let mut steps = opts.initial_steps.max(1);
            let mut coarse = magnus(h, t_minus, t_plus, steps)?;
            loop {
                let next = steps * 2;
                if next > opts.max_steps {
                    let change = f64::NAN;
                    return Err(Error::IntegrationFailure { steps, change });
                }
                let fine = magnus(h, t_minus, t_plus, next)?;
                let change = max_abs_diff(fine.as_ref(), coarse.as_ref());
                let scale = max_abs(fine.as_ref()).max(1.0);
                if change <= opts.tolerance * scale {
                    return BlockOperator::new(sig, fine);
                }
                if next * 2 > opts.max_steps {
                    return Err(Error::IntegrationFailure {
                        steps: next,
                        change,
                    });
                }
                coarse = fine;
                steps = next;
            }
        }
    }
}

fn constant_step(h: &BlockOperator, dt: f64) -> Mat<c64> {
    expm(linalg::scaled(h.data(), c64::new(0.0, -dt)).as_ref())
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // sqrt(3)/6
const MAGNUS_COMMUTATOR: f64 = 0.144_337_567_297_406_4; // sqrt(3)/12

fn magnus(h: &HamiltonianSpec, a: f64, b: f64, steps: usize) -> Result<Mat<c64>> {
    let n = h.signature().dim();
    let dt = (b - a) / steps as f64;
    let minus_i = c64::new(0.0, -1.0);
    let mut u = linalg::identity(n);
    for k in 0..steps {
        let t0 = a + dt * k as f64;
        let a1 = linalg::scaled(h.at(t0 + (0.5 - GAUSS_OFFSET) * dt)?.data(), minus_i);
        let a2 = linalg::scaled(h.at(t0 + (0.5 + GAUSS_OFFSET) * dt)?.data(), minus_i);
        let comm = commutator(a2.as_ref(), a1.as_ref());
        let omega = Mat::from_fn(n, n, |i, j| {
            (a1[(i, j)] + a2[(i, j)]) * (0.5 * dt) + comm[(i, j)] * (MAGNUS_COMMUTATOR * dt * dt)
        });
        u = expm(omega.as_ref()) * u;
    }
    Ok(u)
}

/// Sampled solution of the Schrödinger equation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<BlockVector>,
    /// `(Phi; Phi)` at each sample.
    pub eta_norms: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `max_k |(Phi_k; Phi_k) - (Phi_0; Phi_0)|`.
    pub fn eta_norm_drift(&self) -> f64 {
        let first = self.eta_norms.first().copied().unwrap_or(0.0);
        self.eta_norms
            .iter()
            .map(|v| (v - first).abs())
            .fold(0.0, f64::max)
    }

    /// Largest Hilbert norm squared along the trajectory.
    pub fn max_hilbert_norm_sqr(&self) -> f64 {
        self.states
            .iter()
            .map(BlockVector::hilbert_norm_sqr)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub propagator: PropagatorOptions,
    /// Allowed eta-norm drift relative to `max(1, max_t |Phi(t)|^2)`.
    pub drift_bound: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            propagator: PropagatorOptions::default(),
            drift_bound: 1e-8,
        }
    }
}

pub fn evolve(
    h: &HamiltonianSpec,
    initial: &BlockVector,
    t_minus: f64,
    t_plus: f64,
    n_samples: usize,
) -> Result<Trajectory> {
    evolve_with(h, initial, t_minus, t_plus, n_samples, &EvolveOptions::default())
}

/// Samples `n_samples` equally spaced times in `[t_minus, t_plus]`.
pub fn evolve_with(
    h: &HamiltonianSpec,
    initial: &BlockVector,
    t_minus: f64,
    t_plus: f64,
    n_samples: usize,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    if n_samples < 2 {
        return Err(Error::InsufficientGrid {
            points: n_samples,
            required: 2,
        });
    }
    if !(t_plus > t_minus) {
        return Err(Error::InvalidInterval { t_minus, t_plus });
    }
    if initial.signature() != h.signature() {
        return Err(Error::SignatureMismatch {
            left: h.signature(),
            right: initial.signature(),
        });
    }
    let dt = (t_plus - t_minus) / (n_samples - 1) as f64;
    let times: Vec<f64> = (0..n_samples)
        .map(|k| if k + 1 == n_samples { t_plus } else { t_minus + dt * k as f64 })
        .collect();

    let mut states = Vec::with_capacity(n_samples);
    states.push(initial.clone());
    for k in 1..n_samples {
        let next = match h {
            // Propagating from t_minus each time avoids compounding round-off.
            HamiltonianSpec::Constant(_) => {
                propagator_with(h, t_minus, times[k], &opts.propagator)?.apply(initial)?
            }
            HamiltonianSpec::TimeDependent { .. } => {
                propagator_with(h, times[k - 1], times[k], &opts.propagator)?.apply(&states[k - 1])?
            }
        };
        states.push(next);
    }
    let eta_norms: Vec<f64> = states.iter().map(BlockVector::eta_norm).collect();
    let trajectory = Trajectory {
        times,
        states,
        eta_norms,
    };
    let drift = trajectory.eta_norm_drift();
    let bound = opts.drift_bound * trajectory.max_hilbert_norm_sqr().max(1.0);
    if drift > bound {
        return Err(Error::NormDrift { drift, bound });
    }
    Ok(trajectory)
}

/// Maximum drift of `(Phi; Z Phi)` along the trajectory, after verifying
/// `[Z, H(t)] = 0` at every sample time.
pub fn conserved_commutant_check(
    h: &HamiltonianSpec,
    z: &BlockOperator,
    trajectory: &Trajectory,
) -> Result<f64> {
    if z.signature() != h.signature() {
        return Err(Error::SignatureMismatch {
            left: h.signature(),
            right: z.signature(),
        });
    }
    for &t in &trajectory.times {
        let ht = h.at(t)?;
        let residual = max_abs(commutator(z.data(), ht.data()).as_ref());
        let tolerance = 1e-9 * (z.max_abs() * ht.max_abs()).max(1.0);
        if residual > tolerance {
            return Err(Error::CommutatorViolation { time: t, residual });
        }
    }
    let values = trajectory
        .states
        .iter()
        .map(|phi| eta_product(phi, &z.apply(phi)?))
        .collect::<Result<Vec<_>>>()?;
    let first = values.first().copied().unwrap_or_default();
    Ok(values.iter().map(|v| (v - first).norm()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;
    use crate::random::{random_pseudo_hermitian, random_vector, seeded};

    fn sig(nf: usize, nb: usize) -> KreinSignature {
        KreinSignature::new(nf, nb).unwrap()
    }

    fn driven(s: KreinSignature, seed: u64) -> HamiltonianSpec {
        let mut rng = seeded(seed);
        let h0 = random_pseudo_hermitian(&mut rng, s, 1.0);
        let h1 = random_pseudo_hermitian(&mut rng, s, 0.5);
        HamiltonianSpec::time_dependent(s, 0.0, 3.0, move |t| {
            h0.add(&h1.scale(c64::new((2.0 * t).sin(), 0.0))).unwrap()
        })
        .unwrap()
    }

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let s = sig(2, 2);
        let h = HamiltonianSpec::constant(BlockOperator::zeros(s)).unwrap();
        assert_eq!(propagator(&h, 0.0, 5.0).unwrap(), BlockOperator::identity(s));
    }

    #[test]
    fn diagonal_hamiltonian_gives_phases() {
        let s = sig(2, 1);
        let e = [0.3, -1.2, 2.5];
        let h = HamiltonianSpec::constant(BlockOperator::diagonal(s, &e).unwrap()).unwrap();
        let u = propagator(&h, 1.0, 3.5).unwrap();
        for (k, ek) in e.iter().enumerate() {
            let expected = c64::from_polar(1.0, -ek * 2.5);
            assert!((u.data()[(k, k)] - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_backwards_interval() {
        let h = HamiltonianSpec::constant(BlockOperator::zeros(sig(1, 0))).unwrap();
        assert!(matches!(
            propagator(&h, 1.0, 1.0),
            Err(Error::InvalidInterval { .. })
        ));
    }

    #[test]
    fn rejects_non_pseudo_hermitian() {
        let s = sig(1, 1);
        let h = BlockOperator::from_fn(s, |i, j| if i != j { c64::new(1.0, 0.0) } else { ZERO });
        assert!(matches!(
            HamiltonianSpec::constant(h.clone()),
            Err(Error::NotPseudoHermitian { .. })
        ));
        let td = HamiltonianSpec::time_dependent(s, 0.0, 1.0, move |_| h.clone()).unwrap();
        assert!(matches!(
            propagator(&td, 0.0, 1.0),
            Err(Error::NotPseudoHermitian { .. })
        ));
    }

    #[test]
    fn constant_propagators_are_pseudounitary() {
        let mut rng = seeded(5);
        for _ in 0..10 {
            let s = sig(3, 2);
            let h = HamiltonianSpec::constant(random_pseudo_hermitian(&mut rng, s, 1.0)).unwrap();
            let u = propagator(&h, -0.5, 1.5).unwrap();
            let scale = u.max_abs().max(1.0);
            assert!(u.pseudounitary_residual().max() <= 1e-10 * scale * scale);
        }
    }

    #[test]
    fn magnus_reduces_to_exponential_for_constant_h() {
        let s = sig(2, 2);
        let mut rng = seeded(8);
        let h = random_pseudo_hermitian(&mut rng, s, 1.0);
        let hc = h.clone();
        let td = HamiltonianSpec::time_dependent(s, 0.0, 2.0, move |_| hc.clone()).unwrap();
        let exact = propagator(&HamiltonianSpec::constant(h).unwrap(), 0.0, 2.0).unwrap();
        let stepped = propagator(&td, 0.0, 2.0).unwrap();
        assert!(max_abs_diff(exact.data(), stepped.data()) < 1e-11);
    }

    #[test]
    fn time_dependent_composition_law() {
        let h = driven(sig(2, 2), 3);
        let ac = propagator(&h, 0.0, 3.0).unwrap();
        let ab = propagator(&h, 0.0, 1.2).unwrap();
        let bc = propagator(&h, 1.2, 3.0).unwrap();
        let composed = bc.compose(&ab).unwrap();
        assert!(max_abs_diff(ac.data(), composed.data()) < 1e-9);
        assert!(ac.pseudounitary_residual().max() < 1e-8);
    }

    #[test]
    fn outside_interval_is_reported() {
        let h = driven(sig(1, 1), 1);
        assert!(matches!(
            propagator(&h, 0.0, 4.0),
            Err(Error::OutsideInterval { .. })
        ));
    }

    #[test]
    fn integration_failure_when_steps_capped() {
        let h = driven(sig(2, 1), 2);
        let opts = PropagatorOptions {
            tolerance: 1e-15,
            initial_steps: 2,
            max_steps: 8,
        };
        assert!(matches!(
            propagator_with(&h, 0.0, 3.0, &opts),
            Err(Error::IntegrationFailure { .. })
        ));
    }

    #[test]
    fn forward_eigenvector_evolves_by_phase() {
        let s = sig(2, 1);
        let h = HamiltonianSpec::constant(BlockOperator::diagonal(s, &[0.7, -0.2, 1.1]).unwrap()).unwrap();
        let traj = evolve(&h, &BlockVector::unit(s, 0), 0.0, 10.0, 11).unwrap();
        for phi in &traj.states {
            assert!((phi.data()[0].norm() - 1.0).abs() < 1e-14);
            assert_eq!(phi.data()[1], ZERO);
        }
    }

    #[test]
    fn cross_products_are_conserved() {
        let h = driven(sig(2, 2), 11);
        let mut rng = seeded(12);
        let a = random_vector(&mut rng, h.signature());
        let b = random_vector(&mut rng, h.signature());
        let ta = evolve(&h, &a, 0.0, 3.0, 7).unwrap();
        let tb = evolve(&h, &b, 0.0, 3.0, 7).unwrap();
        let p0 = eta_product(&a, &b).unwrap();
        for (x, y) in ta.states.iter().zip(&tb.states) {
            assert!((eta_product(x, y).unwrap() - p0).norm() < 1e-8);
        }
    }

    #[test]
    fn commuting_observables_are_conserved() {
        let s = sig(2, 2);
        let mut rng = seeded(13);
        let hm = random_pseudo_hermitian(&mut rng, s, 1.0);
        let h = HamiltonianSpec::constant(hm.clone()).unwrap();
        let traj = evolve(&h, &random_vector(&mut rng, s), 0.0, 2.0, 9).unwrap();
        let id = BlockOperator::identity(s);
        assert!(conserved_commutant_check(&h, &id, &traj).unwrap() < 1e-8);
        let scale = traj.max_hilbert_norm_sqr().max(1.0);
        assert!(conserved_commutant_check(&h, &hm, &traj).unwrap() < 1e-8 * scale);
    }

    #[test]
    fn forward_projector_rejected_under_coupling() {
        let s = sig(1, 1);
        let hm = BlockOperator::from_fn(s, |i, j| match (i, j) {
            (0, 1) => c64::new(-0.3, 0.0),
            (1, 0) => c64::new(0.3, 0.0),
            _ => ZERO,
        });
        let h = HamiltonianSpec::constant(hm).unwrap();
        let traj = evolve(&h, &BlockVector::unit(s, 0), 0.0, 1.0, 3).unwrap();
        let pf = BlockOperator::diagonal(s, &[1.0, 0.0]).unwrap();
        assert!(matches!(
            conserved_commutant_check(&h, &pf, &traj),
            Err(Error::CommutatorViolation { .. })
        ));
    }

    #[test]
    fn closed_channel_growth_keeps_eta_norm() {
        // Strong F-B coupling gives a complex-conjugate eigenvalue pair.
        let s = sig(1, 1);
        let hm = BlockOperator::from_fn(s, |i, j| match (i, j) {
            (0, 1) => c64::new(-1.0, 0.0),
            (1, 0) => c64::new(1.0, 0.0),
            _ => ZERO,
        });
        let h = HamiltonianSpec::constant(hm).unwrap();
        let u = propagator(&h, 0.0, 5.0).unwrap();
        assert!(u.max_abs() > 10.0);
        let traj = evolve(&h, &BlockVector::unit(s, 0), 0.0, 5.0, 6).unwrap();
        assert!(traj.max_hilbert_norm_sqr() > 100.0);
        assert!(traj.eta_norm_drift() <= 1e-8 * traj.max_hilbert_norm_sqr());
    }
}
