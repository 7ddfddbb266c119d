//! Quartic coupling constants of the two-sector scalar model: discriminant,
//! the hyperbolic boost `W(theta)` that re-mixes the sectors, and the
//! first-order total cross sections.

use faer::{c64, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krein::{BlockOperator, KreinSignature};
use crate::linalg::{self, ZERO};

/// `hbar c` in joule metres (CODATA 2018, exact SI constants).
pub const HBAR_C: f64 = 1.054_571_817e-34 * 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingConstants {
    pub zeta_f: f64,
    pub zeta_b: f64,
    pub xi: f64,
}

impl CouplingConstants {
    pub fn new(zeta_f: f64, zeta_b: f64, xi: f64) -> Result<Self> {
        let c = Self { zeta_f, zeta_b, xi };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("zeta_f", self.zeta_f), ("zeta_b", self.zeta_b)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain {
                    what: "coupling constant",
                    detail: format!("{name} = {v} must be finite and non-negative"),
                });
            }
        }
        if !self.xi.is_finite() {
            return Err(Error::Domain {
                what: "coupling constant",
                detail: format!("xi = {} must be finite", self.xi),
            });
        }
        Ok(())
    }

    /// The 2x2 operator `[[zeta_f, -xi], [xi, zeta_b]]` on one forward and
    /// one backward slot (pseudo-Hermitian).
    pub fn matrix(&self) -> BlockOperator {
        let s = KreinSignature::new(1, 1).expect("1+1 signature");
        let m = [[self.zeta_f, -self.xi], [self.xi, self.zeta_b]];
        BlockOperator::from_fn(s, |i, j| c64::new(m[i][j], 0.0))
    }

    /// Reads couplings back out of a matrix of the [`Self::matrix`] form.
    pub fn from_matrix(m: &BlockOperator) -> Self {
        let d = m.data();
        Self {
            zeta_f: d[(0, 0)].re,
            zeta_b: d[(1, 1)].re,
            xi: d[(1, 0)].re,
        }
    }
}

/// `D = (zeta_f - zeta_b)^2 / 4 - xi^2`.
pub fn discriminant(c: &CouplingConstants) -> f64 {
    let half = 0.5 * (c.zeta_f - c.zeta_b);
    half * half - c.xi * c.xi
}

fn half_artanh(what: &'static str, num: f64, den: f64) -> Result<f64> {
    if num == 0.0 {
        return Ok(0.0);
    }
    let arg = num / den;
    if !(arg.abs() < 1.0) {
        return Err(Error::Domain {
            what,
            detail: format!("artanh argument {arg} has magnitude >= 1"),
        });
    }
    Ok(-0.5 * arg.atanh())
}

/// Boost angle that removes the sector mixing; needs `D > 0`.
pub fn decoupling_angle(c: &CouplingConstants) -> Result<f64> {
    half_artanh("decoupling angle", 2.0 * c.xi, c.zeta_f - c.zeta_b)
}

/// Boost angle that equalizes the diagonal couplings; needs `D < 0`.
pub fn equalizing_angle(c: &CouplingConstants) -> Result<f64> {
    half_artanh("equalizing angle", c.zeta_f - c.zeta_b, 2.0 * c.xi)
}

/// `W(theta)` with the identity pairing between forward and backward slots.
pub fn boost_w(theta: f64, signature: KreinSignature) -> Result<BlockOperator> {
    let n = signature.n_forward();
    boost_w_paired(theta, signature, linalg::identity(n).as_ref())
}

/// `[[cosh(theta) I, sinh(theta) U], [sinh(theta) U^H, cosh(theta) I]]` for a
/// unitary forward-backward pairing `U`.
pub fn boost_w_paired(
    theta: f64,
    signature: KreinSignature,
    pairing: MatRef<'_, c64>,
) -> Result<BlockOperator> {
    let n = signature.n_forward();
    if signature.n_backward() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: signature.n_backward(),
        });
    }
    if pairing.nrows() != n || pairing.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: pairing.nrows(),
        });
    }
    let defect = linalg::identity_defect((pairing.adjoint() * pairing).as_ref());
    if defect > 1e-12 {
        return Err(Error::Domain {
            what: "boost pairing",
            detail: format!("pairing is not unitary (defect {defect:.3e})"),
        });
    }
    let (ch, sh) = (theta.cosh(), theta.sinh());
    Ok(BlockOperator::from_fn(signature, |i, j| {
        match (i < n, j < n) {
            (true, true) => if i == j { c64::new(ch, 0.0) } else { ZERO },
            (false, false) => if i == j { c64::new(ch, 0.0) } else { ZERO },
            (true, false) => pairing[(i, j - n)] * sh,
            (false, true) => pairing[(j, i - n)].conj() * sh,
        }
    }))
}

/// `W X W^-1`, with `W^-1` the pseudo-adjoint of `W`.
pub fn similarity(w: &BlockOperator, x: &BlockOperator) -> Result<BlockOperator> {
    w.compose(x)?.compose(&w.pseudo_adjoint())
}

/// Couplings after the boost `W(theta)`.
pub fn boosted(c: &CouplingConstants, theta: f64) -> CouplingConstants {
    let m = c.matrix();
    let w = boost_w(theta, m.signature()).expect("1+1 signature");
    CouplingConstants::from_matrix(&similarity(&w, &m).expect("matching signatures"))
}

/// First-order total cross sections in square metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSections {
    pub ff: f64,
    pub bb: f64,
    pub bf: f64,
    pub fb: f64,
}

/// Cross sections at centre-of-mass energy `e_cm` (joules).
pub fn cross_sections(c: &CouplingConstants, e_cm: f64) -> Result<CrossSections> {
    if !(e_cm > 0.0) || !e_cm.is_finite() {
        return Err(Error::Domain {
            what: "centre-of-mass energy",
            detail: format!("{e_cm} must be positive"),
        });
    }
    Ok(cross_sections_at_length(c, HBAR_C / e_cm))
}

/// Cross sections given the reduced length `hbar c / E_cm` in metres.
pub fn cross_sections_at_length(c: &CouplingConstants, length: f64) -> CrossSections {
    let k = 9.0 * length * length / (8.0 * std::f64::consts::PI);
    let bf = k * c.xi * c.xi;
    CrossSections {
        ff: k * c.zeta_f * c.zeta_f,
        bb: k * c.zeta_b * c.zeta_b,
        bf,
        fb: bf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, GuardedSolver};
    use faer::Mat;
    use crate::random::seeded;
    use rand::Rng;

    fn boost_inverse_dense(w: &BlockOperator) -> Option<Mat<c64>> {
        let solver = GuardedSolver::factor(w.data(), 1e12).ok()?;
        Some(solver.solve(linalg::identity(w.dim()).as_ref()))
    }

    #[test]
    fn discriminant_examples() {
        let c = CouplingConstants::new(1.0, 1.0, 0.5).unwrap();
        assert_eq!(discriminant(&c), -0.25);
        let c = CouplingConstants::new(3.0, 1.0, 0.0).unwrap();
        assert_eq!(discriminant(&c), 1.0);
        let mut rng = seeded(1);
        for _ in 0..50 {
            let (f, b, x) = (rng.random::<f64>() * 4.0, rng.random::<f64>() * 4.0, rng.random::<f64>() * 2.0 - 1.0);
            let c = CouplingConstants::new(f, b, x).unwrap();
            let brute = (f - b) * (f - b) / 4.0 - x * x;
            assert!((discriminant(&c) - brute).abs() <= 1e-15 * brute.abs().max(1.0));
        }
    }

    #[test]
    fn negative_couplings_rejected() {
        assert!(matches!(
            CouplingConstants::new(-1.0, 0.0, 0.0),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn trivial_angles() {
        let c = CouplingConstants::new(2.0, 1.0, 0.0).unwrap();
        assert_eq!(decoupling_angle(&c).unwrap(), 0.0);
        let c = CouplingConstants::new(1.5, 1.5, 0.3).unwrap();
        assert_eq!(equalizing_angle(&c).unwrap(), 0.0);
    }

    #[test]
    fn angles_outside_domain() {
        let c = CouplingConstants::new(1.0, 1.0, 0.5).unwrap();
        assert!(matches!(decoupling_angle(&c), Err(Error::Domain { .. })));
        let c = CouplingConstants::new(3.0, 1.0, 0.5).unwrap();
        assert!(matches!(equalizing_angle(&c), Err(Error::Domain { .. })));
    }

    #[test]
    fn decoupling_example() {
        let c = CouplingConstants::new(3.0, 1.0, 0.5).unwrap();
        assert_eq!(discriminant(&c), 0.75);
        let theta = decoupling_angle(&c).unwrap();
        assert_eq!(theta, -0.5 * 0.5f64.atanh());
        let b = boosted(&c, theta);
        assert!(b.xi.abs() <= 1e-12);
    }

    #[test]
    fn equalizing_example() {
        let c = CouplingConstants::new(1.2, 0.4, 0.9).unwrap();
        assert!(discriminant(&c) < 0.0);
        let b = boosted(&c, equalizing_angle(&c).unwrap());
        assert!((b.zeta_f - b.zeta_b).abs() <= 1e-12);
    }

    #[test]
    fn boost_is_pseudounitary_group() {
        let s = KreinSignature::new(2, 2).unwrap();
        assert_eq!(boost_w(0.0, s).unwrap(), BlockOperator::identity(s));
        let a = boost_w(0.4, s).unwrap();
        let b = boost_w(-0.9, s).unwrap();
        assert!(a.is_pseudounitary(1e-12));
        let ab = a.compose(&b).unwrap();
        let direct = boost_w(-0.5, s).unwrap();
        assert!(max_abs_diff(ab.data(), direct.data()) < 1e-14);
        let inv = a.compose(&boost_w(-0.4, s).unwrap()).unwrap();
        assert!(linalg::identity_defect(inv.data()) < 1e-14);
        let dense = boost_inverse_dense(&a).unwrap();
        assert!(max_abs_diff(dense.as_ref(), a.pseudo_adjoint().data()) < 1e-13);
    }

    #[test]
    fn boost_needs_equal_blocks() {
        let s = KreinSignature::new(2, 1).unwrap();
        assert!(matches!(boost_w(0.1, s), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn boost_keeps_free_part_invariant() {
        // W commutes with any operator that acts identically on paired slots.
        let s = KreinSignature::new(1, 1).unwrap();
        let w = boost_w(0.7, s).unwrap();
        let free = BlockOperator::diagonal(s, &[2.5, 2.5]).unwrap();
        let out = similarity(&w, &free).unwrap();
        assert!(max_abs_diff(out.data(), free.data()) < 1e-13);
    }

    #[test]
    fn cross_section_examples() {
        let c = CouplingConstants::new(0.0, 0.0, 1e-10).unwrap();
        let s = cross_sections_at_length(&c, 1e-15);
        let exact = 9.0 * 1e-20 * 1e-30 / (8.0 * std::f64::consts::PI);
        assert!((s.bf - exact).abs() <= 1e-15 * exact);
        assert!((s.bf / 3.58e-51 - 1.0).abs() < 0.01);
        assert_eq!(s.bf, s.fb);
        assert_eq!(s.ff, 0.0);

        let c = CouplingConstants::new(0.5, 0.2, 0.0).unwrap();
        assert_eq!(cross_sections(&c, 1e-11).unwrap().bf, 0.0);
        let one = cross_sections(&c, 1e-11).unwrap();
        let two = cross_sections(&c, 2e-11).unwrap();
        assert!((one.ff / two.ff - 4.0).abs() < 1e-12);
        assert!(cross_sections(&c, 0.0).is_err());
    }
}
