//! Dense complex helpers shared by the physics modules.
//!
//! Everything here works on `faer` matrices of [`c64`]. The guarded solver is
//! the one place where ill-conditioning is detected; callers turn its
//! [`Singular`] into their own domain error.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, MatRef};

/// Complex zero.
pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
/// Complex one.
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
/// The imaginary unit.
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

/// Largest absolute entry. This is the norm used for every tolerance check in
/// the crate.
pub fn max_abs(m: MatRef<'_, c64>) -> f64 {
    let mut out = 0.0_f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out = out.max(m[(i, j)].norm());
        }
    }
    out
}

/// `max_abs(a - b)` without allocating.
pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    assert_eq!(a.nrows(), b.nrows());
    assert_eq!(a.ncols(), b.ncols());
    let mut out = 0.0_f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            out = out.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    out
}

/// `max_abs(a - I)`.
pub fn identity_defect(a: MatRef<'_, c64>) -> f64 {
    let mut out = 0.0_f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let d = if i == j { a[(i, j)] - ONE } else { a[(i, j)] };
            out = out.max(d.norm());
        }
    }
    out
}

pub fn identity(n: usize) -> Mat<c64> {
    Mat::identity(n, n)
}

pub fn scaled(m: MatRef<'_, c64>, s: c64) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

/// `[a, b] = ab - ba`.
pub fn commutator(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Mat<c64> {
    a * b - b * a
}

pub fn adjoint(m: MatRef<'_, c64>) -> Mat<c64> {
    m.adjoint().to_owned()
}

/// Induced 1-norm (max column sum).
pub fn norm_one(m: MatRef<'_, c64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Failure of [`GuardedSolver::factor`]: the matrix is numerically singular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singular {
    /// Ratio of largest to smallest singular value (`inf` when exactly singular).
    pub condition: f64,
}

/// Square solver backed by a singular value decomposition.
///
/// The SVD is rank revealing, so the condition number is exact rather than an
/// estimate, and a matrix whose condition exceeds the cap is rejected instead
/// of producing a solve dominated by round-off.
pub struct GuardedSolver {
    u: Mat<c64>,
    v: Mat<c64>,
    inv_s: Vec<f64>,
    condition: f64,
}

impl GuardedSolver {
    pub fn factor(a: MatRef<'_, c64>, condition_cap: f64) -> Result<Self, Singular> {
        assert_eq!(a.nrows(), a.ncols(), "guarded solve needs a square matrix");
        let n = a.nrows();
        if n == 0 {
            return Ok(Self {
                u: Mat::zeros(0, 0),
                v: Mat::zeros(0, 0),
                inv_s: Vec::new(),
                condition: 1.0,
            });
        }
        if !a.is_all_finite() {
            return Err(Singular {
                condition: f64::INFINITY,
            });
        }
        let svd = a.svd().map_err(|_| Singular {
            condition: f64::INFINITY,
        })?;
        let s: Vec<f64> = (0..n).map(|k| svd.S()[k].re).collect();
        let smax = s[0];
        let smin = s[n - 1];
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(condition <= condition_cap) {
            return Err(Singular { condition });
        }
        Ok(Self {
            u: svd.U().to_owned(),
            v: svd.V().to_owned(),
            inv_s: s.iter().map(|x| 1.0 / x).collect(),
            condition,
        })
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Solves `A x = rhs` for every column of `rhs`.
    pub fn solve(&self, rhs: MatRef<'_, c64>) -> Mat<c64> {
        let mut tmp = self.u.adjoint() * rhs;
        for (k, s) in self.inv_s.iter().enumerate() {
            for j in 0..tmp.ncols() {
                tmp[(k, j)] *= *s;
            }
        }
        &self.v * tmp
    }

    /// Solves `x A = rhs` (row-vector orientation).
    pub fn solve_right(&self, rhs: MatRef<'_, c64>) -> Mat<c64> {
        // x = rhs V S^-1 U^H
        let mut tmp = rhs * &self.v;
        for (k, s) in self.inv_s.iter().enumerate() {
            for i in 0..tmp.nrows() {
                tmp[(i, k)] *= *s;
            }
        }
        tmp * self.u.adjoint()
    }
}

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

// Largest 1-norm for which the degree-13 approximant meets unit round-off.
const THETA13: f64 = 5.371_920_351_148_152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm(a: MatRef<'_, c64>) -> Mat<c64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return Mat::zeros(0, 0);
    }
    if n == 1 {
        return Mat::from_fn(1, 1, |_, _| a[(0, 0)].exp());
    }

    let norm = norm_one(a);
    if norm == 0.0 {
        return identity(n);
    }
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = scaled(a, c64::new(2f64.powi(-squarings), 0.0));

    let b = &PADE13;
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| -> Mat<c64> {
        Mat::from_fn(n, n, |i, j| {
            a6[(i, j)] * c6 + a4[(i, j)] * c4 + a2[(i, j)] * c2 + id[(i, j)] * c0
        })
    };

    let u_inner = &a6 * lin(b[13], b[11], b[9], 0.0) + lin(b[7], b[5], b[3], b[1]);
    let u = &a * u_inner;
    let v = &a6 * lin(b[12], b[10], b[8], 0.0) + lin(b[6], b[4], b[2], b[0]);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(p);
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor_expm(a: MatRef<'_, c64>, terms: usize) -> Mat<c64> {
        let n = a.nrows();
        let mut out = identity(n);
        let mut term = identity(n);
        for k in 1..terms {
            term = scaled((&term * a).as_ref(), c64::new(1.0 / k as f64, 0.0));
            out += &term;
        }
        out
    }

    #[test]
    fn expm_matches_taylor_for_small_norm() {
        let a = Mat::from_fn(4, 4, |i, j| {
            c64::new(0.1 * (i as f64 - j as f64), 0.05 * (i * j) as f64)
        });
        let e = expm(a.as_ref());
        let t = taylor_expm(a.as_ref(), 40);
        assert!(max_abs_diff(e.as_ref(), t.as_ref()) < 1e-14);
    }

    #[test]
    fn expm_of_diagonal_is_elementwise() {
        let d = [c64::new(0.0, -3.0), c64::new(1.5, 20.0), c64::new(-7.0, 0.3)];
        let a = Mat::from_fn(3, 3, |i, j| if i == j { d[i] } else { ZERO });
        let e = expm(a.as_ref());
        for i in 0..3 {
            let rel = (e[(i, i)] - d[i].exp()).norm() / d[i].exp().norm();
            assert!(rel < 1e-12, "entry {i}: rel err {rel}");
        }
    }

    #[test]
    fn expm_scaling_path_agrees_with_squared_half() {
        let a = Mat::from_fn(5, 5, |i, j| c64::new((i + 2 * j) as f64 * 0.7, (i as f64) - 1.0));
        let half = scaled(a.as_ref(), c64::new(0.5, 0.0));
        let eh = expm(half.as_ref());
        let e = expm(a.as_ref());
        let sq = &eh * &eh;
        let rel = max_abs_diff(e.as_ref(), sq.as_ref()) / max_abs(e.as_ref());
        assert!(rel < 1e-12, "rel {rel}");
    }

    #[test]
    fn guarded_solver_rejects_singular() {
        let a = Mat::from_fn(3, 3, |i, j| c64::new((i + j) as f64, 0.0));
        let err = GuardedSolver::factor(a.as_ref(), 1e12).err().unwrap();
        assert!(err.condition > 1e12);
    }

    #[test]
    fn guarded_solver_both_orientations() {
        let a = Mat::from_fn(3, 3, |i, j| {
            c64::new(if i == j { 3.0 } else { 0.5 }, (i as f64) * 0.1 - (j as f64) * 0.2)
        });
        let s = GuardedSolver::factor(a.as_ref(), 1e12).unwrap();
        let b = Mat::from_fn(3, 2, |i, j| c64::new(i as f64, j as f64 + 1.0));
        let x = s.solve(b.as_ref());
        assert!(max_abs_diff((&a * &x).as_ref(), b.as_ref()) < 1e-13);
        let bt = Mat::from_fn(2, 3, |i, j| c64::new(i as f64 - 1.0, j as f64));
        let y = s.solve_right(bt.as_ref());
        assert!(max_abs_diff((&y * &a).as_ref(), bt.as_ref()) < 1e-13);
    }
}
