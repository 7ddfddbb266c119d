//! Indefinite-metric linear algebra.
//!
//! A state space is split into a forward block (metric `+1`) followed by a
//! backward block (metric `-1`). The metric `eta` is never stored densely;
//! [`KreinSignature`] carries the split and every product applies the signs
//! on the fly.

use std::fmt;

use faer::{c64, Col, ColRef, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ZERO};

/// Block structure of the metric: `eta = diag(+1 x n_forward, -1 x n_backward)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KreinSignature {
    n_forward: usize,
    n_backward: usize,
}

impl KreinSignature {
    pub fn new(n_forward: usize, n_backward: usize) -> Result<Self> {
        if n_forward + n_backward == 0 {
            return Err(Error::InvalidSignature {
                n_forward,
                n_backward,
            });
        }
        Ok(Self {
            n_forward,
            n_backward,
        })
    }

    /// Definite metric, `eta = I`.
    pub fn definite(n: usize) -> Result<Self> {
        Self::new(n, 0)
    }

    pub fn n_forward(&self) -> usize {
        self.n_forward
    }

    pub fn n_backward(&self) -> usize {
        self.n_backward
    }

    pub fn dim(&self) -> usize {
        self.n_forward + self.n_backward
    }

    /// Metric sign of basis slot `i`.
    #[inline]
    pub fn alpha(&self, i: usize) -> f64 {
        if i < self.n_forward {
            1.0
        } else {
            -1.0
        }
    }

    pub fn is_forward(&self, i: usize) -> bool {
        i < self.n_forward
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self != other {
            return Err(Error::SignatureMismatch {
                left: *self,
                right: *other,
            });
        }
        Ok(())
    }

    /// `eta * m` (row signs).
    pub fn eta_left(&self, m: MatRef<'_, c64>) -> Mat<c64> {
        Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * self.alpha(i))
    }

    /// `m * eta` (column signs).
    pub fn eta_right(&self, m: MatRef<'_, c64>) -> Mat<c64> {
        Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * self.alpha(j))
    }
}

impl fmt::Display for KreinSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}F, {}B)", self.n_forward, self.n_backward)
    }
}

/// A state vector together with its metric signature.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    data: Col<c64>,
    signature: KreinSignature,
}

impl BlockVector {
    pub fn new(signature: KreinSignature, data: Col<c64>) -> Result<Self> {
        if data.nrows() != signature.dim() {
            return Err(Error::DimensionMismatch {
                expected: signature.dim(),
                found: data.nrows(),
            });
        }
        Ok(Self { data, signature })
    }

    pub fn from_slice(signature: KreinSignature, data: &[c64]) -> Result<Self> {
        Self::new(signature, Col::from_fn(data.len(), |i| data[i]))
    }

    pub fn zeros(signature: KreinSignature) -> Self {
        Self {
            data: Col::zeros(signature.dim()),
            signature,
        }
    }

    /// Unit vector in basis slot `i`.
    pub fn unit(signature: KreinSignature, i: usize) -> Self {
        let mut v = Self::zeros(signature);
        v.data[i] = linalg::ONE;
        v
    }

    /// Assembles `[forward; backward]`.
    pub fn from_blocks(
        signature: KreinSignature,
        forward: ColRef<'_, c64>,
        backward: ColRef<'_, c64>,
    ) -> Result<Self> {
        if forward.nrows() != signature.n_forward() {
            return Err(Error::DimensionMismatch {
                expected: signature.n_forward(),
                found: forward.nrows(),
            });
        }
        if backward.nrows() != signature.n_backward() {
            return Err(Error::DimensionMismatch {
                expected: signature.n_backward(),
                found: backward.nrows(),
            });
        }
        let nf = signature.n_forward();
        let data = Col::from_fn(signature.dim(), |i| {
            if i < nf {
                forward[i]
            } else {
                backward[i - nf]
            }
        });
        Ok(Self { data, signature })
    }

    pub fn signature(&self) -> KreinSignature {
        self.signature
    }

    pub fn data(&self) -> ColRef<'_, c64> {
        self.data.as_ref()
    }

    pub fn into_data(self) -> Col<c64> {
        self.data
    }

    pub fn forward(&self) -> ColRef<'_, c64> {
        self.data.as_ref().subrows(0, self.signature.n_forward())
    }

    pub fn backward(&self) -> ColRef<'_, c64> {
        self.data
            .as_ref()
            .subrows(self.signature.n_forward(), self.signature.n_backward())
    }

    pub fn hilbert_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `(x; x)`, always real.
    pub fn eta_norm(&self) -> f64 {
        self.data
            .iter()
            .enumerate()
            .map(|(i, z)| self.signature.alpha(i) * z.norm_sqr())
            .sum()
    }

    pub fn scale(&self, s: c64) -> Self {
        Self {
            data: Col::from_fn(self.data.nrows(), |i| self.data[i] * s),
            signature: self.signature,
        }
    }
}

/// Indefinite inner product `(x; y) = x^H eta y`.
pub fn eta_product(x: &BlockVector, y: &BlockVector) -> Result<c64> {
    x.signature.check_same(&y.signature)?;
    let sig = x.signature;
    Ok(x.data
        .iter()
        .zip(y.data.iter())
        .enumerate()
        .fold(ZERO, |acc, (i, (a, b))| acc + a.conj() * b * sig.alpha(i)))
}

/// Square operator on a signed state space.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    data: Mat<c64>,
    signature: KreinSignature,
}

/// Block residuals of `T^H eta T - eta`, one per independent block identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudounitaryResidual {
    /// `(T^FF)^H T^FF - (T^BF)^H T^BF - I^F`.
    pub ff: f64,
    /// `-(T^FB)^H T^FF + (T^BB)^H T^BF`.
    pub fb: f64,
    /// `-(T^FB)^H T^FB + (T^BB)^H T^BB - I^B`.
    pub bb: f64,
}

impl PseudounitaryResidual {
    pub fn max(&self) -> f64 {
        self.ff.max(self.fb).max(self.bb)
    }
}

impl BlockOperator {
    pub fn new(signature: KreinSignature, data: Mat<c64>) -> Result<Self> {
        let n = signature.dim();
        if data.nrows() != n || data.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if data.nrows() != n {
                    data.nrows()
                } else {
                    data.ncols()
                },
            });
        }
        Ok(Self { data, signature })
    }

    pub fn from_fn(signature: KreinSignature, f: impl FnMut(usize, usize) -> c64) -> Self {
        let n = signature.dim();
        Self {
            data: Mat::from_fn(n, n, f),
            signature,
        }
    }

    pub fn identity(signature: KreinSignature) -> Self {
        Self {
            data: linalg::identity(signature.dim()),
            signature,
        }
    }

    pub fn zeros(signature: KreinSignature) -> Self {
        let n = signature.dim();
        Self {
            data: Mat::zeros(n, n),
            signature,
        }
    }

    /// Real diagonal operator.
    pub fn diagonal(signature: KreinSignature, diag: &[f64]) -> Result<Self> {
        if diag.len() != signature.dim() {
            return Err(Error::DimensionMismatch {
                expected: signature.dim(),
                found: diag.len(),
            });
        }
        Ok(Self::from_fn(signature, |i, j| {
            if i == j {
                c64::new(diag[i], 0.0)
            } else {
                ZERO
            }
        }))
    }

    /// Assembles `[[ff, fb], [bf, bb]]`.
    pub fn from_blocks(
        signature: KreinSignature,
        ff: MatRef<'_, c64>,
        fb: MatRef<'_, c64>,
        bf: MatRef<'_, c64>,
        bb: MatRef<'_, c64>,
    ) -> Result<Self> {
        let (nf, nb) = (signature.n_forward(), signature.n_backward());
        let shapes = [
            (ff.nrows(), ff.ncols(), nf, nf),
            (fb.nrows(), fb.ncols(), nf, nb),
            (bf.nrows(), bf.ncols(), nb, nf),
            (bb.nrows(), bb.ncols(), nb, nb),
        ];
        for (r, c, er, ec) in shapes {
            if r != er || c != ec {
                return Err(Error::DimensionMismatch {
                    expected: er * ec,
                    found: r * c,
                });
            }
        }
        Ok(Self::from_fn(signature, |i, j| match (i < nf, j < nf) {
            (true, true) => ff[(i, j)],
            (true, false) => fb[(i, j - nf)],
            (false, true) => bf[(i - nf, j)],
            (false, false) => bb[(i - nf, j - nf)],
        }))
    }

    pub fn signature(&self) -> KreinSignature {
        self.signature
    }

    pub fn dim(&self) -> usize {
        self.signature.dim()
    }

    pub fn data(&self) -> MatRef<'_, c64> {
        self.data.as_ref()
    }

    pub fn into_data(self) -> Mat<c64> {
        self.data
    }

    pub fn ff(&self) -> MatRef<'_, c64> {
        let nf = self.signature.n_forward();
        self.data.as_ref().submatrix(0, 0, nf, nf)
    }

    pub fn fb(&self) -> MatRef<'_, c64> {
        let (nf, nb) = (self.signature.n_forward(), self.signature.n_backward());
        self.data.as_ref().submatrix(0, nf, nf, nb)
    }

    pub fn bf(&self) -> MatRef<'_, c64> {
        let (nf, nb) = (self.signature.n_forward(), self.signature.n_backward());
        self.data.as_ref().submatrix(nf, 0, nb, nf)
    }

    pub fn bb(&self) -> MatRef<'_, c64> {
        let (nf, nb) = (self.signature.n_forward(), self.signature.n_backward());
        self.data.as_ref().submatrix(nf, nf, nb, nb)
    }

    pub fn apply(&self, x: &BlockVector) -> Result<BlockVector> {
        self.signature.check_same(&x.signature)?;
        Ok(BlockVector {
            data: &self.data * &x.data,
            signature: self.signature,
        })
    }

    /// Operator product `self * rhs`.
    pub fn compose(&self, rhs: &BlockOperator) -> Result<BlockOperator> {
        self.signature.check_same(&rhs.signature)?;
        Ok(BlockOperator {
            data: &self.data * &rhs.data,
            signature: self.signature,
        })
    }

    pub fn add(&self, rhs: &BlockOperator) -> Result<BlockOperator> {
        self.signature.check_same(&rhs.signature)?;
        Ok(BlockOperator {
            data: &self.data + &rhs.data,
            signature: self.signature,
        })
    }

    pub fn scale(&self, s: c64) -> BlockOperator {
        BlockOperator {
            data: linalg::scaled(self.data.as_ref(), s),
            signature: self.signature,
        }
    }

    /// Ordinary (Hilbert) adjoint.
    pub fn adjoint(&self) -> BlockOperator {
        BlockOperator {
            data: linalg::adjoint(self.data.as_ref()),
            signature: self.signature,
        }
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(self.data.as_ref())
    }

    /// `eta T^H eta`.
    pub fn pseudo_adjoint(&self) -> BlockOperator {
        let sig = self.signature;
        BlockOperator::from_fn(sig, |i, j| {
            self.data[(j, i)].conj() * (sig.alpha(i) * sig.alpha(j))
        })
    }

    /// `max |T - eta T^H eta|`.
    pub fn pseudo_hermitian_residual(&self) -> f64 {
        let sig = self.signature;
        let n = sig.dim();
        let mut out = 0.0_f64;
        for j in 0..n {
            for i in 0..n {
                let adj = self.data[(j, i)].conj() * (sig.alpha(i) * sig.alpha(j));
                out = out.max((self.data[(i, j)] - adj).norm());
            }
        }
        out
    }

    pub fn is_pseudo_hermitian(&self, tol: f64) -> bool {
        self.pseudo_hermitian_residual() <= tol
    }

    /// Block residuals of the pseudounitarity identities.
    pub fn pseudounitary_residual(&self) -> PseudounitaryResidual {
        let sig = self.signature;
        let nf = sig.n_forward();
        let eta_t = sig.eta_left(self.data.as_ref());
        let gram = self.data.adjoint() * eta_t;
        // gram - eta
        let mut ff = 0.0_f64;
        let mut fb = 0.0_f64;
        let mut bb = 0.0_f64;
        for j in 0..sig.dim() {
            for i in 0..sig.dim() {
                let target = if i == j { sig.alpha(i) } else { 0.0 };
                let r = (gram[(i, j)] - target).norm();
                match (i < nf, j < nf) {
                    (true, true) => ff = ff.max(r),
                    (false, false) => bb = bb.max(r),
                    _ => fb = fb.max(r),
                }
            }
        }
        PseudounitaryResidual { ff, fb, bb }
    }

    /// `max |eta T^H eta T - I| <= tol`, with each block identity checked
    /// separately.
    pub fn is_pseudounitary(&self, tol: f64) -> bool {
        // eta T^H eta T - I = eta (T^H eta T - eta): same entries up to sign,
        // so the block residuals bound the full check.
        let r = self.pseudounitary_residual();
        r.ff <= tol && r.fb <= tol && r.bb <= tol
    }
}

/// Free-function form of [`BlockOperator::pseudo_adjoint`].
pub fn pseudo_adjoint(t: &BlockOperator) -> BlockOperator {
    t.pseudo_adjoint()
}

pub fn is_pseudo_hermitian(t: &BlockOperator, tol: f64) -> bool {
    t.is_pseudo_hermitian(tol)
}

pub fn is_pseudounitary(t: &BlockOperator, tol: f64) -> bool {
    t.is_pseudounitary(tol)
}
