//! Seeded random instances for demos, benchmarks and property suites.
//!
//! All generators take an explicit RNG so that runs are reproducible; use
//! [`seeded`] for a portable stream.

use faer::{c64, Col, Mat};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::krein::{BlockOperator, BlockVector, KreinSignature};
use crate::linalg;

/// Portable seeded generator (ChaCha8).
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_c64<R: Rng + ?Sized>(rng: &mut R) -> c64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Complex Gaussian matrix with unit-variance entries.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat<c64> {
    Mat::from_fn(n, n, |_, _| normal_c64(rng))
}

/// Hermitian matrix `(A + A^H) / 2` from a Gaussian `A`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat<c64> {
    let a = random_matrix(rng, n);
    Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, signature: KreinSignature) -> BlockVector {
    let data = Col::from_fn(signature.dim(), |_| normal_c64(rng));
    BlockVector::new(signature, data).expect("length matches signature")
}

/// Pseudo-Hermitian operator `eta * K` with `K` Hermitian, scaled so its
/// largest entry is about `scale`.
pub fn random_pseudo_hermitian<R: Rng + ?Sized>(
    rng: &mut R,
    signature: KreinSignature,
    scale: f64,
) -> BlockOperator {
    let k = random_hermitian(rng, signature.dim());
    let norm = linalg::max_abs(k.as_ref()).max(f64::MIN_POSITIVE);
    let k = linalg::scaled(k.as_ref(), c64::new(scale / norm, 0.0));
    BlockOperator::new(signature, signature.eta_left(k.as_ref())).expect("square")
}

/// Pseudounitary operator `exp(-i H s)` for a random pseudo-Hermitian `H`.
pub fn random_pseudounitary<R: Rng + ?Sized>(
    rng: &mut R,
    signature: KreinSignature,
    scale: f64,
    s: f64,
) -> BlockOperator {
    let h = random_pseudo_hermitian(rng, signature, scale);
    let gen = linalg::scaled(h.data(), c64::new(0.0, -s));
    BlockOperator::new(signature, linalg::expm(gen.as_ref())).expect("square")
}

/// Random signature with dimension in `1..=max_dim`.
pub fn random_signature<R: Rng + ?Sized>(rng: &mut R, max_dim: usize) -> KreinSignature {
    let n = rng.random_range(1..=max_dim);
    let nb = rng.random_range(0..=n);
    KreinSignature::new(n - nb, nb).expect("n >= 1")
}
