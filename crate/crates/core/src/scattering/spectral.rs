//! Joint canonical form of an unperturbed Hamiltonian and the metric.
//!
//! Columns of the transform `T` are eigenvectors of `H0`, ordered as open
//! forward levels, open backward levels, decaying members of closed pairs and
//! their growing partners. They are normalized so that
//!
//! ```text
//! T^H eta T = eta' = diag(I, -I, [[0, I], [I, 0]])
//! ```
//!
//! which makes `T^-1 = eta' T^H eta` available without a solve.

use faer::{c64, Col, Mat, MatRef, Side};

use crate::error::{Error, Result};
use crate::krein::{BlockOperator, KreinSignature};
use crate::linalg::{self, max_abs, GuardedSolver, ONE, ZERO};
use crate::scattering::channel::Channel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sector {
    OpenForward,
    OpenBackward,
    /// Closed pair member with `Im < 0`.
    ClosedDecaying,
    /// Closed pair member with `Im > 0`.
    ClosedGrowing,
}

impl Sector {
    pub fn is_open(self) -> bool {
        matches!(self, Sector::OpenForward | Sector::OpenBackward)
    }

    /// Metric sign of an open level (`0` for closed ones).
    pub fn alpha(self) -> f64 {
        match self {
            Sector::OpenForward => 1.0,
            Sector::OpenBackward => -1.0,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub energy: c64,
    pub sector: Sector,
    /// Basis slot carrying the largest component of the eigenvector; serves
    /// as the degeneracy label.
    pub slot: usize,
}

/// Tolerances used by [`canonical_form_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalOptions {
    /// Relative `|Im E|` below which an eigenvalue counts as real.
    pub real_tol: f64,
    /// Relative gap below which real eigenvalues are treated as degenerate.
    pub cluster_tol: f64,
    /// Relative eta-norm below which an open eigenvector is a ghost.
    pub ghost_tol: f64,
    /// Relative reconstruction tolerance.
    pub check_tol: f64,
}

impl Default for CanonicalOptions {
    fn default() -> Self {
        Self {
            real_tol: 1e-8,
            cluster_tol: 1e-8,
            ghost_tol: 1e-8,
            check_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralModel {
    signature: KreinSignature,
    levels: Vec<Level>,
    n_open_forward: usize,
    n_open_backward: usize,
    n_pairs: usize,
    transform: Mat<c64>,
    inverse: Mat<c64>,
    channels: Vec<Channel>,
}

impl SpectralModel {
    pub fn signature(&self) -> KreinSignature {
        self.signature
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    /// All levels in canonical order.
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &Level {
        &self.levels[k]
    }

    pub fn open_forward_levels(&self) -> &[Level] {
        &self.levels[..self.n_open_forward]
    }

    pub fn open_backward_levels(&self) -> &[Level] {
        &self.levels[self.n_open_forward..self.n_open()]
    }

    /// Decaying members of the closed pairs; partner `k` is `conj` of these.
    pub fn closed_pairs(&self) -> &[Level] {
        &self.levels[self.n_open()..self.n_open() + self.n_pairs]
    }

    pub fn n_open(&self) -> usize {
        self.n_open_forward + self.n_open_backward
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    /// `T`, whose columns are the canonical eigenvectors.
    pub fn basis_transform(&self) -> MatRef<'_, c64> {
        self.transform.as_ref()
    }

    /// `T^-1 = eta' T^H eta`.
    pub fn inverse_transform(&self) -> MatRef<'_, c64> {
        self.inverse.as_ref()
    }

    /// The canonical metric `eta'`.
    pub fn canonical_metric(&self) -> Mat<c64> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| canonical_metric_entry(&self.levels, self.n_open(), self.n_pairs, i, j))
    }

    /// `T^-1 X T`.
    pub fn to_canonical(&self, x: MatRef<'_, c64>) -> Mat<c64> {
        &self.inverse * x * &self.transform
    }

    /// `T X T^-1`.
    pub fn from_canonical(&self, x: MatRef<'_, c64>) -> Mat<c64> {
        &self.transform * x * &self.inverse
    }

    /// Smallest `|Im E|` of the closed spectrum, `inf` if there is none.
    pub fn closed_gap(&self) -> f64 {
        self.closed_pairs()
            .iter()
            .map(|l| l.energy.im.abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Canonical index of the open level labelled by `slot`.
    pub fn open_level_for_slot(&self, slot: usize) -> Option<usize> {
        (0..self.n_open()).find(|&k| self.levels[k].slot == slot)
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel(&self, name: &str) -> Result<(usize, &Channel)> {
        self.channels
            .iter()
            .enumerate()
            .find(|(_, c)| c.name() == name)
            .ok_or_else(|| Error::UnknownChannel(name.to_string()))
    }

    /// Attaches scattering channels; each must cover open levels of a single
    /// sector and no level may belong to two channels.
    pub fn with_channels(mut self, channels: Vec<Channel>) -> Result<Self> {
        let mut owner = vec![None::<usize>; self.dim()];
        for (ci, ch) in channels.iter().enumerate() {
            if channels[..ci].iter().any(|c| c.name() == ch.name()) {
                return Err(Error::Model(format!("duplicate channel name '{}'", ch.name())));
            }
            for &k in ch.levels() {
                if k >= self.n_open() {
                    return Err(Error::Model(format!(
                        "channel '{}' refers to level {k}, which is not an open level",
                        ch.name()
                    )));
                }
                if let Some(other) = owner[k] {
                    return Err(Error::Model(format!(
                        "level {k} belongs to channels '{}' and '{}'",
                        channels[other].name(),
                        ch.name()
                    )));
                }
                owner[k] = Some(ci);
            }
            if let Some(&k0) = ch.levels().first() {
                let sector = self.levels[k0].sector;
                if ch.levels().iter().any(|&k| self.levels[k].sector != sector) {
                    return Err(Error::Model(format!(
                        "channel '{}' mixes forward and backward levels",
                        ch.name()
                    )));
                }
            }
        }
        self.channels = channels;
        Ok(self)
    }

    /// `max |H0 T - T Lambda|` and `max |T^H eta T - eta'|`.
    pub fn residuals(&self, h0: &BlockOperator) -> (f64, f64) {
        let n = self.dim();
        let lambda = Mat::from_fn(n, n, |i, j| if i == j { self.levels[i].energy } else { ZERO });
        let eig = linalg::max_abs_diff((h0.data() * &self.transform).as_ref(), (&self.transform * &lambda).as_ref());
        let gram = self.transform.adjoint() * self.signature.eta_left(self.transform.as_ref());
        let metric = linalg::max_abs_diff(gram.as_ref(), self.canonical_metric().as_ref());
        (eig, metric)
    }
}

fn canonical_metric_entry(levels: &[Level], n_open: usize, n_pairs: usize, i: usize, j: usize) -> c64 {
    if i < n_open || j < n_open {
        return if i == j { c64::new(levels[i].sector.alpha(), 0.0) } else { ZERO };
    }
    let (a, b) = (i - n_open, j - n_open);
    if a + n_pairs == b || b + n_pairs == a {
        ONE
    } else {
        ZERO
    }
}

pub fn canonical_form(h0: &BlockOperator) -> Result<SpectralModel> {
    canonical_form_with(h0, &CanonicalOptions::default())
}

pub fn canonical_form_with(h0: &BlockOperator, opts: &CanonicalOptions) -> Result<SpectralModel> {
    let sig = h0.signature();
    let n = sig.dim();
    let scale = h0.max_abs().max(1.0);
    let tolerance = 1e-9 * scale;
    let residual = h0.pseudo_hermitian_residual();
    if residual > tolerance {
        return Err(Error::NotPseudoHermitian {
            residual,
            tolerance,
        });
    }

    let evd = h0.data().eigen().map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let values: Vec<c64> = (0..n).map(|k| evd.S().column_vector()[k]).collect();
    let vectors = evd.U();

    let real_tol = opts.real_tol * scale;
    let mut real_idx: Vec<usize> = (0..n).filter(|&k| values[k].im.abs() <= real_tol).collect();
    let lower: Vec<usize> = (0..n).filter(|&k| values[k].im < -real_tol).collect();
    let upper: Vec<usize> = (0..n).filter(|&k| values[k].im > real_tol).collect();

    // Open sector: diagonalize the eta-Gram matrix of each degenerate cluster.
    real_idx.sort_by(|&a, &b| values[a].re.total_cmp(&values[b].re));
    let mut forward: Vec<(f64, Col<c64>)> = Vec::new();
    let mut backward: Vec<(f64, Col<c64>)> = Vec::new();
    let mut start = 0;
    while start < real_idx.len() {
        let mut end = start + 1;
        while end < real_idx.len()
            && values[real_idx[end]].re - values[real_idx[end - 1]].re <= opts.cluster_tol * scale
        {
            end += 1;
        }
        let cluster = &real_idx[start..end];
        let energy = cluster.iter().map(|&k| values[k].re).sum::<f64>() / cluster.len() as f64;
        split_open_cluster(sig, vectors, cluster, energy, opts, &mut forward, &mut backward)?;
        start = end;
    }

    // Closed sector: pair each decaying eigenvalue with its conjugate.
    if lower.len() != upper.len() {
        let stray = if lower.len() > upper.len() { &lower } else { &upper };
        return Err(Error::UnpairedClosedEigenvalue {
            eigenvalue: values[stray[0]],
        });
    }
    let mut decaying: Vec<usize> = lower.clone();
    decaying.sort_by(|&a, &b| {
        values[a]
            .re
            .total_cmp(&values[b].re)
            .then(values[a].im.total_cmp(&values[b].im))
    });
    let mut free: Vec<usize> = upper.clone();
    let mut partners = Vec::with_capacity(decaying.len());
    for &k in &decaying {
        let target = values[k].conj();
        let (pos, dist) = free
            .iter()
            .enumerate()
            .map(|(p, &j)| (p, (values[j] - target).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("equal counts");
        if dist > 1e-6 * scale {
            return Err(Error::UnpairedClosedEigenvalue {
                eigenvalue: values[k],
            });
        }
        partners.push(free.swap_remove(pos));
    }

    let n_pairs = decaying.len();
    let n_open_forward = forward.len();
    let n_open_backward = backward.len();
    let mut transform = Mat::<c64>::zeros(n, n);
    let mut levels = Vec::with_capacity(n);
    let mut col = 0;
    for (sector, group) in [(Sector::OpenForward, &forward), (Sector::OpenBackward, &backward)] {
        for (energy, v) in group.iter() {
            for i in 0..n {
                transform[(i, col)] = v[i];
            }
            levels.push(Level {
                energy: c64::new(*energy, 0.0),
                sector,
                slot: dominant_slot(v.as_ref().as_mat()),
            });
            col += 1;
        }
    }

    if n_pairs > 0 {
        let v1 = Mat::from_fn(n, n_pairs, |i, p| vectors[(i, decaying[p])]);
        let v1 = normalize_columns(v1);
        let v2 = normalize_columns(Mat::from_fn(n, n_pairs, |i, p| vectors[(i, partners[p])]));
        let cross = v1.adjoint() * sig.eta_left(v2.as_ref());
        let not_diagonalizable = || Error::NonDiagonalizable {
            eigenvalue: values[decaying[0]],
        };
        let solver = GuardedSolver::factor(cross.as_ref(), 1e12).map_err(|_| not_diagonalizable())?;
        let cross_inv = solver.solve(linalg::identity(n_pairs).as_ref());
        // Near an exceptional point both members collapse onto one
        // eta-null vector and the cross metric vanishes.
        if max_abs(cross_inv.as_ref()) > 1e6 {
            return Err(not_diagonalizable());
        }
        // v2 cross^-1 makes the decaying/growing cross metric the identity.
        let v2 = &v2 * &cross_inv;
        for p in 0..n_pairs {
            for i in 0..n {
                transform[(i, col + p)] = v1[(i, p)];
                transform[(i, col + n_pairs + p)] = v2[(i, p)];
            }
            let e = values[decaying[p]];
            let e = c64::new(e.re, -e.im.abs());
            levels.push(Level {
                energy: e,
                sector: Sector::ClosedDecaying,
                slot: dominant_slot(v1.as_ref().subcols(p, 1)),
            });
        }
        for p in 0..n_pairs {
            let e = levels[col + p].energy.conj();
            levels.push(Level {
                energy: e,
                sector: Sector::ClosedGrowing,
                slot: dominant_slot(v2.as_ref().subcols(p, 1)),
            });
        }
    }

    let n_open = n_open_forward + n_open_backward;
    let metric = Mat::from_fn(n, n, |i, j| canonical_metric_entry(&levels, n_open, n_pairs, i, j));
    let inverse = &metric * transform.adjoint() * sig.eta_left(linalg::identity(n).as_ref());

    let model = SpectralModel {
        signature: sig,
        levels,
        n_open_forward,
        n_open_backward,
        n_pairs,
        transform,
        inverse,
        channels: Vec::new(),
    };
    let (eig, gram) = model.residuals(h0);
    let t_scale = max_abs(model.transform.as_ref()).max(1.0);
    let bound = opts.check_tol * scale * t_scale * t_scale;
    if eig.max(gram) > bound {
        return Err(Error::CanonicalForm {
            residual: eig.max(gram),
        });
    }
    Ok(model)
}

fn normalize_columns(mut m: Mat<c64>) -> Mat<c64> {
    for j in 0..m.ncols() {
        let norm = (0..m.nrows()).map(|i| m[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..m.nrows() {
            m[(i, j)] /= norm;
        }
    }
    m
}

fn dominant_slot(v: MatRef<'_, c64>) -> usize {
    (0..v.nrows())
        .max_by(|&a, &b| v[(a, 0)].norm().total_cmp(&v[(b, 0)].norm()))
        .unwrap_or(0)
}

fn split_open_cluster(
    sig: KreinSignature,
    vectors: MatRef<'_, c64>,
    cluster: &[usize],
    energy: f64,
    opts: &CanonicalOptions,
    forward: &mut Vec<(f64, Col<c64>)>,
    backward: &mut Vec<(f64, Col<c64>)>,
) -> Result<()> {
    let n = vectors.nrows();
    let m = cluster.len();
    let v = normalize_columns(Mat::from_fn(n, m, |i, j| vectors[(i, cluster[j])]));
    if m > 1 {
        let s = v.svd().map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        let smin = s.S().column_vector()[m - 1].re;
        if smin < 1e-6 {
            return Err(Error::NonDiagonalizable {
                eigenvalue: c64::new(energy, 0.0),
            });
        }
    }
    let gram = v.adjoint() * sig.eta_left(v.as_ref());
    let gram = Mat::from_fn(m, m, |i, j| (gram[(i, j)] + gram[(j, i)].conj()) * 0.5);
    let evd = gram
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let w = &v * evd.U();
    let mut found: Vec<(f64, Col<c64>, bool)> = Vec::with_capacity(m);
    for j in 0..m {
        let g = evd.S().column_vector()[j].re;
        let hilbert = (0..n).map(|i| w[(i, j)].norm_sqr()).sum::<f64>();
        if g.abs() <= opts.ghost_tol * hilbert {
            return Err(Error::GhostState { energy, eta_norm: g });
        }
        let inv = 1.0 / g.abs().sqrt();
        found.push((g, Col::from_fn(n, |i| w[(i, j)] * inv), g > 0.0));
    }
    let mut f: Vec<Col<c64>> = Vec::new();
    let mut b: Vec<Col<c64>> = Vec::new();
    for (_, c, is_f) in found {
        if is_f {
            f.push(c);
        } else {
            b.push(c);
        }
    }
    // Degenerate partners are ordered by their dominant slot.
    for (group, out) in [(f, &mut *forward), (b, &mut *backward)] {
        let mut group: Vec<(usize, Col<c64>)> = group
            .into_iter()
            .map(|c| (dominant_slot(c.as_ref().as_mat()), c))
            .collect();
        group.sort_by_key(|(slot, _)| *slot);
        out.extend(group.into_iter().map(|(_, c)| (energy, c)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::random::{random_hermitian, seeded};

    fn sig(nf: usize, nb: usize) -> KreinSignature {
        KreinSignature::new(nf, nb).unwrap()
    }

    fn real(m: &[&[f64]], s: KreinSignature) -> BlockOperator {
        BlockOperator::from_fn(s, |i, j| c64::new(m[i][j], 0.0))
    }

    #[test]
    fn diagonal_h0_is_a_permutation() {
        let s = sig(2, 2);
        let h0 = BlockOperator::diagonal(s, &[0.5, -1.0, 0.2, 0.9]).unwrap();
        let m = canonical_form(&h0).unwrap();
        let energies: Vec<f64> = m.levels().iter().map(|l| l.energy.re).collect();
        assert_eq!(energies, vec![-1.0, 0.5, 0.2, 0.9]);
        let slots: Vec<usize> = m.levels().iter().map(|l| l.slot).collect();
        assert_eq!(slots, vec![1, 0, 2, 3]);
        let t = m.basis_transform();
        for (col, &slot) in slots.iter().enumerate() {
            for i in 0..4 {
                let expect = if i == slot { 1.0 } else { 0.0 };
                assert!((t[(i, col)].norm() - expect).abs() < 1e-14);
            }
        }
        assert_eq!(m.n_pairs(), 0);
    }

    #[test]
    fn strong_mixing_gives_closed_pair() {
        let s = sig(1, 1);
        let (a, ap, b) = (0.3, -0.1, 0.8);
        let h0 = real(&[&[a, -b], &[b, ap]], s);
        let m = canonical_form(&h0).unwrap();
        assert_eq!(m.n_pairs(), 1);
        assert_eq!(m.n_open(), 0);
        let mean = 0.5 * (a + ap);
        let disc = b * b - 0.25 * (a - ap) * (a - ap);
        let e = m.closed_pairs()[0].energy;
        assert!((e - c64::new(mean, -disc.sqrt())).norm() < 1e-12);
        assert_eq!(m.levels()[1].energy, e.conj());
        let eta = m.canonical_metric();
        assert_eq!(eta[(0, 1)], ONE);
        assert_eq!(eta[(1, 0)], ONE);
        let (r1, r2) = m.residuals(&h0);
        assert!(r1 < 1e-12 && r2 < 1e-12);
    }

    #[test]
    fn weak_mixing_stays_open() {
        let s = sig(1, 1);
        let h0 = real(&[&[1.0, -0.2], &[0.2, -1.0]], s);
        let m = canonical_form(&h0).unwrap();
        assert_eq!(m.open_forward_levels().len(), 1);
        assert_eq!(m.open_backward_levels().len(), 1);
        let inv = m.inverse_transform();
        let prod = inv * m.basis_transform();
        assert!(linalg::identity_defect(prod.as_ref()) < 1e-13);
    }

    #[test]
    fn cross_sector_degeneracy_is_resolved() {
        let s = sig(2, 1);
        let h0 = BlockOperator::diagonal(s, &[0.4, 0.1, 0.4]).unwrap();
        let m = canonical_form(&h0).unwrap();
        assert_eq!(m.open_forward_levels().len(), 2);
        assert_eq!(m.open_backward_levels().len(), 1);
        assert_eq!(m.open_backward_levels()[0].energy.re, 0.4);
        assert_eq!(m.open_backward_levels()[0].slot, 2);
    }

    #[test]
    fn random_mixed_models_round_trip() {
        let mut rng = seeded(3);
        for trial in 0..20 {
            let s = sig(3, 2);
            // Hermitian blocks plus weak F-B mixing: real spectrum with both
            // metric signs.
            let k = random_hermitian(&mut rng, 5);
            let h = BlockOperator::from_fn(s, |i, j| {
                let same = s.is_forward(i) == s.is_forward(j);
                let w = if same { 1.0 } else { 0.05 };
                k[(i, j)] * w * s.alpha(i)
            });
            let h = BlockOperator::from_fn(s, |i, j| {
                let base = h.data()[(i, j)];
                if i == j { base + c64::new(3.0 * i as f64, 0.0) * s.alpha(i) } else { base }
            });
            let m = canonical_form(&h).unwrap_or_else(|e| panic!("trial {trial}: {e}"));
            let (r1, r2) = m.residuals(&h);
            assert!(r1 < 1e-9 && r2 < 1e-9, "trial {trial}: {r1} {r2}");
            let back = m.from_canonical(
                Mat::from_fn(5, 5, |i, j| if i == j { m.level(i).energy } else { ZERO }).as_ref(),
            );
            assert!(max_abs_diff(back.as_ref(), h.data()) < 1e-9);
        }
    }

    #[test]
    fn jordan_block_rejected() {
        // Exceptional point: a = a', b = (a - a')/2 = 0 would be trivial, so
        // use the 1+1 model at |b| = |a - a'| / 2.
        let s = sig(1, 1);
        let h0 = real(&[&[1.0, -0.5], &[0.5, 0.0]], s);
        let err = canonical_form(&h0).unwrap_err();
        assert!(
            matches!(
                err,
                Error::NonDiagonalizable { .. } | Error::GhostState { .. } | Error::UnpairedClosedEigenvalue { .. }
            ),
            "{err}"
        );
    }

    #[test]
    fn non_pseudo_hermitian_rejected() {
        let s = sig(1, 1);
        let h0 = real(&[&[1.0, 0.5], &[0.5, 0.0]], s);
        assert!(matches!(canonical_form(&h0), Err(Error::NotPseudoHermitian { .. })));
    }
}
