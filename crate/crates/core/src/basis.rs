//! Truncated Fock ⊗ qubit bases and elementary operators.
//!
//! Index ordering is fixed and documented because CSV outputs refer to it:
//!
//! * within one site the atom index is major: `local = atom * (N + 1) + photons`
//!   with `g = 0`, `e = 1` (photon-only bases have `local = photons`);
//! * across sites the site index is major: site 0 is the most significant
//!   digit, `flat = sum_j local_j * d^(n_sites - 1 - j)` with `d` the site
//!   dimension.
//!
//! So for a single site with cutoff `N`, `|g,n>` sits at index `n` and
//! `|e,n>` at `N + 1 + n`.

use std::fmt;

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// State of the two-level atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Ground,
    Excited,
}

impl Atom {
    pub fn index(self) -> usize {
        match self {
            Atom::Ground => 0,
            Atom::Excited => 1,
        }
    }

    pub fn flipped(self) -> Atom {
        match self {
            Atom::Ground => Atom::Excited,
            Atom::Excited => Atom::Ground,
        }
    }

    /// Eigenvalue of `sigma_z`.
    pub fn sigma_z(self) -> i32 {
        match self {
            Atom::Ground => -1,
            Atom::Excited => 1,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Atom::Ground => "g",
            Atom::Excited => "e",
        })
    }
}

/// Bare (uncoupled) state `|atom, photons>` of one site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BareLabel {
    pub site: usize,
    pub atom: Atom,
    pub photons: usize,
}

impl BareLabel {
    pub fn new(site: usize, atom: Atom, photons: usize) -> Self {
        BareLabel { site, atom, photons }
    }

    pub fn ground(site: usize, photons: usize) -> Self {
        Self::new(site, Atom::Ground, photons)
    }

    pub fn excited(site: usize, photons: usize) -> Self {
        Self::new(site, Atom::Excited, photons)
    }
}

impl fmt::Display for BareLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}>_{}", self.atom, self.photons, self.site + 1)
    }
}

/// Shape of a truncated Hilbert space: `n_sites` copies of a bosonic mode
/// with occupations `0..=photon_cutoff`, each optionally paired with a qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisSpec {
    pub n_sites: usize,
    pub photon_cutoff: usize,
    pub qubits: bool,
}

impl BasisSpec {
    /// Qubit ⊗ photon sites.
    pub fn new(n_sites: usize, photon_cutoff: usize) -> Result<Self> {
        Self::build(n_sites, photon_cutoff, true)
    }

    /// One qubit ⊗ photon site.
    pub fn single(photon_cutoff: usize) -> Result<Self> {
        Self::new(1, photon_cutoff)
    }

    /// Bosonic modes without qubits.
    pub fn photons_only(n_sites: usize, photon_cutoff: usize) -> Result<Self> {
        Self::build(n_sites, photon_cutoff, false)
    }

    fn build(n_sites: usize, photon_cutoff: usize, qubits: bool) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::NoSites);
        }
        if photon_cutoff < 1 {
            return Err(Error::CutoffTooSmall(photon_cutoff));
        }
        Ok(BasisSpec { n_sites, photon_cutoff, qubits })
    }

    pub fn qubit_dim(&self) -> usize {
        if self.qubits {
            2
        } else {
            1
        }
    }

    pub fn photon_dim(&self) -> usize {
        self.photon_cutoff + 1
    }

    pub fn site_dim(&self) -> usize {
        self.qubit_dim() * self.photon_dim()
    }

    pub fn dim(&self) -> usize {
        self.site_dim().pow(self.n_sites as u32)
    }

    /// Same layout with a single site.
    pub fn site_basis(&self) -> BasisSpec {
        BasisSpec { n_sites: 1, ..*self }
    }

    pub fn local_index(&self, atom: Atom, photons: usize) -> Result<usize> {
        if photons > self.photon_cutoff {
            return Err(Error::PhotonsAboveCutoff { photons, cutoff: self.photon_cutoff });
        }
        if !self.qubits && atom == Atom::Excited {
            return Err(Error::MissingQubits);
        }
        Ok(atom.index() * self.photon_dim() + photons)
    }

    pub fn decode_local(&self, local: usize) -> (Atom, usize) {
        let atom = if local / self.photon_dim() == 0 { Atom::Ground } else { Atom::Excited };
        (atom, local % self.photon_dim())
    }

    /// Flat index of a product of bare labels, one per site (any order).
    pub fn encode(&self, labels: &[BareLabel]) -> Result<usize> {
        if labels.len() != self.n_sites {
            return Err(Error::LabelCount { expected: self.n_sites, found: labels.len() });
        }
        let mut locals = vec![usize::MAX; self.n_sites];
        for l in labels {
            if l.site >= self.n_sites {
                return Err(Error::SiteOutOfRange { site: l.site, n_sites: self.n_sites });
            }
            if locals[l.site] != usize::MAX {
                return Err(Error::DuplicateSite(l.site));
            }
            locals[l.site] = self.local_index(l.atom, l.photons)?;
        }
        Ok(self.flat_from_locals(&locals))
    }

    pub fn decode(&self, index: usize) -> Vec<BareLabel> {
        self.locals_from_flat(index)
            .into_iter()
            .enumerate()
            .map(|(site, local)| {
                let (atom, photons) = self.decode_local(local);
                BareLabel { site, atom, photons }
            })
            .collect()
    }

    pub(crate) fn flat_from_locals(&self, locals: &[usize]) -> usize {
        let d = self.site_dim();
        locals.iter().fold(0, |acc, &l| acc * d + l)
    }

    pub(crate) fn locals_from_flat(&self, mut index: usize) -> Vec<usize> {
        let d = self.site_dim();
        let mut locals = vec![0; self.n_sites];
        for slot in locals.iter_mut().rev() {
            *slot = index % d;
            index /= d;
        }
        locals
    }
}

/// Dense complex operator on a [`BasisSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix<T: Real> {
    pub entries: Array2<Complex<T>>,
    pub basis: BasisSpec,
    pub hermitian: bool,
}

impl<T: Real> OperatorMatrix<T> {
    pub fn zeros(basis: BasisSpec) -> Self {
        let d = basis.dim();
        OperatorMatrix { entries: Array2::zeros((d, d)), basis, hermitian: true }
    }

    pub fn identity(basis: BasisSpec) -> Self {
        let d = basis.dim();
        OperatorMatrix { entries: Array2::eye(d), basis, hermitian: true }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix { entries: self.entries.t().mapv(|z| z.conj()), basis: self.basis, hermitian: self.hermitian }
    }

    /// `max |M - M^H|`.
    pub fn hermiticity_defect(&self) -> T {
        let n = self.dim();
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..=i {
                let d = (self.entries[[i, j]] - self.entries[[j, i]].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        OperatorMatrix { entries: self.entries.dot(&other.entries), basis: self.basis, hermitian: false }
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        let ab = self.entries.dot(&other.entries);
        let ba = other.entries.dot(&self.entries);
        OperatorMatrix { entries: ab - ba, basis: self.basis, hermitian: false }
    }

    pub fn apply(&self, psi: &Array1<Complex<T>>) -> Array1<Complex<T>> {
        self.entries.dot(psi)
    }

    /// Real part of `<psi|M|psi>`.
    pub fn expectation(&self, psi: &Array1<Complex<T>>) -> T {
        let m_psi = self.apply(psi);
        psi.iter().zip(m_psi.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Dense Kronecker product, `self ⊗ other`.
    pub(crate) fn kron_entries(a: &Array2<Complex<T>>, b: &Array2<Complex<T>>) -> Array2<Complex<T>> {
        ndarray::linalg::kron(a, b)
    }

    /// Real-valued matrix, if every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == T::zero())
    }
}

/// Bosonic annihilation operator on occupations `0..=cutoff`:
/// `<n-1|a|n> = sqrt(n)`.
pub fn annihilation_matrix<T: Real>(cutoff: usize) -> Result<OperatorMatrix<T>> {
    let basis = BasisSpec::photons_only(1, cutoff)?;
    let mut m = OperatorMatrix::zeros(basis);
    for n in 1..=cutoff {
        m.entries[[n - 1, n]] = Complex::new(T::from_usize(n).unwrap().sqrt(), T::zero());
    }
    m.hermitian = false;
    Ok(m)
}

/// Qubit operators acting on a single site's `atom ⊗ photon` space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitOp {
    SigmaZ,
    SigmaX,
    /// `|e><g|`
    SigmaPlus,
    /// `|g><e|`
    SigmaMinus,
    /// `sigma^+ sigma^- = |e><e|`
    Excitation,
}

impl QubitOp {
    fn matrix<T: Real>(self) -> Array2<Complex<T>> {
        let o = Complex::new(T::one(), T::zero());
        let z = Complex::new(T::zero(), T::zero());
        // rows/cols ordered (g, e)
        let m = match self {
            QubitOp::SigmaZ => [[-o, z], [z, o]],
            QubitOp::SigmaX => [[z, o], [o, z]],
            QubitOp::SigmaPlus => [[z, z], [o, z]],
            QubitOp::SigmaMinus => [[z, o], [z, z]],
            QubitOp::Excitation => [[z, z], [z, o]],
        };
        Array2::from_shape_fn((2, 2), |(i, j)| m[i][j])
    }
}

/// Single-site operator `qubit ⊗ photon` on a qubit-bearing site basis.
/// `photon` defaults to the identity.
pub fn cell_operator<T: Real>(
    basis: &BasisSpec,
    qubit: Option<QubitOp>,
    photon: Option<&OperatorMatrix<T>>,
) -> Result<OperatorMatrix<T>> {
    if !basis.qubits {
        return Err(Error::MissingQubits);
    }
    let site = basis.site_basis();
    let p = basis.photon_dim();
    let q = qubit.map(QubitOp::matrix).unwrap_or_else(|| Array2::eye(2));
    let ph = match photon {
        Some(op) => {
            if op.dim() != p {
                return Err(Error::DimensionMismatch { expected: p, found: op.dim() });
            }
            op.entries.clone()
        }
        None => Array2::eye(p),
    };
    let hermitian = matches!(qubit, None | Some(QubitOp::SigmaZ | QubitOp::SigmaX | QubitOp::Excitation))
        && photon.is_none_or(|o| o.hermitian);
    Ok(OperatorMatrix { entries: OperatorMatrix::kron_entries(&q, &ph), basis: site, hermitian })
}

/// Embeds a one-site operator at `site`, identity on every other site.
pub fn site_operator<T: Real>(
    local_op: &OperatorMatrix<T>,
    site: usize,
    basis: &BasisSpec,
) -> Result<OperatorMatrix<T>> {
    if site >= basis.n_sites {
        return Err(Error::SiteOutOfRange { site, n_sites: basis.n_sites });
    }
    let d = basis.site_dim();
    if local_op.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: local_op.dim() });
    }
    let terms = SparseTerms::from_dense(&local_op.entries);
    let mut out = OperatorMatrix::zeros(*basis);
    terms.embed_into(&mut out.entries, site, basis, Complex::new(T::one(), T::zero()));
    out.hermitian = local_op.hermitian;
    Ok(out)
}

/// Normalized product state with one bare label per site.
pub fn bare_state_vector<T: Real>(labels: &[BareLabel], basis: &BasisSpec) -> Result<Array1<Complex<T>>> {
    let idx = basis.encode(labels)?;
    let mut v = Array1::zeros(basis.dim());
    v[idx] = Complex::new(T::one(), T::zero());
    Ok(v)
}

/// Nonzero entries of a one-site operator, used to assemble multi-site
/// operators without materializing dense Kronecker products.
#[derive(Debug, Clone)]
pub(crate) struct SparseTerms<T: Real> {
    pub entries: Vec<(usize, usize, Complex<T>)>,
}

impl<T: Real> SparseTerms<T> {
    pub fn from_dense(m: &Array2<Complex<T>>) -> Self {
        let entries = m
            .indexed_iter()
            .filter(|(_, z)| z.re != T::zero() || z.im != T::zero())
            .map(|((i, j), z)| (i, j, *z))
            .collect();
        SparseTerms { entries }
    }

    /// `out += scale * (I ⊗ ... ⊗ op_site ⊗ ... ⊗ I)`.
    pub fn embed_into(&self, out: &mut Array2<Complex<T>>, site: usize, basis: &BasisSpec, scale: Complex<T>) {
        let d = basis.site_dim();
        let stride = d.pow((basis.n_sites - 1 - site) as u32);
        let outer = basis.dim() / (d * stride);
        for hi in 0..outer {
            for lo in 0..stride {
                let base = hi * d * stride + lo;
                for &(i, j, z) in &self.entries {
                    out[[base + i * stride, base + j * stride]] =
                        out[[base + i * stride, base + j * stride]] + scale * z;
                }
            }
        }
    }
}

/// `out += scale * (A at site_a)(B at site_b)` for two distinct sites.
pub(crate) fn embed_pair_into<T: Real>(
    out: &mut Array2<Complex<T>>,
    a: &SparseTerms<T>,
    site_a: usize,
    b: &SparseTerms<T>,
    site_b: usize,
    basis: &BasisSpec,
    scale: Complex<T>,
) {
    debug_assert_ne!(site_a, site_b);
    let d = basis.site_dim();
    let stride = |s: usize| d.pow((basis.n_sites - 1 - s) as u32);
    let (sa, sb) = (stride(site_a), stride(site_b));
    for col in 0..basis.dim() {
        let la = (col / sa) % d;
        let lb = (col / sb) % d;
        let base = col - la * sa - lb * sb;
        for &(ia, ja, za) in &a.entries {
            if ja != la {
                continue;
            }
            for &(ib, jb, zb) in &b.entries {
                if jb != lb {
                    continue;
                }
                let row = base + ia * sa + ib * sb;
                out[[row, col]] = out[[row, col]] + scale * za * zb;
            }
        }
    }
}
