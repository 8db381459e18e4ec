//! Hamiltonians: the generalized Rabi model (one- and two-photon coupling),
//! its rotating-wave variant, the Z2/Z4 parity operators and the
//! three-resonator junction with a complex hopping phase.
//!
//! Energies are in units of the atomic transition frequency (`omega_a = 1`).
//! Couplings are taken non-negative: conjugating with `sigma_z` maps
//! `(lambda, kappa) -> (-lambda, -kappa)` without changing the spectrum.

use ndarray::Array2;
use num_complex::Complex;

use crate::basis::{
    annihilation_matrix, cell_operator, embed_pair_into, BasisSpec, OperatorMatrix, QubitOp, SparseTerms,
};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// One qubit-resonator cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T: Real> {
    /// Photon frequency `omega_c / omega_a`.
    pub omega_c: T,
    /// One-photon coupling `lambda / omega_a`.
    pub lambda: T,
    /// Two-photon coupling `kappa / omega_a`.
    pub kappa: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(omega_c: T, lambda: T, kappa: T) -> Result<Self> {
        if !(omega_c > T::zero()) || !omega_c.is_finite() {
            return Err(Error::InvalidParameter {
                name: "omega_c",
                reason: format!("must be positive, got {omega_c}"),
            });
        }
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidParameter { name: "lambda", reason: format!("must be >= 0, got {lambda}") });
        }
        if !(kappa >= T::zero()) || !kappa.is_finite() {
            return Err(Error::InvalidParameter { name: "kappa", reason: format!("must be >= 0, got {kappa}") });
        }
        Ok(ModelParams { omega_c, lambda, kappa })
    }

    pub fn with_omega_c(self, omega_c: T) -> Result<Self> {
        Self::new(omega_c, self.lambda, self.kappa)
    }
}

/// Three identical cells joined by hopping `J e^{-i theta}` around a ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionParams<T: Real> {
    pub cell: ModelParams<T>,
    /// Hopping amplitude `J / omega_a`.
    pub hopping: T,
    /// Hopping phase in `[0, 2 pi)`.
    pub theta: T,
    pub rwa: bool,
}

impl<T: Real> JunctionParams<T> {
    /// `theta` is reduced modulo `2 pi`.
    pub fn new(cell: ModelParams<T>, hopping: T, theta: T, rwa: bool) -> Result<Self> {
        if !(hopping >= T::zero()) || !hopping.is_finite() {
            return Err(Error::InvalidParameter { name: "J", reason: format!("must be >= 0, got {hopping}") });
        }
        if !theta.is_finite() {
            return Err(Error::InvalidParameter { name: "theta", reason: "must be finite".into() });
        }
        let tau = T::TAU();
        let mut theta = theta % tau;
        if theta < T::zero() {
            theta = theta + tau;
        }
        Ok(JunctionParams { cell, hopping, theta, rwa })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityKind {
    /// `exp[i pi ((1 + sigma_z)/2 + a^dag a)]`, conserved by the one-photon model.
    Z2,
    /// `exp[i pi ((1 + sigma_z)/2 + a^dag a / 2)]`, conserved by the two-photon model.
    Z4,
}

fn require_single_qubit_site(basis: &BasisSpec) -> Result<()> {
    if basis.n_sites != 1 {
        return Err(Error::WrongSiteCount { expected: 1, found: basis.n_sites });
    }
    if !basis.qubits {
        return Err(Error::MissingQubits);
    }
    Ok(())
}

/// Single-site Hamiltonian for arbitrary-sign couplings.
pub(crate) fn cell_hamiltonian<T: Real>(
    omega_c: T,
    lambda: T,
    kappa: T,
    rwa: bool,
    basis: &BasisSpec,
) -> Result<OperatorMatrix<T>> {
    let site = basis.site_basis();
    let a = annihilation_matrix::<T>(basis.photon_cutoff)?;
    let ad = a.adjoint();
    let a2 = a.matmul(&a);
    let ad2 = ad.matmul(&ad);
    let n = ad.matmul(&a);

    let op = |q: Option<QubitOp>, p: Option<&OperatorMatrix<T>>| cell_operator(&site, q, p).map(|m| m.entries);
    let scaled = |m: Array2<Complex<T>>, x: T| m.mapv(|z| z * x);
    let mut h = scaled(op(Some(QubitOp::SigmaZ), None)?, lit(0.5)) + scaled(op(None, Some(&n))?, omega_c);
    if rwa {
        h = h + scaled(op(Some(QubitOp::SigmaPlus), Some(&a))? + op(Some(QubitOp::SigmaMinus), Some(&ad))?, lambda);
        h = h + scaled(op(Some(QubitOp::SigmaPlus), Some(&a2))? + op(Some(QubitOp::SigmaMinus), Some(&ad2))?, kappa);
    } else {
        h = h + scaled(op(Some(QubitOp::SigmaX), Some(&a))? + op(Some(QubitOp::SigmaX), Some(&ad))?, lambda);
        h = h + scaled(op(Some(QubitOp::SigmaX), Some(&a2))? + op(Some(QubitOp::SigmaX), Some(&ad2))?, kappa);
    }
    Ok(OperatorMatrix { entries: h, basis: site, hermitian: true })
}

/// `H = sigma_z/2 + omega_c a^dag a + lambda (a + a^dag) sigma_x
///      + kappa (a^2 + a^dag^2) sigma_x`.
pub fn build_grm<T: Real>(params: &ModelParams<T>, basis: &BasisSpec) -> Result<OperatorMatrix<T>> {
    require_single_qubit_site(basis)?;
    cell_hamiltonian(params.omega_c, params.lambda, params.kappa, false, basis)
}

/// Rotating-wave variant: `lambda (a sigma+ + a^dag sigma-) + kappa (a^2 sigma+ + a^dag^2 sigma-)`.
pub fn build_grm_rwa<T: Real>(params: &ModelParams<T>, basis: &BasisSpec) -> Result<OperatorMatrix<T>> {
    require_single_qubit_site(basis)?;
    cell_hamiltonian(params.omega_c, params.lambda, params.kappa, true, basis)
}

/// Diagonal parity operator on a single qubit-resonator site.
pub fn parity_operator<T: Real>(kind: ParityKind, basis: &BasisSpec) -> Result<OperatorMatrix<T>> {
    require_single_qubit_site(basis)?;
    let mut m = OperatorMatrix::zeros(*basis);
    let one = T::one();
    let z = T::zero();
    for idx in 0..basis.dim() {
        let (atom, n) = basis.decode_local(idx);
        let e = atom.index();
        // exp(i pi k / 2) for integer k, evaluated exactly
        let quarter_turns = match kind {
            ParityKind::Z2 => 2 * (e + n),
            ParityKind::Z4 => 2 * e + n,
        };
        m.entries[[idx, idx]] = match quarter_turns % 4 {
            0 => Complex::new(one, z),
            1 => Complex::new(z, one),
            2 => Complex::new(-one, z),
            _ => Complex::new(z, -one),
        };
    }
    m.hermitian = kind == ParityKind::Z2;
    Ok(m)
}

fn hopping_into<T: Real>(out: &mut Array2<Complex<T>>, basis: &BasisSpec, hopping: T, theta: T) -> Result<()> {
    let a = annihilation_matrix::<T>(basis.photon_cutoff)?;
    let a_site = if basis.qubits { cell_operator(&basis.site_basis(), None, Some(&a))? } else { a };
    let lower = SparseTerms::from_dense(&a_site.entries);
    let raise = SparseTerms::from_dense(&a_site.adjoint().entries);
    let phase = Complex::from_polar(hopping, -theta);
    let n = basis.n_sites;
    for j in 0..n {
        let next = (j + 1) % n;
        // J e^{-i theta} a_{j+1}^dag a_j + h.c.
        embed_pair_into(out, &raise, next, &lower, j, basis, phase);
        embed_pair_into(out, &raise, j, &lower, next, basis, phase.conj());
    }
    Ok(())
}

fn require_ring(basis: &BasisSpec) -> Result<()> {
    if basis.n_sites != 3 {
        return Err(Error::WrongSiteCount { expected: 3, found: basis.n_sites });
    }
    Ok(())
}

/// `H = sum_j H_j + J sum_j (a_{j+1}^dag a_j e^{-i theta} + h.c.)`, sites
/// `0 -> 1 -> 2 -> 0` cyclically, each `H_j` the (RWA when requested) cell
/// Hamiltonian.
pub fn build_junction<T: Real>(params: &JunctionParams<T>, basis: &BasisSpec) -> Result<OperatorMatrix<T>> {
    require_ring(basis)?;
    if !basis.qubits {
        return Err(Error::MissingQubits);
    }
    let cell = &params.cell;
    let h_cell = cell_hamiltonian(cell.omega_c, cell.lambda, cell.kappa, params.rwa, basis)?;
    let terms = SparseTerms::from_dense(&h_cell.entries);
    let mut h = OperatorMatrix::zeros(*basis);
    let one = Complex::new(T::one(), T::zero());
    for site in 0..basis.n_sites {
        terms.embed_into(&mut h.entries, site, basis, one);
    }
    hopping_into(&mut h.entries, basis, params.hopping, params.theta)?;
    Ok(h)
}

/// Photon-only ring: `omega_c sum_j a_j^dag a_j` plus the hopping term.
pub fn build_hopping_only<T: Real>(params: &JunctionParams<T>, photon_cutoff: usize) -> Result<OperatorMatrix<T>> {
    let basis = BasisSpec::photons_only(3, photon_cutoff)?;
    let mut h = OperatorMatrix::zeros(basis);
    for idx in 0..basis.dim() {
        let photons: usize = basis.locals_from_flat(idx).iter().sum();
        h.entries[[idx, idx]] = Complex::new(params.cell.omega_c * T::from_usize(photons).unwrap(), T::zero());
    }
    hopping_into(&mut h.entries, &basis, params.hopping, params.theta)?;
    Ok(h)
}
