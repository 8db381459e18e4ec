//! Perturbative description of the `n`-photon resonance between the bare
//! states `|i> = |g, n0 + n>` and `|f> = |e, n0>`.
//!
//! Two independent routes are provided and checked against each other:
//!
//! * closed forms for the resonant frequency and the effective coupling;
//! * finite sums over the bare states reachable through the interaction
//!   `V = lambda (a + a^dag) sigma_x + kappa (a^2 + a^dag^2) sigma_x`
//!   (second order for the Stark shift, third order for the coupling).
//!
//! Intermediate states are enumerated from the ladder structure of `V`, never
//! from a per-resonance table.

use std::fmt;

use ndarray::Array2;
use num_complex::Complex;
use num_traits::{FromPrimitive, Num};

use crate::basis::{Atom, BareLabel};
use crate::error::{Error, Result};
use crate::models::ModelParams;
use crate::scalar::{lit, to_f64, Real};

/// Energy denominators smaller than this (in units of `omega_a`) are treated
/// as degenerate.
pub const DEGENERACY_EPS: f64 = 1e-6;

/// Identifies the resonance `|g, n0 + n> <-> |e, n0>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ResonanceSpec {
    pub n: u32,
    pub n0: u32,
    pub rwa: bool,
}

impl ResonanceSpec {
    pub fn new(n: u32, n0: u32, rwa: bool) -> Result<Self> {
        if !(3..=6).contains(&n) {
            return Err(Error::UnsupportedResonance(format!("n = {n} outside 3..=6")));
        }
        if rwa && n != 3 {
            return Err(Error::UnsupportedResonance(format!(
                "the {n}-photon resonance has no third-order path under the RWA"
            )));
        }
        Ok(ResonanceSpec { n, n0, rwa })
    }

    /// `|g, n0 + n>`
    pub fn initial_state(&self) -> BareLabel {
        BareLabel::ground(0, (self.n0 + self.n) as usize)
    }

    /// `|e, n0>`
    pub fn final_state(&self) -> BareLabel {
        BareLabel::excited(0, self.n0 as usize)
    }

    /// Unperturbed resonance `omega_c = omega_a / n`.
    pub fn bare_frequency<T: Real>(&self) -> T {
        T::one() / T::from_u32(self.n).unwrap()
    }
}

impl fmt::Display for ResonanceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-photon (n0 = {}{})", self.n, self.n0, if self.rwa { ", RWA" } else { "" })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ClosedForm,
    PathSum,
    NumericScan,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ClosedForm => "closed_form",
            Method::PathSum => "path_sum",
            Method::NumericScan => "numeric_scan",
        })
    }
}

/// Resonant frequency, coupling and avoided-crossing gap `delta = 2 |omega_eff|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceResult<T: Real> {
    pub omega_c_res: T,
    /// Signed effective coupling; `None` for numeric scans.
    pub omega_eff: Option<T>,
    pub delta: T,
    pub method: Method,
}

/// Coefficients `(c_lambda, c_kappa)` of
/// `omega_c' = 1/n + c_lambda lambda^2 + c_kappa kappa^2`.
///
/// Generic over the number type so the coefficients can be produced in exact
/// rational arithmetic as well as floating point.
pub fn frequency_coefficients<R>(spec: &ResonanceSpec) -> (R, R)
where
    R: Num + FromPrimitive + Clone,
{
    let int = |x: i64| R::from_i64(x).expect("integer representable");
    let n = spec.n as i64;
    let n0 = spec.n0 as i64;
    if spec.rwa {
        // only n = 3 exists under the RWA
        return (int(n0 + 2), int(2 * (n0 + 2) * (n0 + 2)));
    }
    let c_lambda = int(2 * n * (2 * n0 + n + 1)) / int(n * n - 1);
    let c_kappa = int(2 * n * (n0 * n0 + (n0 + n) * (n0 + n) + 2 * n0 + n - 2)) / int(n * n - 4);
    (c_lambda, c_kappa)
}

/// Stark-shifted resonant frequency `omega_c' / omega_a`.
pub fn resonant_frequency<T: Real>(spec: &ResonanceSpec, lambda: T, kappa: T) -> Result<T> {
    check_couplings(lambda, kappa)?;
    let (cl, ck) = frequency_coefficients::<T>(spec);
    Ok(spec.bare_frequency::<T>() + cl * lambda * lambda + ck * kappa * kappa)
}

/// Closed-form effective coupling at `n0 = 0` (negative sign convention).
pub fn effective_coupling<T: Real>(spec: &ResonanceSpec, lambda: T, kappa: T) -> Result<T> {
    check_couplings(lambda, kappa)?;
    if spec.n0 != 0 {
        return Err(Error::UnsupportedResonance(format!(
            "closed forms exist only for n0 = 0 (got n0 = {}); use path_sum_coupling",
            spec.n0
        )));
    }
    let s = |x: f64| lit::<T>(x).sqrt();
    let (l, k) = (lambda, kappa);
    let value = match (spec.n, spec.rwa) {
        (3, true) => -lit::<T>(18.0) * s(6.0) * k * k * l,
        (3, false) => -(lit::<T>(27.0) * s(6.0) * l * k * k + lit::<T>(9.0) * s(6.0) / lit(4.0) * l * l * l),
        (4, false) => -(lit::<T>(128.0) * s(6.0) / lit(9.0)) * l * l * k,
        (5, false) => -(lit::<T>(125.0) * s(30.0) / lit(9.0)) * k * k * l,
        (6, false) => -lit::<T>(27.0) * s(5.0) * k * k * k,
        _ => return Err(Error::UnsupportedResonance(spec.to_string())),
    };
    Ok(value)
}

fn check_couplings<T: Real>(lambda: T, kappa: T) -> Result<()> {
    if !(lambda >= T::zero()) {
        return Err(Error::InvalidParameter { name: "lambda", reason: format!("must be >= 0, got {lambda}") });
    }
    if !(kappa >= T::zero()) {
        return Err(Error::InvalidParameter { name: "kappa", reason: format!("must be >= 0, got {kappa}") });
    }
    Ok(())
}

/// Unperturbed energy `+-1/2 + n omega_c`.
pub fn bare_energy<T: Real>(state: &BareLabel, omega_c: T) -> T {
    let half = lit::<T>(0.5);
    let atom = if state.atom == Atom::Excited { half } else { -half };
    atom + T::from_usize(state.photons).unwrap() * omega_c
}

/// Bare states `|alpha>` with `<alpha|V|state> != 0`, with those matrix
/// elements. Under the RWA only `a^k sigma+` and `a^dag^k sigma-` survive.
pub fn coupled_states<T: Real>(state: &BareLabel, lambda: T, kappa: T, rwa: bool) -> Vec<(BareLabel, T)> {
    let m = state.photons as i64;
    let target = state.atom.flipped();
    let mut out = Vec::with_capacity(4);
    for shift in [-2i64, -1, 1, 2] {
        let coupling = if shift.abs() == 1 { lambda } else { kappa };
        if coupling == T::zero() {
            continue;
        }
        let to = m + shift;
        if to < 0 {
            continue;
        }
        if rwa {
            // sigma+ (g -> e) comes with photon loss, sigma- with gain
            let allowed = match state.atom {
                Atom::Ground => shift < 0,
                Atom::Excited => shift > 0,
            };
            if !allowed {
                continue;
            }
        }
        // <to| a^k |m> or <to| a^dag^k |m>: sqrt of the product of the
        // occupations between the smaller and larger photon numbers
        let hi = m.max(to);
        let lo = m.min(to);
        let ladder: T = ((lo + 1)..=hi).map(|q| T::from_i64(q).unwrap()).fold(T::one(), |acc, q| acc * q).sqrt();
        out.push((BareLabel { site: state.site, atom: target, photons: to as usize }, coupling * ladder));
    }
    out
}

fn denominator<T: Real>(e_ref: T, state: &BareLabel, omega_c: T) -> Result<T> {
    let gap = e_ref - bare_energy(state, omega_c);
    if gap.abs() < lit(DEGENERACY_EPS) {
        return Err(Error::DegenerateDenominator { state: *state, gap: to_f64(gap) });
    }
    Ok(gap)
}

/// Second-order shift `sum_alpha |<alpha|V|i>|^2 / (E_i - E_alpha)` at the
/// photon frequency in `params`.
pub fn stark_shift<T: Real>(state: &BareLabel, params: &ModelParams<T>, rwa: bool) -> Result<T> {
    let e = bare_energy(state, params.omega_c);
    coupled_states(state, params.lambda, params.kappa, rwa)
        .iter()
        .map(|(alpha, v)| Ok(*v * *v / denominator(e, alpha, params.omega_c)?))
        .sum()
}

/// Resonant frequency from equating the Stark-shifted diagonal energies of
/// `|i>` and `|f>`, with the shifts evaluated at `omega_c = 1/n`.
pub fn stark_resonant_frequency<T: Real>(spec: &ResonanceSpec, lambda: T, kappa: T) -> Result<T> {
    let w0 = spec.bare_frequency::<T>();
    let at_bare = ModelParams { omega_c: w0, lambda, kappa };
    let shift_i = stark_shift(&spec.initial_state(), &at_bare, spec.rwa)?;
    let shift_f = stark_shift(&spec.final_state(), &at_bare, spec.rwa)?;
    // E_i - E_f = n omega_c - 1 = shift_f - shift_i
    Ok(w0 + (shift_f - shift_i) / T::from_u32(spec.n).unwrap())
}

/// One third-order path `|i> -> |alpha> -> |beta> -> |f>`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingPath<T: Real> {
    pub alpha: BareLabel,
    pub beta: BareLabel,
    pub contribution: T,
}

/// Every contributing third-order path at `omega_c = 1/n`. `params.omega_c`
/// is ignored; the scheme is fixed by `rwa`, not by `spec.rwa`, so that RWA
/// path sums can be evaluated for any `n`.
pub fn coupling_paths<T: Real>(
    spec: &ResonanceSpec,
    params: &ModelParams<T>,
    rwa: bool,
) -> Result<Vec<CouplingPath<T>>> {
    let omega_c = spec.bare_frequency::<T>();
    let (i, f) = (spec.initial_state(), spec.final_state());
    let e_i = bare_energy(&i, omega_c);
    let (l, k) = (params.lambda, params.kappa);
    let mut paths = Vec::new();
    for (alpha, v_ai) in coupled_states(&i, l, k, rwa) {
        if alpha == i || alpha == f {
            continue;
        }
        let d_alpha = denominator(e_i, &alpha, omega_c)?;
        for (beta, v_ba) in coupled_states(&alpha, l, k, rwa) {
            if beta == i || beta == f {
                continue;
            }
            let v_fb = coupled_states(&beta, l, k, rwa).into_iter().find(|(s, _)| *s == f).map(|(_, v)| v);
            if let Some(v_fb) = v_fb {
                let d_beta = denominator(e_i, &beta, omega_c)?;
                paths.push(CouplingPath { alpha, beta, contribution: v_fb * v_ba * v_ai / (d_alpha * d_beta) });
            }
        }
    }
    Ok(paths)
}

/// Third-order effective coupling
/// `sum_{alpha,beta} <f|V|beta><beta|V|alpha><alpha|V|i> / ((E_i - E_alpha)(E_i - E_beta))`.
pub fn path_sum_coupling<T: Real>(spec: &ResonanceSpec, params: &ModelParams<T>, rwa: bool) -> Result<T> {
    Ok(coupling_paths(spec, params, rwa)?.iter().map(|p| p.contribution).sum())
}

/// Effective Hamiltonian on `span{|i>, |f>}` (in that order).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveTwoLevel<T: Real> {
    /// `E_i + dE_i`, `E_f + dE_f` at the requested `omega_c`.
    pub diagonal: [T; 2],
    pub coupling: T,
}

impl<T: Real> EffectiveTwoLevel<T> {
    pub fn matrix(&self) -> Array2<Complex<T>> {
        let c = |x: T| Complex::new(x, T::zero());
        Array2::from_shape_vec(
            (2, 2),
            vec![c(self.diagonal[0]), c(self.coupling), c(self.coupling), c(self.diagonal[1])],
        )
        .unwrap()
    }

    /// Eigenvalue gap `sqrt(d^2 + 4 Omega^2)`.
    pub fn splitting(&self) -> T {
        let d = self.diagonal[0] - self.diagonal[1];
        (d * d + lit::<T>(4.0) * self.coupling * self.coupling).sqrt()
    }
}

pub fn effective_two_level<T: Real>(spec: &ResonanceSpec, params: &ModelParams<T>) -> Result<EffectiveTwoLevel<T>> {
    let (i, f) = (spec.initial_state(), spec.final_state());
    let e_i = bare_energy(&i, params.omega_c) + stark_shift(&i, params, spec.rwa)?;
    let e_f = bare_energy(&f, params.omega_c) + stark_shift(&f, params, spec.rwa)?;
    let coupling = path_sum_coupling(spec, params, spec.rwa)?;
    Ok(EffectiveTwoLevel { diagonal: [e_i, e_f], coupling })
}

/// Perturbative prediction: closed forms at `n0 = 0`, the path sum otherwise.
pub fn perturbative_result<T: Real>(spec: &ResonanceSpec, lambda: T, kappa: T) -> Result<ResonanceResult<T>> {
    let omega_c_res = resonant_frequency(spec, lambda, kappa)?;
    let (omega_eff, method) = if spec.n0 == 0 {
        (effective_coupling(spec, lambda, kappa)?, Method::ClosedForm)
    } else {
        let params = ModelParams { omega_c: spec.bare_frequency(), lambda, kappa };
        (path_sum_coupling(spec, &params, spec.rwa)?, Method::PathSum)
    };
    Ok(ResonanceResult { omega_c_res, omega_eff: Some(omega_eff), delta: lit::<T>(2.0) * omega_eff.abs(), method })
}
