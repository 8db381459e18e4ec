//! Unitary time evolution by spectral propagation, junction experiments and
//! the diagnostics that separate chiral hopping from multiphoton Rabi
//! oscillation.
//!
//! `psi(t) = V exp(-i E t) V^H psi0` is exact up to round-off. Ring
//! Hamiltonians that commute with the cyclic translation are diagonalized
//! block by block in momentum sectors.

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex;

use crate::basis::{bare_state_vector, Atom, BareLabel, BasisSpec, OperatorMatrix};
use crate::error::{Error, Result};
use crate::models::{build_junction, JunctionParams, ModelParams};
use crate::perturbation::{perturbative_result, ResonanceSpec};
use crate::scalar::{lit, to_f64, Real};
use crate::spectrum::eigh_dense;
use crate::symmetry::{SparseVector, TranslationSectors};

/// Samples propagated per matrix-matrix product.
const BATCH: usize = 128;
/// Default largest Fock-tail population accepted at the end of a junction
/// run. At cutoff 8 the four-photon runs leave a few 1e-4 in the top two
/// levels while the tracked observables move by less than 1% against cutoff 9.
pub const TAIL_LIMIT: f64 = 1e-3;

/// Hopping and Rabi timescales of the junction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timescales<T: Real> {
    /// `t_H = 2 pi / (3 sqrt 3 J)`: one hop to a neighbour.
    pub t_hop: T,
    /// `T_H = 3 t_H`: one circulation.
    pub hop_period: T,
    /// `t_R = pi / (2 |Omega|)`: full transfer `|g, n0 + n> -> |e, n0>`.
    pub t_rabi: T,
    /// `T_R = 2 t_R`.
    pub rabi_period: T,
    /// `t_R / t_H = 3 sqrt 3 J / (4 |Omega|)`.
    pub mu: T,
}

impl<T: Real> Timescales<T> {
    pub fn new(hopping: T, omega_eff: T) -> Result<Self> {
        if !(hopping > T::zero()) {
            return Err(Error::InvalidParameter { name: "J", reason: format!("must be > 0, got {hopping}") });
        }
        let omega = omega_eff.abs();
        if !(omega > T::zero()) {
            return Err(Error::InvalidParameter { name: "omega_eff", reason: "must be nonzero".into() });
        }
        let pi = T::PI();
        let root27 = lit::<T>(27.0).sqrt();
        let t_hop = lit::<T>(2.0) * pi / (root27 * hopping);
        let t_rabi = pi / (lit::<T>(2.0) * omega);
        Ok(Timescales {
            t_hop,
            hop_period: lit::<T>(3.0) * t_hop,
            t_rabi,
            rabi_period: lit::<T>(2.0) * t_rabi,
            mu: root27 * hopping / (lit::<T>(4.0) * omega),
        })
    }

    /// `J = 4 mu |Omega| / (3 sqrt 3)`.
    pub fn hopping_for_mu(mu: T, omega_eff: T) -> T {
        lit::<T>(4.0) * mu * omega_eff.abs() / lit::<T>(27.0).sqrt()
    }
}

/// Amplitude history of one bare product state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedAmplitude<T: Real> {
    pub labels: Vec<BareLabel>,
    pub index: usize,
    pub amplitudes: Vec<Complex<T>>,
}

impl<T: Real> TrackedAmplitude<T> {
    /// `|<bare|psi(t)>|^2`.
    pub fn overlaps(&self) -> Vec<T> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Time series of per-site observables. Series are indexed `[site][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    pub basis: BasisSpec,
    pub times: Vec<T>,
    /// `<a_j^dag a_j>`
    pub photons: Vec<Vec<T>>,
    /// `<sigma_j^+ sigma_j^->`; empty without qubits.
    pub qubits: Vec<Vec<T>>,
    pub norm: Vec<T>,
    /// `<psi(t)|H|psi(t)>`, evaluated with the Hamiltonian matrix itself.
    pub energy: Vec<T>,
    pub tracked: Vec<TrackedAmplitude<T>>,
    /// Per site, population of the two highest Fock levels at the final time.
    pub fock_tail: Vec<T>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn tracked_state(&self, labels: &[BareLabel]) -> Option<&TrackedAmplitude<T>> {
        let index = self.basis.encode(labels).ok()?;
        self.tracked.iter().find(|t| t.index == index)
    }

    pub fn max_norm_deviation(&self) -> T {
        self.norm.iter().fold(T::zero(), |m, &n| m.max((n - T::one()).abs()))
    }

    /// `max_t |E(t) - E(0)| / max(|E(0)|, 1)`.
    pub fn max_energy_drift(&self) -> T {
        let Some(&e0) = self.energy.first() else { return T::zero() };
        let scale = e0.abs().max(T::one());
        self.energy.iter().fold(T::zero(), |m, &e| m.max((e - e0).abs() / scale))
    }

    pub fn total_photons(&self) -> Vec<T> {
        (0..self.len()).map(|k| self.photons.iter().map(|s| s[k]).sum()).collect()
    }

    /// Samples with `t <= until`.
    pub fn prefix_len(&self, until: T) -> usize {
        self.times.iter().take_while(|&&t| t <= until).count()
    }
}

/// Row-compressed copy of a Hamiltonian for cheap energy evaluation.
struct SparseRows<T: Real> {
    rows: Vec<Vec<(usize, Complex<T>)>>,
}

impl<T: Real> SparseRows<T> {
    fn new(h: &OperatorMatrix<T>) -> Self {
        let rows = h
            .entries
            .rows()
            .into_iter()
            .map(|r| r.iter().enumerate().filter(|(_, z)| z.norm_sqr() > T::zero()).map(|(j, z)| (j, *z)).collect())
            .collect();
        SparseRows { rows }
    }

    fn expectation<'a>(&self, psi: impl Fn(usize) -> Complex<T> + 'a) -> T {
        let mut total = T::zero();
        for (i, row) in self.rows.iter().enumerate() {
            let mut hpsi = Complex::new(T::zero(), T::zero());
            for &(j, z) in row {
                hpsi = hpsi + z * psi(j);
            }
            total = total + (psi(i).conj() * hpsi).re;
        }
        total
    }
}

struct Sector<T: Real> {
    values: Array1<T>,
    vectors: Array2<Complex<T>>,
    /// Basis vectors of the block in the full space.
    embedding: Vec<SparseVector<T>>,
}

/// Eigendecomposition of a Hamiltonian, split by translation sector when the
/// ring symmetry is present.
pub struct Propagator<T: Real> {
    basis: BasisSpec,
    sectors: Vec<Sector<T>>,
    hamiltonian: SparseRows<T>,
}

impl<T: Real> Propagator<T> {
    pub fn new(h: &OperatorMatrix<T>) -> Result<Self> {
        let defect = h.hermiticity_defect();
        if !h.hermitian || defect > lit::<T>(100.0) * T::epsilon() * h.max_abs().max(T::one()) {
            return Err(Error::NotHermitian(to_f64(defect)));
        }
        let basis = h.basis;
        let translations = (basis.n_sites > 1).then(|| TranslationSectors::new(&basis));
        let sectors = match translations {
            Some(t) if t.is_symmetry_of(h) => (0..t.n_sectors())
                .map(|k| {
                    let (values, vectors) = eigh_dense(&t.block(h, k))?;
                    Ok(Sector { values, vectors, embedding: t.sector_vectors(k) })
                })
                .collect::<Result<Vec<_>>>()?,
            _ => {
                let (values, vectors) = eigh_dense(&h.entries)?;
                let one = Complex::new(T::one(), T::zero());
                vec![Sector { values, vectors, embedding: (0..basis.dim()).map(|i| vec![(i, one)]).collect() }]
            }
        };
        Ok(Propagator { basis, sectors, hamiltonian: SparseRows::new(h) })
    }

    /// Number of independently diagonalized blocks.
    pub fn n_blocks(&self) -> usize {
        self.sectors.len()
    }

    /// Every eigenvalue, ascending.
    pub fn eigenvalues(&self) -> Vec<T> {
        let mut all: Vec<T> = self.sectors.iter().flat_map(|s| s.values.iter().copied()).collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all
    }

    /// Evolves `psi0` to every entry of `times`, recording per-site
    /// observables and the amplitudes of `tracked` bare states.
    pub fn evolve(&self, psi0: &Array1<Complex<T>>, times: &[T], tracked: &[Vec<BareLabel>]) -> Result<Trajectory<T>> {
        let basis = self.basis;
        let dim = basis.dim();
        if psi0.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: psi0.len() });
        }
        let norm0 = psi0.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if (norm0 - T::one()).abs() > lit::<T>(1e-10).max(lit::<T>(100.0) * T::epsilon()) {
            return Err(Error::NotNormalized(to_f64(norm0)));
        }
        let tracked_idx = tracked.iter().map(|labels| basis.encode(labels)).collect::<Result<Vec<_>>>()?;

        // spectral coefficients V^H (P^H psi0) per block
        let coefficients: Vec<Array1<Complex<T>>> = self
            .sectors
            .iter()
            .map(|s| {
                let projected: Array1<Complex<T>> =
                    s.embedding.iter().map(|v| v.iter().map(|&(i, c)| c.conj() * psi0[i]).sum()).collect();
                s.vectors.t().mapv(|z| z.conj()).dot(&projected)
            })
            .collect();

        let diagonals = SiteDiagonals::new(&basis);
        let n_sites = basis.n_sites;
        let mut traj = Trajectory {
            basis,
            times: times.to_vec(),
            photons: vec![Vec::with_capacity(times.len()); n_sites],
            qubits: if basis.qubits { vec![Vec::with_capacity(times.len()); n_sites] } else { Vec::new() },
            norm: Vec::with_capacity(times.len()),
            energy: Vec::with_capacity(times.len()),
            tracked: tracked
                .iter()
                .zip(&tracked_idx)
                .map(|(labels, &index)| TrackedAmplitude { labels: labels.clone(), index, amplitudes: Vec::new() })
                .collect(),
            fock_tail: vec![T::zero(); n_sites],
        };

        for chunk in times.chunks(BATCH) {
            let mut states = Array2::<Complex<T>>::zeros((dim, chunk.len()));
            for (sector, coeff) in self.sectors.iter().zip(&coefficients) {
                let phased = Array2::from_shape_fn((coeff.len(), chunk.len()), |(b, t)| {
                    coeff[b] * Complex::from_polar(T::one(), -sector.values[b] * chunk[t])
                });
                let block_states = sector.vectors.dot(&phased);
                for (b, vector) in sector.embedding.iter().enumerate() {
                    let row = block_states.row(b);
                    for &(i, c) in vector {
                        states.row_mut(i).zip_mut_with(&row, |t, &x| *t = *t + c * x);
                    }
                }
            }
            for column in states.axis_iter(Axis(1)) {
                let probs: Vec<T> = column.iter().map(|z| z.norm_sqr()).collect();
                for j in 0..n_sites {
                    traj.photons[j].push(diagonals.weighted(&diagonals.photons[j], &probs));
                    if basis.qubits {
                        traj.qubits[j].push(diagonals.weighted(&diagonals.excited[j], &probs));
                    }
                }
                traj.norm.push(probs.iter().copied().sum::<T>().sqrt());
                traj.energy.push(self.hamiltonian.expectation(|i| column[i]));
                for t in traj.tracked.iter_mut() {
                    t.amplitudes.push(column[t.index]);
                }
            }
            if chunk.as_ptr_range().end == times.as_ptr_range().end {
                let last: Vec<T> = states.column(chunk.len() - 1).iter().map(|z| z.norm_sqr()).collect();
                for j in 0..n_sites {
                    traj.fock_tail[j] = diagonals.weighted(&diagonals.tail[j], &last);
                }
            }
        }
        Ok(traj)
    }
}

/// Diagonal observables as 0/1 or occupation weights over the flat basis.
struct SiteDiagonals<T: Real> {
    photons: Vec<Vec<T>>,
    excited: Vec<Vec<T>>,
    tail: Vec<Vec<T>>,
}

impl<T: Real> SiteDiagonals<T> {
    fn new(basis: &BasisSpec) -> Self {
        let n = basis.n_sites;
        let dim = basis.dim();
        let cutoff = basis.photon_cutoff;
        let mut photons = vec![vec![T::zero(); dim]; n];
        let mut excited = vec![vec![T::zero(); dim]; n];
        let mut tail = vec![vec![T::zero(); dim]; n];
        for idx in 0..dim {
            for (j, local) in basis.locals_from_flat(idx).into_iter().enumerate() {
                let (atom, m) = basis.decode_local(local);
                photons[j][idx] = T::from_usize(m).unwrap();
                if basis.qubits && atom == Atom::Excited {
                    excited[j][idx] = T::one();
                }
                if m + 1 >= cutoff {
                    tail[j][idx] = T::one();
                }
            }
        }
        SiteDiagonals { photons, excited, tail }
    }

    fn weighted(&self, weights: &[T], probs: &[T]) -> T {
        weights.iter().zip(probs).map(|(&w, &p)| w * p).sum()
    }
}

/// `psi(t) = exp(-i H t) psi0` sampled at `times`.
pub fn evolve<T: Real>(
    h: &OperatorMatrix<T>,
    psi0: &Array1<Complex<T>>,
    times: &[T],
    tracked: &[Vec<BareLabel>],
) -> Result<Trajectory<T>> {
    Propagator::new(h)?.evolve(psi0, times, tracked)
}

/// `samples` equally spaced times covering `[0, horizon]`.
pub fn time_grid<T: Real>(horizon: T, samples: usize) -> Vec<T> {
    match samples {
        0 => Vec::new(),
        1 => vec![T::zero()],
        _ => {
            let step = horizon / T::from_usize(samples - 1).unwrap();
            (0..samples).map(|k| step * T::from_usize(k).unwrap()).collect()
        }
    }
}

/// Length of a junction run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon<T> {
    HopPeriods(T),
    RabiPeriods(T),
}

/// Cell couplings and ring settings of a junction run. The photon frequency
/// is fixed to the perturbative resonance and the hopping to the requested
/// `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionSetup<T: Real> {
    pub lambda: T,
    pub kappa: T,
    pub theta: T,
    /// Rotating-wave cells (independent of the resonance used for timescales).
    pub rwa: bool,
    pub mu: T,
    pub cutoff: usize,
    /// Largest population allowed in the two highest Fock levels of any site
    /// at the final time.
    pub tail_limit: T,
}

#[derive(Debug, Clone)]
pub struct JunctionRun<T: Real> {
    pub params: JunctionParams<T>,
    pub omega_eff: T,
    pub timescales: Timescales<T>,
    pub trajectory: Trajectory<T>,
}

impl<T: Real> JunctionRun<T> {
    /// `|g, n0 + n>_1 |g, 0>_2 |g, 0>_3`, the initial state.
    pub fn initial_labels(spec: &ResonanceSpec) -> Vec<BareLabel> {
        vec![spec.initial_state(), BareLabel::ground(1, 0), BareLabel::ground(2, 0)]
    }

    /// `|e, n0>_1 |g, 0>_2 |g, 0>_3`.
    pub fn final_labels(spec: &ResonanceSpec) -> Vec<BareLabel> {
        vec![spec.final_state(), BareLabel::ground(1, 0), BareLabel::ground(2, 0)]
    }
}

/// Evolves `|g, n0 + n>_1 |g, 0>_2 |g, 0>_3` in the three-site junction.
///
/// Fails with [`Error::CutoffInsufficient`] when the two highest Fock levels
/// of any site hold more than `setup.tail_limit` at the final time.
pub fn junction_experiment<T: Real>(
    setup: &JunctionSetup<T>,
    spec: &ResonanceSpec,
    horizon: Horizon<T>,
    samples: usize,
) -> Result<JunctionRun<T>> {
    if !(setup.mu > T::zero()) {
        return Err(Error::InvalidParameter { name: "mu", reason: format!("must be > 0, got {}", setup.mu) });
    }
    let pert = perturbative_result(spec, setup.lambda, setup.kappa)?;
    let omega_eff = pert.omega_eff.expect("perturbative coupling");
    let hopping = Timescales::hopping_for_mu(setup.mu, omega_eff);
    let cell = ModelParams::new(pert.omega_c_res, setup.lambda, setup.kappa)?;
    let params = JunctionParams::new(cell, hopping, setup.theta, setup.rwa)?;
    let timescales = Timescales::new(hopping, omega_eff)?;

    let basis = BasisSpec::new(3, setup.cutoff)?;
    let h = build_junction(&params, &basis)?;
    let initial = JunctionRun::<T>::initial_labels(spec);
    let psi0 = bare_state_vector(&initial, &basis)?;
    let span = match horizon {
        Horizon::HopPeriods(x) => x * timescales.hop_period,
        Horizon::RabiPeriods(x) => x * timescales.rabi_period,
    };
    let tracked = [initial, JunctionRun::<T>::final_labels(spec)];
    let trajectory = evolve(&h, &psi0, &time_grid(span, samples), &tracked)?;
    let tail = trajectory.fock_tail.iter().fold(T::zero(), |m, &x| m.max(x));
    if tail > setup.tail_limit {
        return Err(Error::CutoffInsufficient { tail: to_f64(tail) });
    }
    Ok(JunctionRun { params, omega_eff, timescales, trajectory })
}

/// Minimum over the first Rabi period `[0, pi / |Omega|]` of
/// `|<ref(t)|psi(t)>|^2` with `ref(t) = cos(Omega t) |i> - i sin(Omega t) |f>`,
/// the two-level prediction for the signed coupling `Omega`. The bare states
/// `|i>`, `|f>` of `spec` sit on the first site; any other sites are in
/// `|g, 0>`.
pub fn rabi_fidelity<T: Real>(traj: &Trajectory<T>, spec: &ResonanceSpec, omega_eff: T) -> Result<T> {
    let rest: Vec<BareLabel> = (1..traj.basis.n_sites).map(|s| BareLabel::ground(s, 0)).collect();
    let with_rest = |first: BareLabel| std::iter::once(first).chain(rest.iter().copied()).collect::<Vec<_>>();
    let find = |labels: Vec<BareLabel>| {
        traj.tracked_state(&labels)
            .ok_or_else(|| Error::OverlapNotTracked(labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("")))
    };
    let amp_i = find(with_rest(spec.initial_state()))?;
    let amp_f = find(with_rest(spec.final_state()))?;
    let period = T::PI() / omega_eff.abs();
    let end = *traj.times.last().unwrap_or(&T::zero());
    if end < period * (T::one() - lit(1e-9)) {
        return Err(Error::HorizonTooShort { horizon: to_f64(end), required: to_f64(period) });
    }
    let i = Complex::new(T::zero(), T::one());
    let mut worst = T::one();
    for (k, &t) in traj.times.iter().enumerate().take(traj.prefix_len(period)) {
        let phase = omega_eff * t;
        // <ref|psi> = cos a_i + i sin a_f
        let overlap = amp_i.amplitudes[k] * phase.cos() + i * amp_f.amplitudes[k] * phase.sin();
        worst = worst.min(overlap.norm_sqr());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chirality {
    /// Site 2 is reached before site 3.
    Forward,
    Backward,
    None,
}

impl std::fmt::Display for Chirality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Chirality::Forward => "forward",
            Chirality::Backward => "backward",
            Chirality::None => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiralityReport<T> {
    pub chirality: Chirality,
    /// First-peak times of sites 2 and 3 above half the initial photon number.
    pub first_peaks: [Option<T>; 2],
}

/// First interior local maximum of `series[range]` above `threshold`.
fn first_peak<T: Real>(series: &[T], range: std::ops::Range<usize>, threshold: T) -> Option<usize> {
    let (lo, hi) = (range.start, range.end.min(series.len()));
    (lo.max(1)..hi.saturating_sub(1))
        .find(|&k| series[k] > threshold && series[k] >= series[k - 1] && series[k] >= series[k + 1])
}

fn check_three_sites<T: Real>(traj: &Trajectory<T>, hop_period: T) -> Result<T> {
    if traj.basis.n_sites != 3 {
        return Err(Error::WrongSiteCount { expected: 3, found: traj.basis.n_sites });
    }
    let end = *traj.times.last().unwrap_or(&T::zero());
    if end < hop_period * (T::one() - lit(1e-9)) {
        return Err(Error::HorizonTooShort { horizon: to_f64(end), required: to_f64(hop_period) });
    }
    Ok(traj.total_photons()[0] / lit(2.0))
}

/// Which neighbour of site 1 first holds more than half of the initial
/// photons. Peaks closer than one sample are a tie, reported as `None`.
pub fn chirality_diagnostic<T: Real>(traj: &Trajectory<T>, hop_period: T) -> Result<ChiralityReport<T>> {
    let threshold = check_three_sites(traj, hop_period)?;
    let n = traj.len();
    let p2 = first_peak(&traj.photons[1], 0..n, threshold);
    let p3 = first_peak(&traj.photons[2], 0..n, threshold);
    let chirality = match (p2, p3) {
        (Some(a), Some(b)) if a.abs_diff(b) <= 1 => Chirality::None,
        (Some(a), Some(b)) if a < b => Chirality::Forward,
        (Some(_), Some(_)) => Chirality::Backward,
        (Some(_), None) => Chirality::Forward,
        (None, Some(_)) => Chirality::Backward,
        (None, None) => Chirality::None,
    };
    Ok(ChiralityReport { chirality, first_peaks: [p2.map(|k| traj.times[k]), p3.map(|k| traj.times[k])] })
}

/// Chirality of consecutive windows, each one hopping period long.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiralityTimeline<T> {
    /// `(window start, chirality)`.
    pub windows: Vec<(T, Chirality)>,
    /// Start of the first window whose chirality differs from the first one.
    pub first_failure: Option<T>,
}

/// Slides a one-period window in steps of `hop_period / 4`. Inside a window the
/// two earliest above-threshold peaks on distinct sites decide the direction:
/// forward when the later site follows the earlier one in the ring order.
pub fn chirality_timeline<T: Real>(traj: &Trajectory<T>, hop_period: T) -> Result<ChiralityTimeline<T>> {
    let threshold = check_three_sites(traj, hop_period)?;
    let end = *traj.times.last().unwrap();
    let step = hop_period / lit(4.0);
    let mut windows = Vec::new();
    let mut start = T::zero();
    while start + hop_period <= end * (T::one() + lit(1e-12)) {
        let lo = traj.prefix_len(start - step * lit(1e-9));
        let hi = traj.prefix_len(start + hop_period) + 1;
        let mut peaks: Vec<(usize, usize)> =
            (0..3).filter_map(|site| first_peak(&traj.photons[site], lo..hi, threshold).map(|k| (k, site))).collect();
        peaks.sort();
        let chirality = match peaks.as_slice() {
            [(ka, a), (kb, b), ..] if kb - ka > 1 => {
                if *b == (a + 1) % 3 {
                    Chirality::Forward
                } else {
                    Chirality::Backward
                }
            }
            _ => Chirality::None,
        };
        windows.push((start, chirality));
        start = start + step;
    }
    let first = windows.first().map(|w| w.1);
    let first_failure = windows.iter().find(|w| Some(w.1) != first).map(|w| w.0);
    Ok(ChiralityTimeline { windows, first_failure })
}

/// Number of rises from below `lower` to above `upper` (hysteresis counting).
pub fn count_oscillations<T: Real>(series: &[T], upper: T, lower: T) -> usize {
    let mut armed = series.first().is_some_and(|&x| x < lower);
    let mut count = 0;
    for &x in series {
        if armed && x > upper {
            count += 1;
            armed = false;
        } else if !armed && x < lower {
            armed = true;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_grm, build_hopping_only};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_6, PI};

    fn hopping_ring(theta: f64, j: f64, cutoff: usize) -> OperatorMatrix<f64> {
        let cell = ModelParams::new(0.25, 0.0, 0.0).unwrap();
        build_hopping_only(&JunctionParams::new(cell, j, theta, false).unwrap(), cutoff).unwrap()
    }

    fn one_photon_at_first(basis: &BasisSpec) -> Array1<Complex<f64>> {
        let mut psi = Array1::zeros(basis.dim());
        psi[basis.flat_from_locals(&[1, 0, 0])] = Complex::new(1.0, 0.0);
        psi
    }

    #[test]
    fn timescale_relations() {
        let ts = Timescales::new(0.01, -8.709e-4).unwrap();
        assert_abs_diff_eq!(ts.mu, ts.t_rabi / ts.t_hop, epsilon = 1e-12);
        assert_abs_diff_eq!(ts.hop_period, 2.0 * PI / (3f64.sqrt() * 0.01), epsilon = 1e-9);
        let j = Timescales::hopping_for_mu(10.0, -8.709e-4);
        assert_abs_diff_eq!(Timescales::new(j, -8.709e-4).unwrap().mu, 10.0, epsilon = 1e-12);
        assert!(Timescales::new(0.0, 1.0).is_err());
        assert!(Timescales::new(1.0, 0.0).is_err());
    }

    #[test]
    fn diagonal_hamiltonian_only_rotates_phase() {
        let basis = BasisSpec::single(4).unwrap();
        let h = build_grm(&ModelParams::new(0.3, 0.0, 0.0).unwrap(), &basis).unwrap();
        let labels = vec![BareLabel::excited(0, 2)];
        let psi = bare_state_vector(&labels, &basis).unwrap();
        let traj = evolve(&h, &psi, &time_grid(50.0, 101), &[labels]).unwrap();
        for k in 0..traj.len() {
            assert_abs_diff_eq!(traj.photons[0][k], 2.0, epsilon = 1e-13);
            assert_abs_diff_eq!(traj.qubits[0][k], 1.0, epsilon = 1e-13);
            assert_abs_diff_eq!(traj.tracked[0].amplitudes[k].norm(), 1.0, epsilon = 1e-13);
        }
        let expected = Complex::from_polar(1.0, -(0.5 + 0.6) * 50.0);
        assert_abs_diff_eq!((traj.tracked[0].amplitudes[100] - expected).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn chiral_single_photon_transfer() {
        let j = 0.02;
        let h = hopping_ring(FRAC_PI_6, j, 1);
        let ts = Timescales::new(j, 1.0).unwrap();
        let psi = one_photon_at_first(&h.basis);
        let traj = evolve(&h, &psi, &[0.0, ts.t_hop, 2.0 * ts.t_hop, ts.hop_period], &[]).unwrap();
        assert_abs_diff_eq!(traj.photons[1][1], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(traj.photons[2][2], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(traj.photons[0][3], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn reflection_symmetry_without_flux() {
        let h = hopping_ring(0.0, 0.02, 2);
        let psi = one_photon_at_first(&h.basis);
        let traj = evolve(&h, &psi, &time_grid(800.0, 401), &[]).unwrap();
        for k in 0..traj.len() {
            assert_abs_diff_eq!(traj.photons[1][k], traj.photons[2][k], epsilon = 1e-10);
        }
        assert!(traj.total_photons().iter().all(|n| (n - 1.0).abs() < 1e-10));
        let report = chirality_diagnostic(&traj, Timescales::new(0.02, 1.0).unwrap().hop_period).unwrap();
        assert_eq!(report.chirality, Chirality::None);
    }

    #[test]
    fn hopping_ring_uses_translation_sectors() {
        let h = hopping_ring(FRAC_PI_6, 0.02, 2);
        let p = Propagator::new(&h).unwrap();
        assert_eq!(p.n_blocks(), 3);
        let full = crate::spectrum::eigendecompose(&h).unwrap().eigenvalues;
        for (a, b) in p.eigenvalues().iter().zip(full.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn sector_and_dense_propagation_agree() {
        let basis = BasisSpec::new(3, 2).unwrap();
        let cell = ModelParams::new(0.26, 0.05, 0.01).unwrap();
        let h = build_junction(&JunctionParams::new(cell, 0.01, FRAC_PI_6, false).unwrap(), &basis).unwrap();
        let labels = vec![BareLabel::ground(0, 2), BareLabel::ground(1, 0), BareLabel::ground(2, 0)];
        let psi = bare_state_vector(&labels, &basis).unwrap();
        let times = time_grid(300.0, 31);
        let sectored = evolve(&h, &psi, &times, std::slice::from_ref(&labels)).unwrap();

        // reference: dense eigenbasis of the whole matrix
        let (e, v) = eigh_dense(&h.entries).unwrap();
        let c = v.t().mapv(|z| z.conj()).dot(&psi);
        for (k, &t) in times.iter().enumerate() {
            let phased: Array1<Complex<f64>> =
                c.iter().zip(e.iter()).map(|(c, e)| c * Complex::from_polar(1.0, -e * t)).collect();
            let state = v.dot(&phased);
            let idx = basis.encode(&labels).unwrap();
            assert_abs_diff_eq!((state[idx] - sectored.tracked[0].amplitudes[k]).norm(), 0.0, epsilon = 1e-11);
        }
        assert!(sectored.max_norm_deviation() < 1e-12);
        assert!(sectored.max_energy_drift() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let h = hopping_ring(0.0, 0.02, 1);
        let mut psi = one_photon_at_first(&h.basis);
        psi[0] = Complex::new(1.0, 0.0);
        assert!(matches!(evolve(&h, &psi, &[0.0], &[]), Err(Error::NotNormalized(_))));
        let mut skew = h.clone();
        skew.entries[[0, 1]] = Complex::new(0.0, 1.0);
        assert!(matches!(evolve(&skew, &one_photon_at_first(&h.basis), &[0.0], &[]), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn chirality_needs_a_full_period() {
        let h = hopping_ring(FRAC_PI_6, 0.02, 1);
        let traj = evolve(&h, &one_photon_at_first(&h.basis), &time_grid(10.0, 11), &[]).unwrap();
        assert!(matches!(chirality_diagnostic(&traj, 100.0), Err(Error::HorizonTooShort { .. })));
    }

    #[test]
    fn forward_chirality_with_peak_gap_one_hop() {
        let j = 0.02;
        let h = hopping_ring(FRAC_PI_6, j, 1);
        let ts = Timescales::new(j, 1.0).unwrap();
        let traj = evolve(&h, &one_photon_at_first(&h.basis), &time_grid(3.0 * ts.hop_period, 1201), &[]).unwrap();
        let report = chirality_diagnostic(&traj, ts.hop_period).unwrap();
        assert_eq!(report.chirality, Chirality::Forward);
        let [p2, p3] = report.first_peaks.map(Option::unwrap);
        assert!((p3 - p2 - ts.t_hop).abs() < 2.0 * ts.hop_period / 400.0);
        // perfect hopping never loses its direction
        let timeline = chirality_timeline(&traj, ts.hop_period).unwrap();
        assert_eq!(timeline.first_failure, None);
        assert!(timeline.windows.iter().all(|w| w.1 == Chirality::Forward));
    }

    #[test]
    fn reversed_flux_reverses_chirality() {
        let j = 0.02;
        let h = hopping_ring(-FRAC_PI_6, j, 1);
        let ts = Timescales::new(j, 1.0).unwrap();
        let traj = evolve(&h, &one_photon_at_first(&h.basis), &time_grid(ts.hop_period, 401), &[]).unwrap();
        assert_eq!(chirality_diagnostic(&traj, ts.hop_period).unwrap().chirality, Chirality::Backward);
    }

    #[test]
    fn oscillation_counting() {
        let series: Vec<f64> = (0..1000).map(|k| (k as f64 * 0.05).sin().powi(2)).collect();
        // sin^2 has period pi: 50 / pi rises
        assert_eq!(count_oscillations(&series, 0.6, 0.4), 16);
        assert_eq!(count_oscillations(&[0.5, 0.5], 0.6, 0.4), 0);
    }

    #[test]
    fn weak_coupling_two_level_fidelity() {
        let spec = ResonanceSpec::new(3, 0, false).unwrap();
        let (lambda, kappa) = (0.02, 0.0);
        let pert = perturbative_result(&spec, lambda, kappa).unwrap();
        let omega: f64 = pert.omega_eff.unwrap();
        let basis = BasisSpec::single(16).unwrap();
        let h = build_grm(&ModelParams::new(pert.omega_c_res, lambda, kappa).unwrap(), &basis).unwrap();
        let labels = vec![spec.initial_state()];
        let psi = bare_state_vector(&labels, &basis).unwrap();
        let period = PI / omega.abs();
        let traj = evolve(&h, &psi, &time_grid(period, 2001), &[labels, vec![spec.final_state()]]).unwrap();
        let fidelity = rabi_fidelity(&traj, &spec, omega).unwrap();
        assert!((0.98..=1.0).contains(&fidelity), "{fidelity}");
        let untracked = evolve(&h, &psi, &time_grid(period, 11), &[]).unwrap();
        assert!(matches!(rabi_fidelity(&untracked, &spec, omega), Err(Error::OverlapNotTracked(_))));
    }
}
