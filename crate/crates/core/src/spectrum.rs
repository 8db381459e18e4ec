//! Exact diagonalization and avoided-crossing spectroscopy.
//!
//! The resonance of [`ResonanceSpec`] is located numerically by sweeping
//! `omega_c`, identifying at each point the two eigenlevels carrying the bare
//! pair `|g, n0 + n>`, `|e, n0>`, and minimizing their gap.

use ndarray::{s, Array1, Array2, ArrayView1, ShapeBuilder};
use num_complex::Complex;
use rayon::prelude::*;

use crate::basis::{BasisSpec, OperatorMatrix};
use crate::error::{Error, Result};
use crate::models::cell_hamiltonian;
use crate::perturbation::{perturbative_result, resonant_frequency, ResonanceResult, ResonanceSpec};
use crate::scalar::{lit, to_f64, Real};

/// Gaps below this are reported as exact level crossings.
pub const CROSSING_GAP: f64 = 1e-9;
/// Minimum combined bare-pair weight for a level to be identified by overlap.
pub const OVERLAP_FLOOR: f64 = 0.5;
/// Coarse scan resolution.
pub const SCAN_POINTS: usize = 200;
/// Width of the final golden-section bracket in `omega_c`.
pub const REFINE_TOLERANCE: f64 = 1e-10;
/// Relative tolerances of [`converge_cutoff`] for frequencies and gaps.
pub const OMEGA_TOLERANCE: f64 = 1e-8;
pub const DELTA_TOLERANCE: f64 = 1e-4;
/// Largest cutoff tried by [`converge_cutoff`].
pub const MAX_CUTOFF: usize = 128;

/// Ascending eigenvalues with orthonormal eigenvectors in the columns.
#[derive(Debug, Clone)]
pub struct SpectrumResult<T: Real> {
    pub eigenvalues: Array1<T>,
    pub eigenvectors: Array2<Complex<T>>,
    pub basis: BasisSpec,
}

impl<T: Real> SpectrumResult<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> ArrayView1<'_, Complex<T>> {
        self.eigenvectors.column(k)
    }

    /// `max_k max |H v_k - E_k v_k|`.
    pub fn max_residual(&self, h: &OperatorMatrix<T>) -> T {
        let hv = h.entries.dot(&self.eigenvectors);
        let mut worst = T::zero();
        for (k, &e) in self.eigenvalues.iter().enumerate() {
            for (a, b) in hv.column(k).iter().zip(self.eigenvectors.column(k)) {
                worst = worst.max((*a - *b * e).norm());
            }
        }
        worst
    }

    /// `max |V^H V - 1|`.
    pub fn orthonormality_defect(&self) -> T {
        let v = &self.eigenvectors;
        let gram = v.t().mapv(|z| z.conj()).dot(v);
        let mut worst = T::zero();
        for ((i, j), z) in gram.indexed_iter() {
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((*z - Complex::new(target, T::zero())).norm());
        }
        worst
    }
}

/// Hermitian eigendecomposition of a dense matrix (only the lower triangle is
/// read by LAPACK).
pub(crate) fn eigh_dense<T: Real>(m: &Array2<Complex<T>>) -> Result<(Array1<T>, Array2<Complex<T>>)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m.ncols() });
    }
    // iterating the transpose in logical order yields column-major storage
    let mut a: Vec<Complex<T>> = m.t().iter().copied().collect();
    let mut w = vec![T::zero(); n];
    let mut z = vec![Complex::new(T::zero(), T::zero()); n * n];
    T::hermitian_eigen(n, &mut a, &mut w, &mut z).map_err(Error::Eigensolver)?;
    let vectors = Array2::from_shape_vec((n, n).f(), z).expect("n * n eigenvector entries");
    Ok((Array1::from(w), vectors))
}

fn hermiticity_tolerance<T: Real>(h: &OperatorMatrix<T>) -> T {
    lit::<T>(100.0) * T::epsilon() * h.max_abs().max(T::one())
}

/// Full spectrum of a Hermitian operator.
pub fn eigendecompose<T: Real>(h: &OperatorMatrix<T>) -> Result<SpectrumResult<T>> {
    let defect = h.hermiticity_defect();
    if !h.hermitian || defect > hermiticity_tolerance(h) {
        return Err(Error::NotHermitian(to_f64(defect)));
    }
    let (eigenvalues, eigenvectors) = eigh_dense(&h.entries)?;
    Ok(SpectrumResult { eigenvalues, eigenvectors, basis: h.basis })
}

/// Scan configuration; `None` fields take the documented defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScanOptions {
    /// `(lo, hi)` in `omega_c`. Default `[1/n - 0.02, max(1/n + 0.05, omega_pert + 0.02)]`.
    pub window: Option<(f64, f64)>,
    /// Photon cutoff. Default `n0 + n + 12`; must be at least `n0 + n + 6`.
    pub cutoff: Option<usize>,
}

impl ScanOptions {
    pub fn with_cutoff(cutoff: usize) -> Self {
        ScanOptions { window: None, cutoff: Some(cutoff) }
    }
}

pub fn default_cutoff(spec: &ResonanceSpec) -> usize {
    (spec.n0 + spec.n) as usize + 12
}

/// Default window; widened above `1/n + 0.05` when the perturbative estimate
/// lies beyond it.
pub fn default_window(spec: &ResonanceSpec, lambda: f64, kappa: f64) -> (f64, f64) {
    let w0 = 1.0 / spec.n as f64;
    let pert = resonant_frequency(spec, lambda, kappa).unwrap_or(w0);
    (w0 - 0.02, (w0 + 0.05).max(pert + 0.02))
}

/// Bare-pair weights of one eigenlevel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelWeights<T: Real> {
    pub level: usize,
    /// `|<g, n0 + n|v>|^2`
    pub initial: T,
    /// `|<e, n0|v>|^2`
    pub final_: T,
}

/// The tracked pair at one end of the scan window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointOverlaps<T: Real> {
    pub omega_c: T,
    pub lower: LevelWeights<T>,
    pub upper: LevelWeights<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingResult<T: Real> {
    pub omega_c_res: T,
    /// Gap at `omega_c_res`; zero for an exact crossing.
    pub delta: T,
    /// The gap below [`CROSSING_GAP`]: the levels cross instead of repelling.
    pub crossing: bool,
    /// Eigenlevel indices (ascending) of the tracked pair at `omega_c_res`.
    pub level_indices: (usize, usize),
    /// Pair weights at the low and high ends of the window.
    pub overlaps: [EndpointOverlaps<T>; 2],
    pub window: (f64, f64),
    pub cutoff: usize,
}

impl<T: Real> CrossingResult<T> {
    pub fn as_resonance(&self) -> ResonanceResult<T> {
        ResonanceResult {
            omega_c_res: self.omega_c_res,
            omega_eff: None,
            delta: self.delta,
            method: crate::perturbation::Method::NumericScan,
        }
    }
}

/// `H(omega_c) = H(0) + omega_c a^dag a` on a single site.
struct Sweep<T: Real> {
    fixed: Array2<Complex<T>>,
    photons: Vec<T>,
    idx_initial: usize,
    idx_final: usize,
}

struct PairAt<T: Real> {
    lower: LevelWeights<T>,
    upper: LevelWeights<T>,
    energies: (T, T),
}

impl<T: Real> PairAt<T> {
    fn gap(&self) -> T {
        self.energies.1 - self.energies.0
    }
}

impl<T: Real> Sweep<T> {
    fn new(spec: &ResonanceSpec, lambda: T, kappa: T, basis: &BasisSpec) -> Result<Self> {
        let fixed = cell_hamiltonian(T::zero(), lambda, kappa, spec.rwa, basis)?.entries;
        let photons = (0..basis.dim()).map(|i| T::from_usize(basis.decode_local(i).1).unwrap()).collect();
        let i = spec.initial_state();
        let f = spec.final_state();
        Ok(Sweep {
            fixed,
            photons,
            idx_initial: basis.local_index(i.atom, i.photons)?,
            idx_final: basis.local_index(f.atom, f.photons)?,
        })
    }

    fn spectrum(&self, omega_c: T) -> Result<(Array1<T>, Array2<Complex<T>>)> {
        let mut h = self.fixed.clone();
        for (k, &p) in self.photons.iter().enumerate() {
            h[[k, k]] = h[[k, k]] + Complex::new(omega_c * p, T::zero());
        }
        eigh_dense(&h)
    }

    fn weights(&self, vectors: &Array2<Complex<T>>, level: usize) -> LevelWeights<T> {
        LevelWeights {
            level,
            initial: vectors[[self.idx_initial, level]].norm_sqr(),
            final_: vectors[[self.idx_final, level]].norm_sqr(),
        }
    }

    /// Identifies the pair by bare weight; falls back to the levels nearest in
    /// energy to `previous` when either weight is below the floor.
    fn pair(&self, omega_c: T, previous: Option<(T, T)>) -> Result<PairAt<T>> {
        let (values, vectors) = self.spectrum(omega_c)?;
        let mut ranked: Vec<LevelWeights<T>> = (0..values.len()).map(|k| self.weights(&vectors, k)).collect();
        ranked.sort_by(|a, b| {
            (b.initial + b.final_).partial_cmp(&(a.initial + a.final_)).unwrap().then(a.level.cmp(&b.level))
        });
        let floor = lit::<T>(OVERLAP_FLOOR);
        let (mut a, mut b) = (ranked[0], ranked[1]);
        if b.initial + b.final_ < floor {
            let Some((e_lo, e_hi)) = previous else {
                return Err(Error::AmbiguousLevels { omega_c: to_f64(omega_c), weight: to_f64(b.initial + b.final_) });
            };
            let nearest = |target: T, skip: Option<usize>| {
                (0..values.len())
                    .filter(|k| Some(*k) != skip)
                    .min_by(|&x, &y| (values[x] - target).abs().partial_cmp(&(values[y] - target).abs()).unwrap())
                    .unwrap()
            };
            let lo = nearest(e_lo, None);
            let hi = nearest(e_hi, Some(lo));
            a = self.weights(&vectors, lo);
            b = self.weights(&vectors, hi);
        }
        let (lower, upper) = if a.level < b.level { (a, b) } else { (b, a) };
        Ok(PairAt { energies: (values[lower.level], values[upper.level]), lower, upper })
    }
}

fn validate_window(window: (f64, f64)) -> Result<()> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || hi <= lo {
        return Err(Error::InvalidWindow(format!("[{lo}, {hi}] must satisfy 0 < lo < hi")));
    }
    Ok(())
}

/// Locates the avoided crossing of the bare pair of `spec` in `omega_c`.
pub fn find_avoided_crossing<T: Real>(
    spec: &ResonanceSpec,
    lambda: T,
    kappa: T,
    options: &ScanOptions,
) -> Result<CrossingResult<T>> {
    let cutoff = options.cutoff.unwrap_or_else(|| default_cutoff(spec));
    let minimum = (spec.n0 + spec.n) as usize + 6;
    if cutoff < minimum {
        return Err(Error::InvalidParameter {
            name: "cutoff",
            reason: format!("must be >= n0 + n + 6 = {minimum}, got {cutoff}"),
        });
    }
    let window = options.window.unwrap_or_else(|| default_window(spec, to_f64(lambda), to_f64(kappa)));
    validate_window(window)?;
    let basis = BasisSpec::single(cutoff)?;
    let sweep = Sweep::new(spec, lambda, kappa, &basis)?;

    let (lo, hi) = (lit::<T>(window.0), lit::<T>(window.1));
    let step = (hi - lo) / T::from_usize(SCAN_POINTS - 1).unwrap();
    let grid: Vec<T> = (0..SCAN_POINTS).map(|k| lo + step * T::from_usize(k).unwrap()).collect();
    let weighted: Vec<Option<PairAt<T>>> = grid.par_iter().map(|&w| sweep.pair(w, None).ok()).collect();

    // continuity pass for points the weights could not resolve
    let mut coarse: Vec<PairAt<T>> = Vec::with_capacity(SCAN_POINTS);
    for (k, slot) in weighted.into_iter().enumerate() {
        let pair = match slot {
            Some(p) => p,
            None => sweep.pair(grid[k], coarse.last().map(|p| p.energies))?,
        };
        coarse.push(pair);
    }

    let best = (0..SCAN_POINTS).min_by(|&a, &b| coarse[a].gap().partial_cmp(&coarse[b].gap()).unwrap()).unwrap();
    if best == 0 || best == SCAN_POINTS - 1 {
        return Err(Error::WindowTooNarrow { lo: window.0, hi: window.1 });
    }

    // golden-section refinement inside the bracketing grid cells
    let anchor = coarse[best].energies;
    let gap_at = |w: T| -> Result<T> { Ok(sweep.pair(w, Some(anchor))?.gap()) };
    let inv_phi = lit::<T>((5f64.sqrt() - 1.0) / 2.0);
    let (mut a, mut b) = (grid[best - 1], grid[best + 1]);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (gap_at(c)?, gap_at(d)?);
    let tol = lit::<T>(REFINE_TOLERANCE);
    while b - a > tol {
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = gap_at(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = gap_at(d)?;
        }
    }
    let omega = (a + b) / lit(2.0);
    let at_min = sweep.pair(omega, Some(anchor))?;
    let gap = at_min.gap();
    let crossing = gap < lit(CROSSING_GAP);

    let endpoint = |p: &PairAt<T>, w: T| EndpointOverlaps { omega_c: w, lower: p.lower, upper: p.upper };
    Ok(CrossingResult {
        omega_c_res: omega,
        delta: if crossing { T::zero() } else { gap },
        crossing,
        level_indices: (at_min.lower.level, at_min.upper.level),
        overlaps: [endpoint(&coarse[0], grid[0]), endpoint(&coarse[SCAN_POINTS - 1], grid[SCAN_POINTS - 1])],
        window,
        cutoff,
    })
}

/// Outcome of [`converge_cutoff`].
#[derive(Debug, Clone, PartialEq)]
pub struct Convergence<T> {
    /// Smallest cutoff whose value was confirmed by the next doubling.
    pub cutoff: usize,
    pub value: T,
    /// `(cutoff, value)` for every evaluation, in order.
    pub history: Vec<(usize, T)>,
}

/// Doubles the cutoff from `start` until two successive values agree to
/// `tolerance` (relative; exact agreement accepts zeros).
pub fn converge_cutoff<T, F>(task: F, start: usize, tolerance: f64) -> Result<Convergence<T>>
where
    T: Real,
    F: Fn(usize) -> Result<T>,
{
    if start < 1 {
        return Err(Error::CutoffTooSmall(start));
    }
    let tol = lit::<T>(tolerance);
    let mut history = vec![(start, task(start)?)];
    let mut cutoff = start;
    while cutoff * 2 <= MAX_CUTOFF {
        cutoff *= 2;
        let value = task(cutoff)?;
        let (prev_cutoff, prev) = *history.last().unwrap();
        history.push((cutoff, value));
        if (value - prev).abs() <= tol * value.abs() {
            return Ok(Convergence { cutoff: prev_cutoff, value: prev, history });
        }
    }
    Err(Error::NoConvergence { max_cutoff: cutoff })
}

/// Per-cell comparison of perturbative and scanned results.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCell<T: Real> {
    pub lambda: T,
    pub kappa: T,
    pub perturbative: Option<ResonanceResult<T>>,
    pub numeric: Option<CrossingResult<T>>,
    /// `|pert - num| / |num| * 100`.
    pub err_omega_pct: Option<T>,
    /// As above; a vanishing gap on both sides counts as 0 %.
    pub err_delta_pct: Option<T>,
    /// Empty on success; otherwise `;`-separated failure reasons.
    pub flags: String,
}

pub fn percentage_error<T: Real>(perturbative: T, numeric: T) -> Option<T> {
    if numeric == T::zero() {
        return (perturbative == T::zero()).then(T::zero);
    }
    Some((perturbative - numeric).abs() / numeric.abs() * lit(100.0))
}

/// Evaluates every `(lambda, kappa)` pair (row-major, `lambda` outer).
/// Failures are recorded in the cell flags.
pub fn error_grid<T: Real>(
    spec: &ResonanceSpec,
    lambdas: &[T],
    kappas: &[T],
    options: &ScanOptions,
) -> Vec<ErrorCell<T>> {
    let cells: Vec<(T, T)> = lambdas.iter().flat_map(|&l| kappas.iter().map(move |&k| (l, k))).collect();
    cells.par_iter().map(|&(l, k)| error_cell(spec, l, k, options)).collect()
}

fn error_cell<T: Real>(spec: &ResonanceSpec, lambda: T, kappa: T, options: &ScanOptions) -> ErrorCell<T> {
    let mut flags = Vec::new();
    let perturbative =
        perturbative_result(spec, lambda, kappa).map_err(|e| flags.push(format!("perturbative: {e}"))).ok();
    let numeric =
        find_avoided_crossing(spec, lambda, kappa, options).map_err(|e| flags.push(format!("scan: {e}"))).ok();
    let (mut err_omega_pct, mut err_delta_pct) = (None, None);
    if let (Some(p), Some(n)) = (&perturbative, &numeric) {
        err_omega_pct = percentage_error(p.omega_c_res, n.omega_c_res);
        err_delta_pct = percentage_error(p.delta, n.delta);
        if err_delta_pct.is_none() {
            flags.push("numeric gap vanishes but perturbative gap does not".into());
        }
    }
    ErrorCell { lambda, kappa, perturbative, numeric, err_omega_pct, err_delta_pct, flags: flags.join("; ") }
}

/// Parity expectations of a pair of levels (diagnostics for parity-forbidden
/// resonances).
pub fn level_expectations<T: Real>(spectrum: &SpectrumResult<T>, op: &OperatorMatrix<T>, levels: &[usize]) -> Vec<T> {
    levels.iter().map(|&k| op.expectation(&spectrum.eigenvectors.slice(s![.., k]).to_owned())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::bare_state_vector;
    use crate::models::{build_grm, build_hopping_only, parity_operator, JunctionParams, ModelParams, ParityKind};
    use approx::assert_abs_diff_eq;

    fn spec(n: u32, rwa: bool) -> ResonanceSpec {
        ResonanceSpec::new(n, 0, rwa).unwrap()
    }

    #[test]
    fn decoupled_bare_energies() {
        let basis = BasisSpec::single(6).unwrap();
        let h = build_grm(&ModelParams::new(0.3, 0.0, 0.0).unwrap(), &basis).unwrap();
        let s = eigendecompose(&h).unwrap();
        let mut bare: Vec<f64> = (0..=6).flat_map(|n| [-0.5 + 0.3 * n as f64, 0.5 + 0.3 * n as f64]).collect();
        bare.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in s.eigenvalues.iter().zip(&bare) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-14);
        }
    }

    #[test]
    fn residual_and_orthonormality() {
        let basis = BasisSpec::single(20).unwrap();
        let h = build_grm(&ModelParams::new(0.25, 0.07, 0.03).unwrap(), &basis).unwrap();
        let s = eigendecompose(&h).unwrap();
        assert!(s.max_residual(&h) < 1e-10);
        assert!(s.orthonormality_defect() < 1e-12);
        assert!(s.eigenvalues.windows(2).into_iter().all(|w| w[0] <= w[1]));
    }

    #[test]
    fn single_precision_spectrum() {
        let basis = BasisSpec::single(10).unwrap();
        let h = build_grm(&ModelParams::<f32>::new(0.25, 0.05, 0.01).unwrap(), &basis).unwrap();
        let h64 = build_grm(&ModelParams::<f64>::new(0.25, 0.05, 0.01).unwrap(), &basis).unwrap();
        let (a, b) = (eigendecompose(&h).unwrap(), eigendecompose(&h64).unwrap());
        for (x, y) in a.eigenvalues.iter().zip(b.eigenvalues.iter()) {
            assert!((*x as f64 - y).abs() < 1e-5);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let basis = BasisSpec::single(2).unwrap();
        let mut h = OperatorMatrix::<f64>::zeros(basis);
        h.entries[[0, 1]] = Complex::new(1.0, 0.0);
        assert!(matches!(eigendecompose(&h), Err(Error::NotHermitian(_))));
        let mut flagged = OperatorMatrix::<f64>::identity(basis);
        flagged.hermitian = false;
        assert!(eigendecompose(&flagged).is_err());
    }

    #[test]
    fn circulant_one_photon_block() {
        let cell = ModelParams::new(0.4, 0.0, 0.0).unwrap();
        let j = 0.01;
        let p = JunctionParams::new(cell, j, std::f64::consts::FRAC_PI_6, false).unwrap();
        let h = build_hopping_only(&p, 1).unwrap();
        // the one-photon states |100>, |010>, |001>
        let idx: Vec<usize> = [[1, 0, 0], [0, 1, 0], [0, 0, 1]].iter().map(|l| h.basis.flat_from_locals(l)).collect();
        let mut block = OperatorMatrix::<f64>::zeros(BasisSpec::photons_only(1, 2).unwrap());
        for (a, &ia) in idx.iter().enumerate() {
            for (b, &ib) in idx.iter().enumerate() {
                block.entries[[a, b]] = h.entries[[ia, ib]];
            }
        }
        let s = eigendecompose(&block).unwrap();
        let r3 = 3f64.sqrt();
        for (got, want) in s.eigenvalues.iter().zip([0.4 - r3 * j, 0.4, 0.4 + r3 * j]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
    }

    #[test]
    fn kappa_zero_eigenvectors_have_definite_parity() {
        let basis = BasisSpec::single(12).unwrap();
        let h = build_grm(&ModelParams::new(0.3, 0.08, 0.0).unwrap(), &basis).unwrap();
        let p = parity_operator::<f64>(ParityKind::Z2, &basis).unwrap();
        let s = eigendecompose(&h).unwrap();
        let all: Vec<usize> = (0..s.dim()).collect();
        for e in level_expectations(&s, &p, &all) {
            assert_abs_diff_eq!(e.abs(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn three_photon_scan_near_closed_form() {
        let s3 = spec(3, false);
        let r = find_avoided_crossing::<f64>(&s3, 0.05, 0.0, &ScanOptions::default()).unwrap();
        assert!(!r.crossing);
        assert!((r.omega_c_res - 0.340711).abs() < 1e-5, "{}", r.omega_c_res);
        assert!((r.delta - 1.3297e-3).abs() < 1e-6, "{}", r.delta);
        let pert = perturbative_result(&s3, 0.05, 0.0).unwrap();
        assert!(percentage_error(pert.omega_c_res, r.omega_c_res).unwrap() < 10.0);
        assert!(percentage_error(pert.delta, r.delta).unwrap() < 10.0);
        assert_eq!(r.level_indices.1, r.level_indices.0 + 1);
        for end in &r.overlaps {
            for w in [end.lower, end.upper] {
                assert!((0.0..=1.0).contains(&w.initial) && (0.0..=1.0).contains(&w.final_));
            }
        }
    }

    #[test]
    fn parity_forbidden_four_photon_crossing() {
        let r = find_avoided_crossing(&spec(4, false), 0.05, 0.0, &ScanOptions::with_cutoff(16)).unwrap();
        assert!(r.crossing);
        assert_eq!(r.delta, 0.0);
    }

    #[test]
    fn tracked_levels_parity_by_n() {
        // kappa = 0: even n pairs opposite Z2 sectors, odd n the same sector
        for n in [3u32, 4] {
            let s = spec(n, false);
            let r = find_avoided_crossing(&s, 0.05, 0.0, &ScanOptions::with_cutoff(16)).unwrap();
            let basis = BasisSpec::single(16).unwrap();
            let h = build_grm(&ModelParams::new(r.omega_c_res + 0.003, 0.05, 0.0).unwrap(), &basis).unwrap();
            let spectrum = eigendecompose(&h).unwrap();
            let parity = parity_operator::<f64>(ParityKind::Z2, &basis).unwrap();
            let i = bare_state_vector::<f64>(&[s.initial_state()], &basis).unwrap();
            let f = bare_state_vector::<f64>(&[s.final_state()], &basis).unwrap();
            let pi = parity.expectation(&i);
            let pf = parity.expectation(&f);
            if n % 2 == 0 {
                assert_eq!(pi, -pf);
            } else {
                assert_eq!(pi, pf);
            }
            let e = level_expectations(&spectrum, &parity, &[r.level_indices.0, r.level_indices.1]);
            assert!((e[0] * e[1] - if n % 2 == 0 { -1.0 } else { 1.0 }).abs() < 1e-8);
        }
    }

    #[test]
    fn window_errors() {
        let s4 = spec(4, false);
        let narrow = ScanOptions { window: Some((0.2, 0.21)), cutoff: None };
        assert!(matches!(find_avoided_crossing(&s4, 0.05, 0.01, &narrow), Err(Error::WindowTooNarrow { .. })));
        let inverted = ScanOptions { window: Some((0.3, 0.2)), cutoff: None };
        assert!(matches!(find_avoided_crossing(&s4, 0.05, 0.01, &inverted), Err(Error::InvalidWindow(_))));
        assert!(find_avoided_crossing(&s4, 0.05, 0.01, &ScanOptions::with_cutoff(9)).is_err());
    }

    #[test]
    fn default_window_widens_for_large_shifts() {
        let (lo, hi) = default_window(&spec(6, false), 0.0, 0.1);
        assert_abs_diff_eq!(lo, 1.0 / 6.0 - 0.02, epsilon = 1e-15);
        assert!(hi > 0.3167 + 0.019);
        let (_, hi3) = default_window(&spec(3, false), 0.01, 0.01);
        assert_abs_diff_eq!(hi3, 1.0 / 3.0 + 0.05, epsilon = 1e-15);
    }

    #[test]
    fn convergence_stops_at_first_agreement() {
        let c = converge_cutoff(|_| Ok(0.25f64), 16, OMEGA_TOLERANCE).unwrap();
        assert_eq!(c.cutoff, 16);
        assert_eq!(c.history.len(), 2);
        let slow = converge_cutoff(|n| Ok(1.0 + 1.0 / (n as f64).powi(4)), 2, 1e-4).unwrap();
        assert!(slow.cutoff >= 8);
        assert!(matches!(converge_cutoff(|n| Ok(n as f64), 4, 1e-8), Err(Error::NoConvergence { max_cutoff: 128 })));
    }

    #[test]
    fn percentage_error_definition() {
        assert_eq!(percentage_error(1.1f64, 1.0).map(|x| (x * 1e6).round() / 1e6), Some(10.0));
        assert_eq!(percentage_error(0.0, 0.0), Some(0.0));
        assert_eq!(percentage_error(1e-3, 0.0), None);
    }

    #[test]
    fn error_grid_trivial_cell_and_order() {
        let s3 = spec(3, false);
        let cells = error_grid(&s3, &[0.0, 0.01], &[0.0, 0.01], &ScanOptions::default());
        assert_eq!(cells.len(), 4);
        assert_eq!((cells[1].lambda, cells[1].kappa), (0.0, 0.01));
        let origin = &cells[0];
        assert!(origin.flags.is_empty(), "{}", origin.flags);
        assert!(origin.numeric.as_ref().unwrap().crossing);
        assert!(origin.err_omega_pct.unwrap() < 1e-6);
        assert_eq!(origin.err_delta_pct, Some(0.0));
        let small = &cells[3];
        assert!(small.err_omega_pct.unwrap() < 5.0);
        assert!(small.err_delta_pct.unwrap() < 5.0);
    }
}
