//! Cyclic translation symmetry of identical sites on a ring.
//!
//! The translation `T` moves the content of site `j` to site `j + 1 (mod L)`.
//! For a ring Hamiltonian with identical cells and uniform hopping, `[H, T] = 0`
//! and `H` splits into `L` momentum blocks. The sector-`k` basis vector built
//! from the orbit `{r, T r, ..., T^{s-1} r}` of size `s` is
//! `|o, k> = s^{-1/2} sum_m w^{-k m} T^m |r>` with `w = exp(2 pi i / L)`; it
//! exists only when `k s = 0 (mod L)`.

use ndarray::Array2;
use num_complex::Complex;

use crate::basis::{BasisSpec, OperatorMatrix};
use crate::scalar::{lit, Real};

/// One translation orbit, `members[m] = T^m r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orbit {
    pub members: Vec<usize>,
}

/// A symmetry-adapted basis vector as sparse `(flat index, coefficient)` pairs.
pub type SparseVector<T> = Vec<(usize, Complex<T>)>;

#[derive(Debug, Clone)]
pub struct TranslationSectors {
    pub basis: BasisSpec,
    pub orbits: Vec<Orbit>,
}

impl TranslationSectors {
    pub fn new(basis: &BasisSpec) -> Self {
        let dim = basis.dim();
        let mut seen = vec![false; dim];
        let mut orbits = Vec::new();
        for start in 0..dim {
            if seen[start] {
                continue;
            }
            let mut members = vec![start];
            seen[start] = true;
            let mut next = translate(basis, start);
            while next != start {
                seen[next] = true;
                members.push(next);
                next = translate(basis, next);
            }
            orbits.push(Orbit { members });
        }
        TranslationSectors { basis: *basis, orbits }
    }

    pub fn n_sectors(&self) -> usize {
        self.basis.n_sites
    }

    /// Orbits contributing to momentum sector `k`.
    pub fn sector_orbits(&self, k: usize) -> Vec<&Orbit> {
        let l = self.basis.n_sites;
        self.orbits.iter().filter(|o| (k * o.members.len()).is_multiple_of(l)).collect()
    }

    pub fn sector_dim(&self, k: usize) -> usize {
        self.sector_orbits(k).len()
    }

    fn phase<T: Real>(&self, turns: i64) -> Complex<T> {
        let l = self.basis.n_sites as i64;
        let angle = T::TAU() * T::from_i64(turns.rem_euclid(l)).unwrap() / T::from_i64(l).unwrap();
        Complex::from_polar(T::one(), angle)
    }

    /// The sector-`k` basis vectors in orbit order.
    pub fn sector_vectors<T: Real>(&self, k: usize) -> Vec<SparseVector<T>> {
        self.sector_orbits(k)
            .into_iter()
            .map(|o| {
                let norm = T::one() / T::from_usize(o.members.len()).unwrap().sqrt();
                o.members.iter().enumerate().map(|(m, &idx)| (idx, self.phase::<T>(-((k * m) as i64)) * norm)).collect()
            })
            .collect()
    }

    /// `<o', k| H |o, k>` for every pair of sector-`k` orbits.
    pub fn block<T: Real>(&self, h: &OperatorMatrix<T>, k: usize) -> Array2<Complex<T>> {
        let vectors = self.sector_vectors::<T>(k);
        let d = vectors.len();
        let mut out = Array2::zeros((d, d));
        for (a, va) in vectors.iter().enumerate() {
            for (b, vb) in vectors.iter().enumerate().take(a + 1) {
                let mut z = Complex::new(T::zero(), T::zero());
                for &(i, ca) in va {
                    for &(j, cb) in vb {
                        z = z + ca.conj() * h.entries[[i, j]] * cb;
                    }
                }
                out[[a, b]] = z;
                out[[b, a]] = z.conj();
            }
        }
        out
    }

    /// `max |H_{T i, T j} - H_{i j}|`, i.e. the size of `[H, T]`.
    pub fn commutator_defect<T: Real>(&self, h: &OperatorMatrix<T>) -> T {
        let dim = self.basis.dim();
        let image: Vec<usize> = (0..dim).map(|i| translate(&self.basis, i)).collect();
        let mut worst = T::zero();
        for i in 0..dim {
            for j in 0..dim {
                worst = worst.max((h.entries[[image[i], image[j]]] - h.entries[[i, j]]).norm());
            }
        }
        worst
    }

    /// True when `h` commutes with the translation to round-off.
    pub fn is_symmetry_of<T: Real>(&self, h: &OperatorMatrix<T>) -> bool {
        let scale = h.max_abs().max(T::one());
        self.commutator_defect(h) <= lit::<T>(100.0) * T::epsilon() * scale
    }
}

/// Flat index of `T |index>`.
pub fn translate(basis: &BasisSpec, index: usize) -> usize {
    let locals = basis.locals_from_flat(index);
    let l = locals.len();
    let mut moved = vec![0; l];
    for (j, &local) in locals.iter().enumerate() {
        moved[(j + 1) % l] = local;
    }
    basis.flat_from_locals(&moved)
}
