use thiserror::Error;

use crate::basis::BareLabel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("photon cutoff must be at least 1, got {0}")]
    CutoffTooSmall(usize),

    #[error("basis must have at least one site")]
    NoSites,

    #[error("site {site} out of range for a {n_sites}-site basis")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{photons} photons exceed the cutoff {cutoff}")]
    PhotonsAboveCutoff { photons: usize, cutoff: usize },

    #[error("expected one label per site ({expected}), got {found}")]
    LabelCount { expected: usize, found: usize },

    #[error("site {0} labelled more than once")]
    DuplicateSite(usize),

    #[error("operation requires a {expected}-site basis, got {found} sites")]
    WrongSiteCount { expected: usize, found: usize },

    #[error("operation requires a basis with qubits")]
    MissingQubits,

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported resonance: {0}")]
    UnsupportedResonance(String),

    #[error("near-degenerate energy denominator {gap:e} at intermediate state {state}")]
    DegenerateDenominator { state: BareLabel, gap: f64 },

    #[error("matrix is not Hermitian (max |M - M^H| = {0:e})")]
    NotHermitian(f64),

    #[error("LAPACK eigensolver failed with info = {0}")]
    Eigensolver(i32),

    #[error("state is not normalized (norm = {0})")]
    NotNormalized(f64),

    #[error("level identification ambiguous at omega_c = {omega_c} (best pair weight {weight})")]
    AmbiguousLevels { omega_c: f64, weight: f64 },

    #[error("scan window [{lo}, {hi}] too narrow: gap minimum sits on the boundary")]
    WindowTooNarrow { lo: f64, hi: f64 },

    #[error("invalid scan window: {0}")]
    InvalidWindow(String),

    #[error("no convergence up to cutoff {max_cutoff}")]
    NoConvergence { max_cutoff: usize },

    #[error("photon cutoff insufficient: top Fock levels hold population {tail:e}")]
    CutoffInsufficient { tail: f64 },

    #[error("trajectory horizon {horizon} shorter than required {required}")]
    HorizonTooShort { horizon: f64, required: f64 },

    #[error("required bare-state amplitude not tracked: {0}")]
    OverlapNotTracked(String),
}

pub type Result<T> = std::result::Result<T, Error>;
