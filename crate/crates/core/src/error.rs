use thiserror::Error;

/// Errors surfaced by the solver library.
///
/// The CLI maps these onto exit codes: config errors -> 2, convergence
/// errors -> 3, resource-cap errors -> 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("eigensolver failure: LAPACK {routine} returned info = {info} (n = {n})")]
    Eigensolver {
        routine: &'static str,
        info: i32,
        n: usize,
    },

    #[error("band classification failed: {0}")]
    BandOverlap(String),

    #[error("basis size {size} exceeds the configured cap {cap}")]
    BasisCap { size: usize, cap: usize },

    #[error("operator does not commute with reflection: max |[H,R]| = {norm:.3e} > {tol:.0e}")]
    ParityBroken { norm: f64, tol: f64 },

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("degenerate ground state: gap {gap:.3e} below 1e-10")]
    DegenerateGround { gap: f64 },

    #[error("spectral truncation defect {defect:.3e} exceeds threshold {threshold:.0e} at K = {k}")]
    CompletenessDefect { defect: f64, threshold: f64, k: usize },

    #[error("no crossing: diagonal energies are parallel in the offset parameter")]
    NoCrossing,

    #[error("continuation ambiguity at scan point {point}: competing overlaps within {delta:.1e}")]
    ContinuationAmbiguity { point: usize, delta: f64 },

    #[error("region carries no density (N_D < 1e-12); moments undefined")]
    EmptyRegion,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
