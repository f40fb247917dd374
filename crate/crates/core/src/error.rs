use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid process or run configuration (bad parameters, degenerate spec).
    #[error("configuration error: {0}")]
    Config(String),

    /// A pivot or shear could not resolve its sign: the spectral parameter sits
    /// within the cancellation tolerance of an eigenvalue-like coincidence.
    #[error("spectral collision at index {index}")]
    SpectralCollision { index: usize },

    /// Operation requires an odd number of edge weights.
    #[error("unsupported parity: operation requires odd n, got {n}")]
    UnsupportedParity { n: usize },

    /// Empirical measures being compared must carry the same number of atoms.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Eigenvalue bisection found no root inside the (already enlarged) bracket.
    #[error("bisection bracket failure: no eigenvalue in log-lambda range [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },

    /// Not a periodic point of the toral map (checked in exact arithmetic).
    #[error("point is not periodic within {cap} iterations")]
    NonPeriodicPoint { cap: usize },

    /// Transfer-process jump count and Sturm inertia count disagreed on a trial.
    /// This is a hard failure: the two counters are provably equal.
    #[error("count mismatch on trial {trial}: transfer says {transfer}, inertia says {inertia}")]
    CountMismatch {
        trial: u64,
        transfer: usize,
        inertia: usize,
        weights: Vec<f64>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
