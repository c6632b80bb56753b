use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite samples: {0}")]
    NonFinite(String),
    #[error("corrupted spectrum: imaginary residue {residue:.3e} exceeds tolerance")]
    SpectrumCorrupt { residue: f64 },
    #[error("memory budget exceeded: grid needs {needed_mb} MB, budget is {budget_mb} MB")]
    MemoryBudget { needed_mb: usize, budget_mb: usize },
    #[error("blowup detected at t = {time:.6e}: max |u| = {max_abs:.3e}")]
    Blowup { time: f64, max_abs: f64 },
    #[error("bracket expansion failed: {0}")]
    BracketFailure(String),
    #[error("majorant series diverged ({terms} terms without decrease); M too large")]
    SeriesDiverged { terms: usize },
    #[error("boundary mass fraction {fraction:.3e} exceeds tolerance {tol:.3e}; enlarge the box")]
    BoundaryMass { fraction: f64, tol: f64 },
    #[error("no convergence after {iters} iterations (last gap {gap:.3e})")]
    NoConvergence { iters: usize, gap: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
