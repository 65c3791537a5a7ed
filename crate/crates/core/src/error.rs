use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Fejér tail certificate failed for n = {n}: grid maximum {measured:e} exceeds {bound:e}")]
    CertificateFailed { n: u32, measured: f64, bound: f64 },

    #[error("quadrature step {step:e} does not resolve the oscillation (need at most {max_step:e})")]
    UnresolvedOscillation { step: f64, max_step: f64 },

    #[error("quadrature node at t = {t} lies outside the tabulated transform range")]
    OutsideTable { t: f64 },

    #[error("bump transform did not converge: {0}")]
    Convergence(String),

    #[error("scale search for n = {n} exceeded the cap {cap} (last ratio {last_ratio:e})")]
    ScaleCapExceeded { n: u32, cap: u64, last_ratio: f64 },

    #[error("averaged lattice identity violated: lhs = {lhs}, rhs = {rhs}")]
    IdentityViolation { lhs: f64, rhs: f64 },

    #[error("periodic gap check failed: set meets gap translate at {at}")]
    GapCheckFailed { at: f64 },

    #[error("only {accepted} of {requested} shifts passed the block audit after sampling {sampled}")]
    InsufficientShifts { accepted: usize, requested: usize, sampled: u64 },

    #[error("lattice point {point} lies in the excluded set")]
    AvoidanceViolated { point: f64 },

    #[error("cannot open {path}: {source}")]
    Open { path: String, source: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
