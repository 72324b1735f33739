use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("{file}, line {line}: {msg}")]
    Parse { file: String, line: u64, msg: String },

    #[error("duplicate subject id `{0}`")]
    DuplicateId(String),

    #[error("event references unknown subject id `{0}`")]
    UnknownSubject(String),

    #[error("subject `{id}`: event after censoring (t = {t}, c = {c})")]
    EventAfterCensoring { id: String, t: f64, c: f64 },

    #[error("subject `{id}`: censoring time {c} exceeds horizon tau = {tau}")]
    CensoringBeyondHorizon { id: String, c: f64, tau: f64 },

    #[error("subject `{id}`: expected {expected} covariates, found {found}")]
    Dimension { id: String, expected: usize, found: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("covariate matrix rank-deficient; shape index unidentifiable")]
    Unidentifiable,

    #[error("objective undefined: no events inside the trimming window")]
    ObjectiveUndefined,

    #[error("no finite solution: {0}")]
    NoFiniteSolution(String),

    #[error("newton iteration did not converge after {iterations} steps (residual norm {residual:e})")]
    NewtonNonConvergence { iterations: usize, residual: f64 },

    #[error("{dropped} of {total} bootstrap replicates failed (limit 10%)")]
    BootstrapFailures { dropped: usize, total: usize },

    #[error("{failed} of {total} Monte Carlo replicates failed (limit 5%)")]
    MonteCarloFailures { failed: usize, total: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
