use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("singular point: {0}")]
    SingularPoint(String),
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("unsupported simple part: {0}")]
    UnsupportedSimplePart(String),
    #[error("nonsmooth point: {0}")]
    NonsmoothPoint(String),
    #[error("unknown problem: {0}")]
    UnknownProblem(String),
    #[error("integration blowup at t = {t}: state norm {norm:e}")]
    IntegrationBlowup { t: f64, norm: f64 },
    #[error("mirror inversion failed: {0}")]
    MirrorInversionFailure(String),
    #[error("inner solver diverged after {iters} iterations (residual {residual:e})")]
    InnerSolverDiverged { iters: usize, residual: f64 },
    #[error("subproblem not solved: {0}")]
    SubproblemNotSolved(String),
    #[error("incompatible configuration: {0}")]
    IncompatibleConfiguration(String),
    #[error("incompatible Lyapunov kind: {0}")]
    IncompatibleKind(String),
    #[error("missing trace field: {0}")]
    MissingTraceField(String),
    #[error("config error: {0}")]
    ConfigError(String),
    #[error("empty series: {0}")]
    EmptySeries(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}
