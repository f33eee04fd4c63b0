use thiserror::Error;

/// Errors raised by the laboratory's numerical operations.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular input: {0}")]
    SingularInput(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("solver failed after {sweeps} sweeps (residual {residual:.3e}): {what}")]
    SolverFailure { what: String, sweeps: usize, residual: f64 },

    #[error("empty domain at t = {t} on an n = {n} grid; increase t or refine the grid")]
    EmptyDomain { t: f64, n: usize },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("chart build lost trajectory at ring {ring}, angle {angle:.6}: {reason}")]
    ChartBuild { ring: usize, angle: f64, reason: String },

    #[error("flow failed at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<LabError>,
    },

    #[error("table weight: {0}")]
    Table(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
