use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix is rank deficient (pivot {pivot:.3e} at column {column})")]
    RankDeficient { column: usize, pivot: f64 },

    #[error("projection onto the Stiefel manifold is undefined: {0}")]
    ProjectionUndefined(String),

    #[error("not a Stiefel point: ‖XᵀX − I‖ = {residual:.3e} exceeds {tol:.1e}")]
    NotOnManifold { residual: f64, tol: f64 },

    #[error("matrix is not skew-symmetric: ‖X + Xᵀ‖ = {residual:.3e}")]
    NotSkew { residual: f64 },

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("integration diverged after t = {last_good_time}")]
    Divergence { last_good_time: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("stability gain undefined: initial ensembles coincide")]
    UndefinedGain,

    #[error("precondition violated: {0}")]
    Precondition(String),
}
