use thiserror::Error;

use crate::config::ConfigError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("plane-wave truncation n_cut = {0} cannot represent the 4kz harmonic (need n_cut >= 2)")]
    Truncation(usize),

    #[error("Hermitian eigensolver did not converge within {max_iter} sweeps")]
    EigenNoConvergence { max_iter: usize },

    #[error("Dirac fit is ill-conditioned: rms residual {residual:.3e} E_r exceeds {threshold:.3e} E_r")]
    IllConditionedFit { residual: f64, threshold: f64, fit: Box<crate::bandstructure::DiracFit> },

    #[error("positive-energy spinor is undefined at q = 0 with a closed gap")]
    DegenerateSpinor,

    #[error("wave packet is clipped by the domain: {outside:.3e} of the norm lies outside")]
    PacketClipped { outside: f64 },

    #[error("grid does not resolve {what}")]
    UnderResolved { what: String },

    #[error("time step {dt} too large: dt * max|V| = {product:.3} exceeds 0.1")]
    TimeStepTooLarge { dt: f64, product: f64 },

    #[error("norm drift {drift:.3e} at t = {time:.4} exceeds 1e-6")]
    NormDrift { drift: f64, time: f64 },

    #[error("gravity slope {grav} destroys the barrier for every depth up to {v0_max} E_r")]
    BarrierDestroyed { grav: f64, v0_max: f64 },

    #[error("classically forbidden: no real quasimomentum anywhere on the trajectory")]
    ClassicallyForbidden,

    #[error("non-finite value in plot series `{0}`")]
    NonFinite(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// Short machine-readable category, used by the CLI for its one-line error report.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } | Error::Truncation(_) => "parameter",
            Error::Config(_) => "config",
            Error::Io(_) | Error::Snapshot(_) => "io",
            Error::NonFinite(_) => "plot",
            Error::IllConditionedFit { .. } => "fit",
            Error::BarrierDestroyed { .. } | Error::ClassicallyForbidden => "physics",
            Error::PacketClipped { .. } | Error::UnderResolved { .. } | Error::TimeStepTooLarge { .. } => "grid",
            Error::EigenNoConvergence { .. } | Error::DegenerateSpinor | Error::NormDrift { .. } => "numerics",
        }
    }
}
