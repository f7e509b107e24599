use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    EigenNotConverged { iterations: usize, residual: f64 },

    #[error("system is singular at E = {energy:.15e} eV; refine the energy grid around this point")]
    Singular { energy: f64 },

    #[error("energy grid [{grid_min:.4}, {grid_max:.4}] eV does not cover the transport window [{need_min:.4}, {need_max:.4}] eV")]
    GridCoverage {
        grid_min: f64,
        grid_max: f64,
        need_min: f64,
        need_max: f64,
    },

    #[error("grid under-resolved: {0}")]
    UnderResolved(String),

    #[error("self-consistent loop did not converge in {iterations} iterations (last residual {last_residual:.3e} V)")]
    ScfNotConverged {
        iterations: usize,
        last_residual: f64,
        history: Vec<f64>,
    },

    #[error("Born loop did not converge in {iterations} iterations (last change {last_change:.3e} eV)")]
    BornNotConverged {
        iterations: usize,
        last_change: f64,
        history: Vec<f64>,
    },

    #[error("degenerate normalization: Re f_D(0) = {value:.3e}")]
    DegenerateNormalization { value: f64 },

    #[error("non-monotone response while bracketing {what}")]
    NonMonotone { what: String },

    #[error("no crossing of {target} found for {what} in the scanned range")]
    NoCrossing { what: String, target: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
