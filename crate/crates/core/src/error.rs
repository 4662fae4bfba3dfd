use thiserror::Error;

/// Errors raised by the simulator.
///
/// Variants are grouped by the exit code the scenario runner maps them to:
/// parameter and configuration problems, numerical aborts, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frequency {0} lies in the lower half-plane; response functions are defined for Im z >= 0")]
    LowerHalfPlane(num_complex::Complex64),

    #[error("undamped resonance pole at omega = {omega} (gamma = 0, omega = omega0)")]
    ResonancePole { omega: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("causality check failed: |G(t<0)| = {residual:e} exceeds {tolerance:e} of peak")]
    Causality { residual: f64, tolerance: f64 },

    #[error("Volterra integrator failed: {0}")]
    Volterra(String),

    #[error(
        "kT = {kt} is below hbar*omega0 = {hbar_omega}: the initially uncoupled state produces a \
         zero-point divergence in the fluctuation moments; set the low-temperature override to proceed"
    )]
    LowTemperature { kt: f64, hbar_omega: f64 },

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("fringe resolution: {0}")]
    FringeResolution(String),

    #[error("stability violation at t = {t}: {detail}")]
    Stability { t: f64, detail: String },

    #[error("normalization drift at t = {t}: |norm - 1| = {drift:e} exceeds {limit:e}")]
    NormalizationDrift { t: f64, drift: f64, limit: f64 },

    #[error("boundary mass leak at t = {t}: edge mass {mass:e} exceeds {limit:e}")]
    BoundaryLeak { t: f64, mass: f64, limit: f64 },

    #[error("Wronskian degenerate at t = {t} (value {value:e})")]
    WronskianDegenerate { t: f64, value: f64 },

    #[error("transition kernel degenerate at t = {t}: det A = {det:e}; use the time-dependent master equation for short times")]
    KernelDegenerate { t: f64, det: f64 },

    #[error("coefficient table does not cover t = {t} (table ends at {end})")]
    CoefficientRange { t: f64, end: f64 },

    #[error("attenuation fit failed at t = {t}: {detail}")]
    FitFailure { t: f64, detail: String },

    #[error("packets merged beyond separability at t = {t}")]
    PacketsMerged { t: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors that signal a numerical abort rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature(_)
                | Error::Causality { .. }
                | Error::Volterra(_)
                | Error::Stability { .. }
                | Error::NormalizationDrift { .. }
                | Error::BoundaryLeak { .. }
                | Error::WronskianDegenerate { .. }
                | Error::KernelDegenerate { .. }
                | Error::FitFailure { .. }
                | Error::PacketsMerged { .. }
                | Error::ResonancePole { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
