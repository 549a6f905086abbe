use thiserror::Error;

/// Errors raised by the propagator library.
///
/// Every variant maps to a stable, module-qualified code through
/// [`Error::code`] and [`Error::module`], which the CLI forwards verbatim in
/// its machine-readable error reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coefficient a(t) vanishes at t = {t}")]
    DegenerateDiffusion { t: f64 },

    #[error("coefficient evaluation failed at t = {t}: {reason}")]
    CoefficientEvaluation { t: f64, reason: String },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("time {t} outside the domain [0, {t_max}]")]
    OutsideDomain { t: f64, t_max: f64 },

    #[error("preset `{0}` has no closed-form characteristic function")]
    NoClosedForm(String),

    #[error("time {t} is at or beyond the validity window end {window}")]
    OutsideValidityWindow { t: f64, window: f64 },

    #[error("caustic: characteristic function vanishes at t = {t}")]
    Caustic { t: f64 },

    #[error("adaptive quadrature did not converge on [{a}, {b}] (error estimate {estimate:e})")]
    QuadratureNonConvergence { a: f64, b: f64, estimate: f64 },

    #[error("initial data does not decay at the grid edges (|psi0| = {edge:e}, limit {limit:e})")]
    InsufficientDecay { edge: f64, limit: f64 },

    #[error("wave function grids differ: {0}")]
    GridMismatch(String),

    #[error("singular tridiagonal system at row {row}")]
    SingularSystem { row: usize },

    #[error("finite-difference stencil leaves the valid domain: {0}")]
    StencilDomain(String),

    #[error("blow-up reached: mu(t) = {mu} <= 0 at t = {t}")]
    BlowUp { t: f64, mu: f64 },

    #[error("magnetic field vanishes or changes sign at t = {t}")]
    FieldSignChange { t: f64 },

    #[error("degenerate Gaussian: S_H0(t) = {s0:e} at t = {t}")]
    DegenerateGaussian { t: f64, s0: f64 },

    #[error("discriminant paths disagree on {coefficient}: closed form {closed_form}, expansion {expansion}")]
    DiscriminantMismatch {
        coefficient: String,
        closed_form: f64,
        expansion: f64,
    },

    #[error("Bessel evaluation did not converge for order {order} at x = {x}")]
    BesselNonConvergence { order: f64, x: f64 },
}

impl Error {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnknownPreset(_) => "UNKNOWN_PRESET",
            Error::InvalidParameter(_) => "INVALID_PARAMETER",
            Error::DegenerateDiffusion { .. } => "DEGENERATE_DIFFUSION",
            Error::CoefficientEvaluation { .. } => "COEFFICIENT_EVALUATION",
            Error::StepSizeUnderflow { .. } => "STEP_SIZE_UNDERFLOW",
            Error::OutsideDomain { .. } => "OUTSIDE_DOMAIN",
            Error::NoClosedForm(_) => "NO_CLOSED_FORM",
            Error::OutsideValidityWindow { .. } => "OUTSIDE_VALIDITY_WINDOW",
            Error::Caustic { .. } => "CAUSTIC",
            Error::QuadratureNonConvergence { .. } => "QUADRATURE_NON_CONVERGENCE",
            Error::InsufficientDecay { .. } => "INSUFFICIENT_DECAY",
            Error::GridMismatch(_) => "GRID_MISMATCH",
            Error::SingularSystem { .. } => "SINGULAR_SYSTEM",
            Error::StencilDomain(_) => "STENCIL_DOMAIN",
            Error::BlowUp { .. } => "BLOW_UP",
            Error::FieldSignChange { .. } => "FIELD_SIGN_CHANGE",
            Error::DegenerateGaussian { .. } => "DEGENERATE_GAUSSIAN",
            Error::DiscriminantMismatch { .. } => "DISCRIMINANT_MISMATCH",
            Error::BesselNonConvergence { .. } => "BESSEL_NON_CONVERGENCE",
        }
    }

    /// Name of the module the error originates from.
    pub fn module(&self) -> &'static str {
        match self {
            Error::UnknownPreset(_)
            | Error::DegenerateDiffusion { .. }
            | Error::CoefficientEvaluation { .. } => "coefficients",
            Error::InvalidParameter(_) => "core",
            Error::StepSizeUnderflow { .. }
            | Error::OutsideDomain { .. }
            | Error::NoClosedForm(_) => "characteristic",
            Error::OutsideValidityWindow { .. }
            | Error::Caustic { .. }
            | Error::QuadratureNonConvergence { .. }
            | Error::StencilDomain(_) => "green1d",
            Error::InsufficientDecay { .. }
            | Error::GridMismatch(_)
            | Error::SingularSystem { .. } => "cauchy",
            Error::BlowUp { .. } => "nls",
            Error::FieldSignChange { .. }
            | Error::DegenerateGaussian { .. }
            | Error::DiscriminantMismatch { .. }
            | Error::BesselNonConvergence { .. } => "magnetic3d",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
