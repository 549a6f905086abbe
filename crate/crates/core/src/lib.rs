//! Exact propagators for time-dependent quadratic Hamiltonians.
//!
//! The one-dimensional engine builds the Green function of
//!
//! ```text
//! i ψ_t = −a ψ_xx + b x² ψ − i (c x ψ_x + d ψ) − f x ψ + i g ψ_x
//! ```
//!
//! from the characteristic function `μ(t)` and a ladder of phase integrals.
//! The magnetic module assembles the three-dimensional propagator of a
//! charged spinning particle in time-varying crossed fields, and `oracles`
//! holds the closed-form kernels used to validate both.

pub mod cauchy;
pub mod characteristic;
pub mod coefficients;
pub mod error;
pub mod green1d;
pub mod magnetic3d;
pub mod nls;
pub mod ode;
pub mod oracles;
pub mod quadrature;
pub mod validation;

pub use cauchy::{crank_nicolson, l2_error, propagate, WaveFunction1D};
pub use characteristic::{
    closed_form_characteristic, first_focal_time, solve_characteristic, CharacteristicSolution, Source,
};
pub use coefficients::{make_preset, CoefficientSet, Preset, TimeFunction};
pub use error::{Error, Result};
pub use green1d::{eval_green, phase_coefficients, AmplitudeBranch, Green1D, PhaseEngine, QuadraticPhase};

pub use num_complex::Complex64;
