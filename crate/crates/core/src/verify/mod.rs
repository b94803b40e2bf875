//! Manufactured solutions, error norms and convergence studies.
//!
//! Errors are measured between the exact solution and the cellwise elliptic
//! projection `Π u_h` of the discrete solution, since a virtual function is
//! only known through its degrees of freedom.

mod cases;
mod convergence;
mod errors;

pub use cases::{
    bubble, builtin_case, polyharmonic_of_poly, sine_power_derivatives, ManufacturedCase, Polyharmonic, SineProduct,
    BUILTIN_CASES,
};
pub use convergence::{
    fit_slope, run_convergence, run_t_variant, ConvergenceRow, ConvergenceTable, StudyError, StudyMode, StudyOptions,
};
pub use errors::{compute_errors, error_quad_degree, interpolation_errors, seminorm_errors, ErrorReport};
