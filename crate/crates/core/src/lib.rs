//! Spectral analysis of the Laplacian on the quarter-plane `x, y > 0` with the
//! Robin condition `∂φ/∂n + σ φ = 0` on both edges, where `σ(y)` acts on
//! `x = 0` and `σ(x)` on `y = 0`.
//!
//! The crate provides closed-form one-dimensional references, analytic
//! bounds and bound-state certificates, a finite-difference discretization on
//! a truncated box, a sparse shift-invert eigensolver with inertia counting,
//! and post-processing of the computed states.

pub mod analysis;
pub mod analytic1d;
pub mod certify;
pub mod discretize;
pub mod eigensolve;
pub mod error;
pub mod ldl;
pub mod potential;
pub mod quadrature;
pub mod sparse;

pub use analysis::{
    decay_fit, decay_fit_fn, default_window, ground_state_positivity, richardson, truncation_bracket,
    ConvergenceStudy, DecayFit, TruncationBracket,
};
pub use analytic1d::{
    constant_reference, halfline_bound_state, interval_ground_kappa, interval_negative_count,
    interval_positive_roots, tensor_spectrum_symmetric, ConstantReference, HalfLineBoundState,
    Interval1DSpectrum,
};
pub use certify::{
    bound_state_certificate, certificate_kinetic, certificate_value, crude_lower_bound, ess_spectrum_class,
    full_report, ground_energy_sandwich, negative_count_bound, BoundsReport, Certificate, EssClass,
};
pub use discretize::{assemble, inject_function, recommended_radius, DiscreteForm, Grid, OuterBc};
pub use eigensolve::{
    count_below, count_below_perturbed, dense_spectrum, lowest_eigenpairs, lowest_eigenpairs_with, residual, Method, SolverOptions,
    SpectralResult,
};
pub use error::{Error, Result};
pub use potential::{BoundaryPotential, PotentialKind, PotentialSpec};
pub use sparse::CsrMatrix;
