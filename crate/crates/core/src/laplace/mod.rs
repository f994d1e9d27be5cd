//! Exterior Laplace machinery: harmonics, fast-decay mode solutions, harmonic
//! tails under affine stretching, averaged linearizations.

mod decompose;
mod harmonics;
mod linearize;
mod modes;

pub use decompose::{
    affine_decompose, affine_decompose_with, harmonic_tail_decompose, harmonic_tail_decompose_with,
    matrix_sqrt, normal_form_tail, remainder_decay, HarmonicTail, TailCoefficient, TailOptions,
};
pub use harmonics::{eval_real_harmonics, HarmonicBasis, SphereQuadrature, DEFAULT_OVERSAMPLE};
pub use linearize::{linearization_coefficients, linearization_from_hessian, mean_value_defect};
pub use modes::{
    fast_decay_poisson, laplacian_fd, solve_mode, DecayReport, FastDecaySolution, ModeFunction,
    Provenance, DECAY_SLOPE_TOL, INNER_LIMIT, TRUNCATION_WARN,
};
