//! Numerical cross-checks that treat the potential as a black box: bound
//! spectra, scattering amplitudes, quadrature, and the KdV residual.

mod kdv;
mod quadrature;
mod scatter;
mod spectrum;

pub use kdv::{kdv_residual, phase_shift_check, PhaseShiftReport};
pub use quadrature::{
    quadrature, quadrature_from_neg_infinity, quadrature_line, quadrature_to_infinity, TAIL_CUTOFF,
};
pub use scatter::{scatter, transmission_product, ScatterOptions, ScatteringResult};
pub use spectrum::{
    bound_spectrum, default_halfwidth, fit_halfwidth, SpectrumResult, BOUNDARY_DECAY,
};
