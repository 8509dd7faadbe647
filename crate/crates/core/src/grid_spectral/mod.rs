//! Periodic-cube field containers and exact spectral operators.
//!
//! Derivative symbols are `i k` with the Nyquist wavenumber set to zero, so
//! the Laplacian equals the divergence of the gradient on the grid.

mod fft;
mod field;
mod ops;
pub mod random;
pub mod vlf1;

pub use field::{GridField, GridSpec, SpectralField};
pub(crate) use ops::Wavenumbers;
pub use ops::{
    curl, dealias, derivative_magnitude, dealiased_cross, dealiased_dot, dealiased_mul, differential, divergence, gradient,
    helmholtz_split, inv_lap, inverse_laplacian, inverse_transform, laplacian, project_curl, project_grad,
    riesz_r, spectral_curl, spectral_dealias, spectral_divergence, spectral_gradient,
    spectral_inverse_laplacian, spectral_laplacian, spectral_project_curl, transform, translate, vector_identity_residuals, DifferentialOp,
    HelmholtzSplit, InverseLaplacian,
};
