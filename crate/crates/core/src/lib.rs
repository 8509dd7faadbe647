//! Pseudo-spectral Navier-Stokes on the periodic cube, with the diagnostics
//! used to study local vorticity regularity: Lorentz norms, flow-adapted
//! maximal functions, localized vorticity potentials, blow-up rescaling and
//! De Giorgi truncation energies.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod blowup;
pub mod degiorgi;
pub mod error;
pub mod flowmap_maximal;
pub mod grid_spectral;
pub mod harness;
pub mod localization;
pub mod lorentz;
pub mod ns_solver;
pub mod series;

pub use error::{Error, Result};
pub use grid_spectral::{GridField, GridSpec, SpectralField};
pub use ns_solver::{Snapshot, SolverConfig};
pub use series::FieldSeries;
