//! Numerical library for time-periodic two-species competition systems with
//! nonlocal (integral-kernel) dispersal.
//!
//! The library builds uniform grids over a box domain, assembles dispersal
//! operators for three boundary regimes (Dirichlet-type hostile surroundings,
//! Neumann-type no-flux, and spatially periodic), integrates the coupled
//! competition system with classical RK4, computes principal spectrum points
//! of time-periodic linearizations through the period map, constructs
//! semitrivial and coexistence periodic orbits by monotone Poincare-map
//! iteration, and checks the coexistence/extinction criteria that govern the
//! long-run behavior of the system.
//!
//! All numerics are generic over the floating-point scalar through the
//! [`scalar::Real`] trait; concrete `f64` aliases for the main types are
//! exported at the crate root.

pub mod domain;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod fields;
pub mod linalg;
pub mod ode;
pub mod periodic;
pub mod scalar;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` grid.
pub type Grid64 = domain::Grid<f64>;
/// `f64` dispersal kernel.
pub type Kernel64 = domain::Kernel<f64>;
/// `f64` assembled dispersal operator.
pub type DispersalOperator64 = domain::DispersalOperator<f64>;
/// `f64` coefficient field.
pub type CoefficientField64 = fields::CoefficientField<f64>;
/// `f64` system specification.
pub type SystemSpec64 = dynamics::SystemSpec<f64>;
/// `f64` trajectory.
pub type Trajectory64 = dynamics::Trajectory<f64>;
/// `f64` spectral result.
pub type SpectralResult64 = spectral::SpectralResult<f64>;
/// `f64` periodic orbit of the two-species system.
pub type PeriodicOrbit64 = periodic::PeriodicOrbit<f64>;
/// `f64` criteria report.
pub type CriteriaReport64 = periodic::CriteriaReport<f64>;
