//! Casimir-Polder free energy of a small anisotropic particle near a gently
//! curved perfect conductor, to second order in the surface curvature and
//! at arbitrary temperature.
//!
//! Layers, bottom up:
//!
//! * [`specfun`]: exponential integrals, zeta constants, half-line quadrature
//! * [`beta`]: the coefficient functions β^(p)_q(ξ)
//! * [`thermal`]: Matsubara sums β̃(τ), their T = 0 integrals and classical limits
//! * [`geometry`]: local surface data at the particle's foot point
//! * [`eta`]: closed-form low-temperature and classical potentials
//! * [`potential`]: full assembly, per-term breakdowns and orientation scans
//! * [`units`]: physical constants and SI conversion

pub mod beta;
pub mod error;
pub mod eta;
pub mod geometry;
pub mod potential;
pub mod specfun;
pub mod tensor;
pub mod thermal;
pub mod units;

pub use beta::{beta_eval, beta_poly, BetaIndex};
pub use error::{Error, Result};
pub use eta::{eta_coefficients, u_classical, u_retarded, EtaCoefficients};
pub use geometry::{local_geometry_from_profile, to_principal_frame, Frame, LocalGeometry, SurfaceProfile};
pub use potential::{orientation_scan, u_full, PotentialBreakdown, Rotation};
pub use tensor::PolarizabilityTensor;
pub use thermal::{BetaTildeSet, ThermalConfig};
