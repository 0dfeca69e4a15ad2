//! Finite-difference laboratory for the degenerate logistic equation
//! `∂ₜu = Δu + λu + b(x)|u|^{ν−1}u` on a box with Dirichlet boundary,
//! `b ≤ 0` and `b = 0` on an inner box `Ω₀`.
//!
//! Modules, bottom-up:
//! - [`domain`]: grids, fields, weights, the discrete Laplacian and quadrature.
//! - [`spectral`]: Dirichlet and linearized eigenpairs, thresholds, Morse counts.
//! - [`nehari`]: energy, Nehari functional, fibering maps and projection.
//! - [`stationary`]: positive equilibria, nonexistence probing, mountain pass.
//! - [`parabolic`]: IMEX time stepping, Lyapunov checks, stable-manifold probes.
//! - [`io`]: CSV serialization.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix `f64`.

// `!(x > 0)` is the NaN-rejecting form used throughout validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod domain;
pub mod io;
pub mod linalg;
pub mod nehari;
pub mod parabolic;
pub mod random;
pub mod scalar;
pub mod spectral;
pub mod stationary;

pub use scalar::Scalar;

pub type Grid64 = domain::Grid<f64>;
pub type Field64 = domain::Field<f64>;
pub type DomainSpec64 = domain::DomainSpec<f64>;
pub type WeightSpec64 = domain::WeightSpec<f64>;
pub type ProblemParams64 = nehari::ProblemParams<f64>;
pub type NehariReport64 = nehari::NehariReport<f64>;
pub type SpectrumResult64 = spectral::SpectrumResult<f64>;
pub type EquilibriumResult64 = stationary::EquilibriumResult<f64>;
pub type TrajectoryRecord64 = parabolic::TrajectoryRecord<f64>;
pub type StepperConfig64 = parabolic::StepperConfig<f64>;
