#![allow(clippy::needless_range_loop)]

//! Pseudospectral laboratory for the one-dimensional fourth-order
//! Schrödinger equation `i u_t + nu u_xxxx + beta u_xx = G(u, conj u)` with
//! polynomial derivative nonlinearities.
//!
//! The crate provides:
//! * periodic spectral discretization, Littlewood-Paley projections and
//!   Sobolev norms ([`spectral`]);
//! * the free fourth-order group, the Duhamel integral operator and the
//!   oscillatory fundamental-solution kernel ([`propagator`]);
//! * the nonlinearity families (gauge powers, the vortex-filament model,
//!   the integrable hierarchy polynomial), exact dealiased evaluation and
//!   scaling calculators ([`nonlinearity`]);
//! * the recursion operator of the derivative-NLS hierarchy and flow
//!   equivalence checks ([`hierarchy`]);
//! * integrating-factor RK4 evolution, Picard iteration, conserved
//!   quantities and residual certification ([`solver`]);
//! * space-time mixed norms, modulation projections, restricted bilinear
//!   operators and dispersive estimate-ratio measurements ([`analysis`]);
//! * the reproducible experiment harness behind the `fourns` binary
//!   ([`experiments`]).
//!
//! ```
//! use fourns::{make_grid, ComplexField, LinearSymbol, free_evolve};
//! use num_complex::Complex64;
//!
//! let grid = make_grid(256, 32.0 * std::f64::consts::PI)?;
//! let c = grid.period() / 2.0;
//! let packet = ComplexField::from_fn(grid, move |x| {
//!     Complex64::new((-(x - c).powi(2) / 9.0).exp(), 0.0)
//! });
//! let evolved = free_evolve(&packet, 0.5, LinearSymbol::pure_fourth())?;
//! assert!((evolved.l2_norm() / packet.l2_norm() - 1.0).abs() < 1e-12);
//! # Ok::<(), fourns::Error>(())
//! ```

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod hierarchy;
pub mod nonlinearity;
pub mod propagator;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use nonlinearity::{Monomial, NonlinearitySpec};
pub use propagator::{free_evolve, LinearSymbol, SpaceTimeTrace};
pub use spectral::{make_grid, BumpProfile, ComplexField, Dyadic, SpectralGrid};
