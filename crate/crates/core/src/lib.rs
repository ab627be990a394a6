//! Steady states of the 2D Euler equations near the checkerboard vortex
//! patch on the periodic square `[-1/2, 1/2)^2`.
//!
//! The crate builds the reference stream function `psi_0 = Lap^{-1}[sgn x sgn y]`,
//! solves the semilinear problems `Lap psi = F(psi)` by damped Picard iteration,
//! constructs the polar barrier used to compare singular states near the
//! hyperbolic point, and follows fluid particles along the axis.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod config;
pub mod error;
pub mod forcing;
pub mod grid;
pub mod interp;
pub mod ode;
pub mod quadrature;
pub mod reference;
pub mod reports;
pub mod selftest;
pub mod solver;
pub mod spectral;
pub mod trajectory;

pub use error::{Error, Result};
pub use forcing::ForcingProfile;
pub use grid::{Grid, ScalarField};
pub use spectral::SpectralWorkspace;
