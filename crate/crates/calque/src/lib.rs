//! Solving `f(x) = y` when `f` itself is intractable but stays close to a
//! tractable surrogate `f0`.
//!
//! The core loop is successive approximation driven entirely by the surrogate:
//! starting from `x_0` with shifted target `yhat = y - f(x_0)`, each step
//! solves `f0(x_m) = f0(x_{m-1}) + y_{m-1}` and updates the residual
//! `y_m = y_{m-1} - (f(x_m) - f(x_{m-1}))`. When the mismatch `f - f0` is a
//! contraction relative to `f0`-increments, the residuals decay geometrically
//! and the iterates stay inside an explicit ball.
//!
//! The crate is organized around that loop:
//!
//! * [`spaces`]: finite-dimensional `l^p` and discrete Sobolev spaces, their
//!   duality maps, and the Euclidean pairing between a space and its dual.
//! * [`operators`]: mapping handles with declared domains of validity, and the
//!   surrogate kinds the solver knows how to invert (linear, frozen Jacobian,
//!   monotone blends, diagonal monotone).
//! * [`certify`]: seeded randomized estimates of the growth, coercivity,
//!   comparison, and contraction quantities the convergence theory needs,
//!   assembled into a pass/fail certificate.
//! * [`solve`]: the comparison iteration itself, a fixed-point wrapper, and a
//!   patched variant that re-anchors the surrogate when an iterate reaches the
//!   current patch boundary.
//! * [`pde`]: two instances that exercise everything above: a quasilinear
//!   elliptic operator in divergence form and a 2d divergence-free
//!   stream-function Galerkin discretization of stationary and evolving
//!   incompressible flow.
//! * [`registry`]: named fixtures addressable from the command line.
//!
//! Everything here is deterministic: certificates are reproducible bit for bit
//! from their seed, and no interior routine reads the clock, the environment,
//! or an unseeded RNG.
//!
//! The crate is `no_std`-compatible (`alloc` required): disable default
//! features and enable `libm` for float math.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("building without `std` requires the `libm` feature");

pub mod certify;
mod error;
pub(crate) mod fp;
pub mod grid;
pub mod linalg;
pub mod operators;
pub mod pde;
pub mod registry;
pub mod solve;
pub mod spaces;

pub use error::Error;
pub use grid::Grid;

/// Convenience alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
