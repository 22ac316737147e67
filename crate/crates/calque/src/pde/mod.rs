//! Discretized boundary-value problems wired into the comparison machinery:
//! quasilinear diffusion on difference grids and a divergence-free Galerkin
//! demonstrator for the regularized Navier-Stokes system.

pub mod elliptic;
pub mod ns;
pub mod quad;
