//! Renormalized volumes of minimal submanifolds of hyperbolic space.
//!
//! The crate works in the upper half-space model of `H^{n+1}` with boundary
//! defining function `x`. It provides
//!
//! * [`phg`]: truncated polyhomogeneous series in `x` with `x^k log x` terms,
//! * [`boundary`]: discretized boundary curves and round spheres,
//! * [`expansion`]: the order-by-order formal solution of the minimal-graph
//!   equation, induced metric, unit normal and special defining function,
//! * [`renvol`]: finite-part (Riesz) and cutoff (Hadamard) renormalization,
//! * [`solver`]: rotationally symmetric global minimal surfaces,
//! * [`variation`]: first and second variation boundary formulas,
//! * [`cli`]: the batch command-line frontend.

pub mod phg;
pub mod boundary;
pub mod expansion;
pub mod quad;
pub mod ode;
pub mod renvol;
pub mod solver;
pub mod variation;
pub mod checks;
pub mod cli;
