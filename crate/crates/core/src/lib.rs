//! Core algorithms for joint beamformer / power / sub-carrier optimization in
//! full-duplex, energy-harvesting small-cell networks.
//!
//! The crate is organized around a single scheduling-period pipeline:
//!
//! 1. [`scenario`] draws a network topology, traffic buffers and energy budgets,
//! 2. [`channel`] draws every complex channel coefficient (path loss, Rayleigh
//!    fading, Rician self-interference),
//! 3. [`surrogate`] builds a convex restriction of the queue-minimization
//!    problem around the current iterate,
//! 4. [`solver`] solves that restriction with a dense barrier interior-point
//!    method (scalar and Hermitian-PSD block variables),
//! 5. [`admm`] optionally solves it in a distributed fashion via consensus
//!    ADMM across base stations,
//! 6. [`alg`] iterates 3–5 until queue convergence, extracts rank-one
//!    beamformers and evaluates the result with [`phy`].
//!
//! All floating-point math goes through `libm`, so results are bit-identical
//! across builds and hosts. The crate is `no_std` (with `alloc`); file I/O,
//! configuration parsing and CSV emission live in the companion CLI crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod admm;
pub mod alg;
pub mod channel;
pub(crate) mod fmath;
pub mod linalg;
pub mod phy;
pub mod scenario;
pub mod solver;
pub mod surrogate;

pub use num_complex::Complex64;
