//! Numerical laboratory for the path-independence of Girsanov density
//! processes.
//!
//! For the SDE dX = b(t,X) dt + sigma(t,X) dB, the density process of the
//! drift-removing Girsanov transformation,
//!
//!   Zhat_t = int <sigma^{-1}b, dB> + 1/2 int |sigma^{-1}b|^2 ds,
//!
//! is a function of (t, X_t) alone exactly when the drift has gradient form
//! b = sigma sigma^T grad(v) with v solving the time-reversed KPZ-type
//! equation dv/dt = -1/2 [ Tr(sigma sigma^T Hess v) + |sigma^T grad v|^2 ].
//!
//! This crate simulates path ensembles, accumulates the density process,
//! evaluates the PDE residual, solves the constant-sigma case by Cole-Hopf,
//! runs the one-dimensional generalized Burgers machinery, and renders a
//! path-independent / path-dependent verdict with convergence evidence.

pub mod burgers1d;
pub mod error;
pub mod expr;
pub mod fields;
pub mod girsanov;
pub mod kpz;
pub mod numerics;
pub mod rng;
pub mod scenarios;
pub mod sde;
pub mod verify;

pub use error::{Error, Result};
pub use numerics::{MatD, VecD};
