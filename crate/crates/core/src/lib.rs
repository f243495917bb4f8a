//! Momentum optimization methods with per-iteration Lyapunov certificates.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: distance-generating functions, Bregman divergences, mirror maps.
//! * [`problems`]: objective oracles, composite objectives, feasible sets, a test corpus.
//! * [`dynamics`]: continuous-time dynamics and their Lyapunov functions.
//! * [`methods`]: discrete algorithms producing [`methods::Trace`] records.
//! * [`certify`]: Lyapunov and error-term evaluation, rate fits, estimate sequences.
//! * [`harness`]: configuration, runs, sweeps, CSV/JSON/SVG output.
//! * [`cli`]: the `momentum-lab` command line front end.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod methods;
pub mod problems;

pub use error::{LabError, Result};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
