//! rbopt — design, simulation, and analysis of fully randomized
//! benchmarking experiments.
//!
//! The crate covers the full experimental loop:
//!
//! * [`model`] — statistical models of the success probability and their
//!   analytic gradients.
//! * [`design`] — time-budget-optimal experiment designs (C-optimal via a
//!   linear program), optimal linear estimators, and Fisher information.
//! * [`sim`] — synthetic data under several generative error models,
//!   including a gate-level single-qubit Clifford simulator, plus the
//!   variance analysis for repeated sequences.
//! * [`inference`] — maximum-likelihood fits, weighted least squares for
//!   repeated-sequence data, bias-corrected bootstrap confidence
//!   intervals, and the empirical likelihood-ratio test.
//! * [`io`] — file formats for designs, datasets, and analysis results.
//! * [`linalg`] / [`simplex`] — the self-contained dense linear algebra
//!   and LP machinery backing the design optimizer.
//!
//! A narrative guide with runnable examples lives in `book/`; its code
//! snippets are compiled and run as doc-tests through the [`guide`]
//! module.

pub mod design;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod model;
pub mod sim;
pub mod simplex;

mod streams;

pub mod guide;

pub use streams::{configure_threads_from_env, derive_stream, StreamDomain};
