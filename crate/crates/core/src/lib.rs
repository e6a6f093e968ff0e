//! Pseudospectral laboratory for the cubic NLS `i u_t + u_xx = P F(P u)`,
//! `F(u) = ±|u|^2 u`, with `P` either the identity or a smooth low-pass
//! Littlewood-Paley projection.
//!
//! The crate covers the finite-dimensional approximation pipeline used to
//! pass symplectic non-squeezing from truncated flows on large tori to the
//! line: split-step dynamics, cutoff families and the pigeonhole interval,
//! Strichartz-type diagnostics, operator-norm estimates, orchestrated
//! experiments, and the file formats that persist their results.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cutoffs;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod io;
pub mod report;
pub mod spectral;

pub use error::{LabError, Result};
