//! Numerical laboratory for rotationally symmetric Ricci flow on spheres.
//!
//! The crate simulates the flow of metrics `φ²dx² + ψ²g_can` on `S^{n+1}`,
//! detects and classifies neckpinch singularities, and carries the matched
//! asymptotic description of degenerate neckpinches: the Hermite analysis of
//! the parabolic region, the intermediate and outer profiles, the Bryant
//! soliton model of the tip and a composite model gluing the four regions.

// `!(x > 0.0)` is used on purpose so that NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops over several parallel arrays read better than nested zips
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod bryant;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod hermite;
pub mod io;
pub mod numerics;
pub mod regions;

pub use error::{Error, ErrorCategory, Result};
