//! Diagnostics for gamma and inverse Gaussian generalized linear models.
//!
//! The crate fits GLMs by iteratively reweighted least squares, computes the
//! quantile, adjusted quantile, standardized deviance, standardized Pearson,
//! Williams and standardized Anscombe residuals, and runs Monte Carlo studies
//! that summarize how close each residual's distribution is to N(0, 1).

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod glm;
pub mod linalg;
pub mod reference;
pub mod residuals;
pub mod sampling;
pub mod simulation;
pub mod special;

pub use error::{Error, Result};
