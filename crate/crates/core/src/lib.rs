//! Delimiting points between the bulk and the tails of unimodal densities.
//!
//! For a unimodal density `f` with mode `theta`, each side of the mode has
//! three candidate points that separate the modal region from the tail:
//!
//! * the inflection point `PInf`, where `f''` changes sign;
//! * the point of maximum convexity `PMConv`, the maximizer of `f''`;
//! * the point of maximum curvature `PMCurv`, the maximizer of
//!   `f'' / (1 + f'^2)^{3/2}`.
//!
//! [`dist`] evaluates the supported families, [`delimit`] computes the points
//! from a known density, [`kde`] estimates them from data with Gaussian-kernel
//! derivative estimators, and [`sim`] runs the Monte Carlo studies and
//! parameter sweeps.

// `!(a > b)` is used on purpose so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Series and approximation coefficients are kept digit for digit.
#![allow(clippy::excessive_precision)]

pub mod cli;
pub mod data;
pub mod delimit;
pub mod dist;
pub mod error;
pub mod kde;
pub mod optimize;
pub mod quadrature;
pub mod rng;
pub mod sim;
pub mod svg;

pub use delimit::{report, DelimitingReport, Method, Side};
pub use dist::{make_bundle, DensityBundle, DistributionSpec, Family};
pub use error::{Result, TailError};
