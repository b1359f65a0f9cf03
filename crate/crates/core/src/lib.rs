//! Monte Carlo laboratory for the joint limit laws of the maximum of a
//! stationary sequence and the maximum of the same sequence after random
//! replacing (or random missing) of observations.
//!
//! The crate is organised bottom-up:
//!
//! - [`models`]: process, covariance, selection and grid descriptions.
//! - [`samplers`]: exact stationary path generation with reproducible streams.
//! - [`norming`]: normalising constants `(a_n, b_n)`.
//! - [`limits`]: closed-form limit distribution functions.
//! - [`engine`]: replicated simulation, empirical distribution functions and comparisons.
//! - [`cli`]: configuration files, presets and report writing.

pub mod cli;
pub mod engine;
pub mod error;
pub mod limits;
pub mod models;
pub mod norming;
pub mod quadrature;
pub mod samplers;

pub use error::{Error, Result};
