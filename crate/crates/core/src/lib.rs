//! Fundamental solutions and a Cauchy solver for fractional diffusion-wave
//! equations of order `alpha` in (1, 2).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cauchy;
pub mod cli;
pub mod config;
pub mod const_kernels;
pub mod envelope;
pub mod estimates;
pub mod error;
pub mod frac_calc;
pub mod levi;
pub mod linalg;
pub mod oracle;
pub mod quad;
pub mod special_fn;

pub use error::{Error, Result};
