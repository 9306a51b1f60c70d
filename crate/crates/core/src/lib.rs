//! Probe response, causality of the effective index and Gaussian
//! nonclassicality of the output field of an optomechanical cavity.
//!
//! Rates and frequencies are in units of the mechanical frequency.
// `!(x < tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod causality;
pub mod cli;
pub mod error;
pub mod nonclassicality;
pub mod optimize;
pub mod params;
pub mod response;
pub mod steady;
pub mod sweep;
