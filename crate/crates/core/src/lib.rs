//! Efficiency maps and driving-cycle profiles of a PMSM equivalent circuit
//! under uncertain parameters, with Monte Carlo and polynomial chaos
//! estimators for moments, Sobol' indices and generalized indices.
//!
//! `no_std` with `alloc`; file formats, parallel execution and the command
//! line live in the `effmap` crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod cycle;
pub mod ecm;
pub mod error;
pub mod gsa;
pub mod math;
pub mod pce;
pub mod pipeline;
pub mod qoi;
pub mod reduction;
pub mod rng;
pub mod space;

pub use error::{Error, Result};
