//! Continuous-time graphical representations of the transverse-field Ising
//! model on finite boxes.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod parity;
pub mod percolation;
pub mod poisson;
pub mod report;
pub mod rng;
pub mod spectral;
pub mod spin;
pub mod stats;

pub use error::{Error, Result};
