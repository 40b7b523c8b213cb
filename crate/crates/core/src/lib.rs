//! Extremal rational functions with prescribed real poles on finite unions
//! of real intervals, together with a finite-gap Green-function engine used
//! to check their potential-theoretic properties.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod battery;
pub mod cli;
pub mod error;
pub mod extension;
pub mod format;
pub mod geometry;
pub mod numerics;
pub mod potential;
pub mod rational;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
