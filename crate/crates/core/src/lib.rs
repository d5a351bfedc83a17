//! Greedy D-optimal sensor selection under correlated measurement noise.
//!
//! The crate builds a reduced-order model and a truncated-mode noise model
//! from snapshot data ([`rom`]), selects sensors greedily with or without the
//! noise covariance ([`selection`]), estimates states by least squares or
//! generalized least squares ([`estimation`]) and reproduces the numerical
//! studies at configurable scale ([`experiments`]).
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

pub mod error;
pub mod estimation;
pub mod experiments;
pub mod io;
mod linalg;
pub mod rng;
pub mod rom;
pub mod scalar;
pub mod selection;

pub use error::{Error, ErrorClass, Result};
pub use scalar::Real;

pub type Matrix = nalgebra::DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;
pub type SnapshotMatrix = rom::SnapshotMatrix<f64>;
pub type ReducedOrderModel = rom::ReducedOrderModel<f64>;
pub type NoiseFactor = rom::NoiseFactor<f64>;
pub type SelectionState = selection::SelectionState<f64>;
pub type Estimator = estimation::Estimator<f64>;

pub type SnapshotMatrix32 = rom::SnapshotMatrix<f32>;
pub type ReducedOrderModel32 = rom::ReducedOrderModel<f32>;
pub type NoiseFactor32 = rom::NoiseFactor<f32>;
