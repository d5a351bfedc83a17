//! Determinant-based greedy sensor selection.
//!
//! [`select_dgnc`] weights each candidate by the correlated noise covariance
//! of the already selected sensors; [`select_dg`] is the same search with the
//! covariance replaced by the identity. [`objective_det`] evaluates the
//! objective densely and [`exhaustive_oracle`] finds the true optimum for
//! small problems.

mod greedy;
mod objective;
mod sensor_set;
mod state;

pub use greedy::{select_dg, select_dgnc};
pub use objective::{
    check_submodularity, check_submodularity_counterexample, counterexample_instance,
    exhaustive_oracle, objective_det, SubmodularityReport, DEFAULT_ORACLE_BUDGET,
};
pub use sensor_set::{Algorithm, SensorSet};
pub use state::{Phase, SelectionState};
