//! Model selection by cross-validation, information criteria and
//! pseudo-out-of-sample forecasting, with Monte Carlo tools that measure how
//! close each criterion gets to the infeasible best model.
//!
//! Observation indices are zero-based throughout.

pub mod criteria;
pub mod data;
pub mod dgp;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod oracle;

pub use data::{Dataset, Estimator, FitResult, Kernel, ModelSpec, PredictionTrack, Scheme, Side};
pub use error::{Error, Result};
