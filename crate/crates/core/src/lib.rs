//! Active M-ary hypothesis testing: observation models, divergences,
//! asymptotic cost bounds, Bayesian belief tracking, sensing policies,
//! Monte-Carlo simulation and exact small-instance evaluation.
//!
//! The model, divergence and belief layers are generic over the scalar
//! type; the optimization, policy and simulation layers work in `f64`
//! through the aliases below.

// `!(x > 0.0)` deliberately rejects NaN; matrix code reads better with explicit indices
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod belief;
pub mod bounds;
pub mod cli;
pub mod convex;
pub mod divergences;
pub mod error;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod policy;
pub mod scalar;
pub mod simulator;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Observation model over `f64`.
pub type Model = model::ObservationModel<f64>;
/// Randomized sensing rule over `f64`.
pub type Rule = model::RandomizedRule<f64>;
/// Observation over `f64`.
pub type Obs = model::Observation<f64>;
