//! Approximate Bayesian computation for state space models.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`, see
//! [`Real`]). The aliases at the crate root fix it to `f64`, which is what the
//! experiment pipelines use.

pub mod abc;
pub mod auxiliary;
pub mod error;
pub mod experiment;
pub mod eval;
pub mod filters;
pub mod linalg;
pub mod models;
pub mod optim;
pub mod quadrature;
pub mod real;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
pub use real::Real;

pub type LgParams = models::LgParams<f64>;
pub type HestonParams = models::HestonParams<f64>;
pub type UniformPrior = models::UniformPrior<f64>;
pub type SummaryStats5 = models::SummaryStats5<f64>;
pub type SimulatedSeries = models::SimulatedSeries<f64>;
