//! Likelihood evaluators: exact Kalman filter, augmented unscented Kalman
//! filter and a deterministic grid filter.

pub mod aukf;
pub mod grid;
pub mod kalman;
pub mod noise;
pub mod sigma;

pub use aukf::{aukf_filter, aukf_loglik, aukf_loglik_with, log_squared_returns, HestonUkf, LinearGaussianUkf, UnscentedModel};
pub use grid::{grid_filter_loglik, grid_loglik_with, GridModel, GridSpec, HestonGrid, Spacing, LinearGaussianGrid, Transitions};
pub use kalman::{kalman_filter, kalman_loglik, loglik_batch, FilterState, KalmanPlan};
pub use noise::{log_eps_density, log_eps_moments, truncated_normal_moments};
pub use sigma::{gaussian_spread, make_sigma_points, SigmaSet};
