//! Data generating processes, priors and summary statistics.

pub mod heston;
pub mod lg;
pub mod prior;
pub mod summary;

pub use heston::{
    cir_log_transition_density, cir_sample_transition, cir_transition_density, simulate_heston,
    simulate_heston_with, HestonParams,
};
pub use lg::{simulate_lg, simulate_lg_with, LgParams, SimulatedSeries};
pub use prior::{heston_default_prior, lg_default_prior, JointConstraint, Slot, UniformPrior};
pub use summary::{ar1_summary_stats, SummaryStats5};
