//! Matching statistics from an auxiliary likelihood: MLE, score, and the
//! score of the likelihood integrated over nuisance coordinates.

pub mod fit;
pub mod marginal;
pub mod model;
pub mod score;

pub use fit::{default_starts, fit_mle, maximize, scaled_hessian, FittedAux};
pub use marginal::{integrated_loglik, marginal_mle, marginal_score, MarginalScorer, DEFAULT_NUISANCE_POINTS};
pub use model::{AuxiliaryModel, HestonAukfAux, LgAux, LoglikBatch, Restricted};
pub use score::{fd_step, score, ScoreEvaluator};
