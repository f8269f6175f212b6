//! Distances between observed and simulated statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, lstsq, Matrix};

/// Weighted Euclidean distance `sqrt(sum (s_sim - s_obs)^2 / var)`.
/// Statistics with zero or non-finite variance are skipped.
pub fn dist_summ_euclid(s_obs: &[f64], s_sim: &[f64], vars: &[f64]) -> f64 {
    s_obs
        .iter()
        .zip(s_sim)
        .zip(vars)
        .filter(|(_, &v)| v > 0.0 && v.is_finite())
        .map(|((a, b), v)| (b - a) * (b - a) / v)
        .sum::<f64>()
        .sqrt()
}

/// Sample variance of each statistic over the replications where it exists.
pub fn pool_variances(stats: &[Option<Vec<f64>>]) -> Vec<f64> {
    let rows: Vec<&Vec<f64>> = stats.iter().flatten().collect();
    let Some(dim) = rows.first().map(|r| r.len()) else { return Vec::new() };
    let n = rows.len() as f64;
    (0..dim)
        .map(|j| {
            if rows.len() < 2 {
                return 0.0;
            }
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1.0)
        })
        .collect()
}

/// Linear predictor of one parameter from the summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpRegression {
    pub target: usize,
    pub alpha_hat: f64,
    pub beta_hat: Vec<f64>,
    /// The design was rank deficient and a ridge penalty was applied.
    pub ridge: bool,
}

const RIDGE_PENALTY: f64 = 1e-8;

/// Least-squares regression of `draws[i][j]` on `[1, stats[i]]`.
pub fn fp_fit(draws: &[Vec<f64>], stats: &[Vec<f64>], j: usize) -> Result<FpRegression> {
    if draws.len() != stats.len() {
        return Err(Error::Shape(format!("{} draws for {} statistic rows", draws.len(), stats.len())));
    }
    if draws.len() < 100 {
        return Err(Error::Length { needed: 100, got: draws.len() });
    }
    let rows: Vec<Vec<f64>> = stats.iter().map(|s| std::iter::once(1.0).chain(s.iter().copied()).collect()).collect();
    let x = Matrix::from_rows(&rows);
    let y: Vec<f64> = draws.iter().map(|d| d[j]).collect();
    let sol = lstsq(&x, &y, RIDGE_PENALTY)?;
    Ok(FpRegression { target: j, alpha_hat: sol.coef[0], beta_hat: sol.coef[1..].to_vec(), ridge: sol.ridge })
}

/// `|s_sim' b - s_obs' b|`; the intercept cancels.
pub fn fp_distance(reg: &FpRegression, s_obs: &[f64], s_sim: &[f64]) -> f64 {
    reg.beta_hat.iter().zip(s_obs.iter().zip(s_sim)).map(|(b, (o, s))| b * (s - o)).sum::<f64>().abs()
}

fn quadratic(diff: &[f64], weight: &Matrix<f64>) -> f64 {
    weight.quad_form(diff).max(0.0).sqrt()
}

/// `sqrt(S' Sigma S)`.
pub fn dist_joint_score(s: &[f64], sigma: &Matrix<f64>) -> f64 {
    quadratic(s, sigma)
}

pub fn dist_marginal_score(s_y: f64, s_z: f64) -> f64 {
    (s_y - s_z).abs()
}

/// `sqrt((b_y - b_z)' Omega (b_y - b_z))`.
pub fn dist_mle(beta_y: &[f64], beta_z: &[f64], omega: &Matrix<f64>) -> f64 {
    let diff: Vec<f64> = beta_y.iter().zip(beta_z).map(|(a, b)| a - b).collect();
    quadratic(&diff, omega)
}

/// A distance over a whole pool of simulated statistics.
#[derive(Debug, Clone, PartialEq)]
pub enum Criterion {
    /// Inverse-variance weighted Euclidean, variances over the pool.
    SummEuclid,
    /// Regression summary for one parameter.
    Fp { target: usize, split_pilot: bool },
    /// `sqrt(d' W d)` for a positive definite `W`; covers score and MLE matching.
    Quadratic(Matrix<f64>),
    /// Absolute difference of scalar statistics.
    Absolute,
}

impl Criterion {
    /// Distance of every replication to `observed`. Missing statistics get
    /// `+inf`. Returns the distances and any warnings raised on the way.
    pub fn distances(
        &self,
        observed: &[f64],
        draws: &[Vec<f64>],
        stats: &[Option<Vec<f64>>],
    ) -> Result<(Vec<f64>, Vec<String>)> {
        let mut warnings = Vec::new();
        let each = |f: &dyn Fn(&[f64]) -> f64| -> Vec<f64> {
            stats.iter().map(|s| s.as_deref().map_or(f64::INFINITY, f)).collect()
        };
        let d = match self {
            Criterion::SummEuclid => {
                let vars = pool_variances(stats);
                for (j, v) in vars.iter().enumerate() {
                    if !(*v > 0.0) {
                        warnings.push(format!("statistic {j} has zero variance across the pool and is ignored"));
                    }
                }
                each(&|s| dist_summ_euclid(observed, s, &vars))
            }
            Criterion::Fp { target, split_pilot } => {
                let limit = if *split_pilot { stats.len() / 2 } else { stats.len() };
                let (fit_draws, fit_stats): (Vec<Vec<f64>>, Vec<Vec<f64>>) = draws[..limit]
                    .iter()
                    .zip(&stats[..limit])
                    .filter_map(|(d, s)| s.as_ref().map(|s| (d.clone(), s.clone())))
                    .unzip();
                let reg = fp_fit(&fit_draws, &fit_stats, *target)?;
                if reg.ridge {
                    warnings.push(format!("regression for parameter {target} is rank deficient, ridge applied"));
                }
                each(&|s| fp_distance(&reg, observed, s))
            }
            Criterion::Quadratic(w) => {
                if w.rows() != observed.len() || w.cols() != observed.len() {
                    return Err(Error::Shape(format!(
                        "{}x{} weight for a statistic of length {}",
                        w.rows(),
                        w.cols(),
                        observed.len()
                    )));
                }
                cholesky(w)?;
                each(&|s| dist_mle(observed, s, w))
            }
            Criterion::Absolute => each(&|s| dist_marginal_score(observed[0], s[0])),
        };
        Ok((d, warnings))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summ_euclid_examples() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(dist_summ_euclid(&s, &s, &[1.0; 5]), 0.0);
        let t = [4.0, 6.0, 3.0, 4.0, 5.0];
        assert!((dist_summ_euclid(&s, &t, &[1.0; 5]) - 5.0).abs() < 1e-15);
        assert!((dist_summ_euclid(&s, &t, &[1.0, 1.0, 1.0, 1.0, 0.0]) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn joint_and_mle_examples() {
        let id = Matrix::identity(3);
        assert_eq!(dist_joint_score(&[0.0; 3], &id), 0.0);
        assert!((dist_joint_score(&[3.0, 4.0, 0.0], &id) - 5.0).abs() < 1e-15);
        assert!((dist_mle(&[0.6, 0.8, 0.0], &[0.0; 3], &id) - 1.0).abs() < 1e-15);
        assert_eq!(dist_mle(&[0.1, 0.2, 0.3], &[0.1, 0.2, 0.3], &id), 0.0);
        assert!((dist_marginal_score(0.0, 0.3) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn indefinite_weight_is_rejected() {
        let w = Matrix::diag(&[1.0, -1.0]);
        let stats = vec![Some(vec![0.0, 0.0])];
        assert!(matches!(
            Criterion::Quadratic(w).distances(&[0.0, 0.0], &[vec![0.0]], &stats),
            Err(Error::Conditioning(_))
        ));
    }

    #[test]
    fn constant_statistic_is_dropped_with_warning() {
        let stats: Vec<Option<Vec<f64>>> = (0..10).map(|i| Some(vec![i as f64, 7.0])).collect();
        let draws = vec![vec![0.0]; 10];
        let (d, w) = Criterion::SummEuclid.distances(&[0.0, 7.0], &draws, &stats).unwrap();
        assert_eq!(w.len(), 1);
        let sd = pool_variances(&stats)[0].sqrt();
        assert!((d[3] - 3.0 / sd).abs() < 1e-12);
    }

    #[test]
    fn missing_statistics_get_infinite_distance() {
        let stats = vec![Some(vec![1.0]), None];
        let (d, _) = Criterion::Absolute.distances(&[0.0], &[vec![0.0], vec![0.0]], &stats).unwrap();
        assert_eq!(d, vec![1.0, f64::INFINITY]);
    }
}
