use crate::abc::Engine;
use crate::error::{Error, Result};
use crate::models::UniformPrior;
use crate::special::{linspace, trapezoid_weights};

use super::PosteriorGrid;

/// `n` equally spaced points spanning each coordinate of the prior box.
pub fn posterior_axes(prior: &UniformPrior<f64>, n: usize) -> Vec<Vec<f64>> {
    prior.lower.iter().zip(&prior.upper).map(|(&l, &u)| linspace(l, u, n)).collect()
}

/// Posterior marginals under `prior` on the tensor grid `axes`.
///
/// `loglik` is evaluated at every grid point inside the prior's support,
/// in parallel. The joint is normalized and each coordinate marginalized by
/// tensor trapezoid weights.
pub fn exact_posterior<L: Fn(&[f64]) -> f64 + Sync>(
    engine: &Engine,
    prior: &UniformPrior<f64>,
    axes: &[Vec<f64>],
    loglik: L,
) -> Result<Vec<PosteriorGrid>> {
    let dim = prior.dim();
    if axes.len() != dim {
        return Err(Error::Shape(format!("{} axes for a {dim}-parameter prior", axes.len())));
    }
    for (j, ax) in axes.iter().enumerate() {
        super::check_abscissae(ax)?;
        let tol = 1e-12 * (prior.upper[j] - prior.lower[j]);
        if ax[0] > prior.lower[j] + tol || ax[ax.len() - 1] < prior.upper[j] - tol {
            return Err(Error::Config(format!("grid axis {j} does not cover the prior box")));
        }
    }
    let sizes: Vec<usize> = axes.iter().map(Vec::len).collect();
    let cells: usize = sizes.iter().product();
    let point = |mut c: usize| -> Vec<f64> {
        let mut phi = vec![0.0; dim];
        for j in (0..dim).rev() {
            phi[j] = axes[j][c % sizes[j]];
            c /= sizes[j];
        }
        phi
    };
    let logs = engine.map(cells, |c| {
        let phi = point(c);
        if !prior.contains(&phi) {
            return Ok(f64::NEG_INFINITY);
        }
        let l = loglik(&phi);
        Ok(if l.is_nan() { f64::NEG_INFINITY } else { l })
    })?;
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY || !top.is_finite() {
        return Err(Error::Support("likelihood is -inf (or +inf) at every grid point".into()));
    }
    let weights: Vec<Vec<f64>> = axes.iter().map(|ax| trapezoid_weights(ax)).collect();
    let mut marginals: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![0.0; n]).collect();
    let mut idx = vec![0usize; dim];
    for &l in &logs {
        let w = (l - top).exp();
        if w > 0.0 {
            for j in 0..dim {
                let others: f64 = (0..dim).filter(|&k| k != j).map(|k| weights[k][idx[k]]).product();
                marginals[j][idx[j]] += w * others;
            }
        }
        for j in (0..dim).rev() {
            idx[j] += 1;
            if idx[j] < sizes[j] {
                break;
            }
            idx[j] = 0;
        }
    }
    marginals.into_iter().enumerate().map(|(j, m)| PosteriorGrid::normalized(j, axes[j].clone(), m)).collect()
}
