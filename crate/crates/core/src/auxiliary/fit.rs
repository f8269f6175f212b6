use crate::auxiliary::model::AuxiliaryModel;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, from_eigen, sym_eigen, Matrix};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::Real;

pub const EIGEN_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct FittedAux<F> {
    pub beta_hat: Vec<F>,
    /// Weighting matrix of the score distance: inverse of `neg_hess`.
    pub sigma_weight: Matrix<F>,
    /// Negative Hessian of `T^-1 L_a` at `beta_hat`, with its eigenvalues
    /// floored; also the weighting matrix of the MLE distance.
    pub neg_hess: Matrix<F>,
    /// `T^-1 L_a` at `beta_hat`.
    pub scaled_loglik: F,
    pub converged: bool,
}

/// Box centre and the centre shifted by a quarter of the box width down and
/// up along the diagonal.
pub fn default_starts<F: Real>(lower: &[F], upper: &[F]) -> Vec<Vec<F>> {
    [F::zero(), -F::lit(0.25), F::lit(0.25)]
        .iter()
        .map(|&shift| {
            lower
                .iter()
                .zip(upper)
                .map(|(&l, &u)| (l + u) / F::lit(2.0) + shift * (u - l))
                .collect()
        })
        .collect()
}

/// Maximises `T^-1 L_a(z; beta)` over the model's box from each start and
/// returns the best terminal point with its value and convergence flag.
pub fn maximize<F: Real, M: AuxiliaryModel<F> + ?Sized>(
    model: &M,
    z: &[F],
    starts: &[Vec<F>],
) -> Result<(Vec<F>, F, bool)> {
    let t = F::from_usize_(z.len().max(1));
    let objective = |b: &[F]| {
        if model.in_bounds(b) {
            -model.loglik(z, b) / t
        } else {
            F::infinity()
        }
    };
    let opts = NelderMeadOptions::default();
    let step: Vec<F> = model.widths().iter().map(|&w| w * F::lit(0.05)).collect();
    let mut best: Option<(Vec<F>, F, bool)> = None;
    for start in starts.iter().filter(|s| model.in_bounds(s)) {
        if !objective(start).is_finite() {
            continue;
        }
        // step inwards when the start sits near the upper bound
        let step: Vec<F> = start
            .iter()
            .zip(&step)
            .zip(model.upper())
            .map(|((&s, &h), &u)| if s + h > u { -h } else { h })
            .collect();
        let m = nelder_mead(objective, start, &step, &opts);
        if m.value.is_finite() && best.as_ref().is_none_or(|b| m.value < b.1) {
            best = Some((m.x, m.value, m.converged));
        }
    }
    let (x, v, converged) = best.ok_or_else(|| Error::Fit("no start has a finite objective".into()))?;
    Ok((x, -v, converged))
}

/// Hessian of `T^-1 L_a` by central differences with steps `1e-4` of the box width.
pub fn scaled_hessian<F: Real, M: AuxiliaryModel<F> + ?Sized>(model: &M, z: &[F], beta: &[F]) -> Result<Matrix<F>> {
    let n = beta.len();
    let t = F::from_usize_(z.len().max(1));
    let h: Vec<F> = model.widths().iter().map(|&w| w * F::lit(1e-4)).collect();
    let f = |b: &[F]| model.loglik(z, b) / t;
    let at = |di: isize, i: usize, dj: isize, j: usize| {
        let mut b = beta.to_vec();
        b[i] = b[i] + F::lit(di as f64) * h[i];
        b[j] = b[j] + F::lit(dj as f64) * h[j];
        f(&b)
    };
    let f0 = f(beta);
    let mut hess = Matrix::zeros(n, n);
    for i in 0..n {
        hess[(i, i)] = (at(1, i, 0, i) - F::lit(2.0) * f0 + at(-1, i, 0, i)) / (h[i] * h[i]);
        for j in 0..i {
            let v = (at(1, i, 1, j) - at(1, i, -1, j) - at(-1, i, 1, j) + at(-1, i, -1, j))
                / (F::lit(4.0) * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    if (0..n).any(|i| (0..n).any(|j| !hess[(i, j)].is_finite())) {
        return Err(Error::Numerical("Hessian has non-finite entries".into()));
    }
    Ok(hess)
}

/// Multistart Nelder-Mead fit plus the Hessian-based weighting matrices.
pub fn fit_mle<F: Real, M: AuxiliaryModel<F> + ?Sized>(model: &M, z: &[F], starts: &[Vec<F>]) -> Result<FittedAux<F>> {
    let (beta_hat, scaled_loglik, converged) = maximize(model, z, starts)?;
    let neg = scaled_hessian(model, z, &beta_hat)?.scale(-F::one()).symmetrized();
    let (values, vectors) = sym_eigen(&neg);
    let floor = F::lit(EIGEN_FLOOR);
    let floored: Vec<F> = values.iter().map(|&v| v.max(floor)).collect();
    let inverse: Vec<F> = floored.iter().map(|&v| v.recip()).collect();
    let neg_hess = from_eigen(&floored, &vectors);
    let sigma_weight = from_eigen(&inverse, &vectors);
    cholesky(&sigma_weight)
        .map_err(|_| Error::Conditioning("weighting matrix is not positive definite".into()))?;
    Ok(FittedAux { beta_hat, sigma_weight, neg_hess, scaled_loglik, converged })
}
