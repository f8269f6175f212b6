use crate::auxiliary::model::{AuxiliaryModel, LoglikBatch};
use crate::error::{Error, Result};
use crate::Real;

/// Finite-difference step for a coordinate at `b`.
#[inline]
pub fn fd_step<F: Real>(b: F) -> F {
    F::lit(1e-5).max(F::lit(1e-5) * b.abs())
}

fn central_difference<F: Real, M: AuxiliaryModel<F> + ?Sized>(
    model: &M,
    z: &[F],
    beta: &[F],
    j: usize,
    h: F,
) -> Option<F> {
    let mut b = beta.to_vec();
    b[j] = beta[j] + h;
    let up = model.loglik(z, &b);
    b[j] = beta[j] - h;
    let down = model.loglik(z, &b);
    let d = (up - down) / (F::lit(2.0) * h);
    d.is_finite().then_some(d)
}

/// `T^-1 dL_a(z; beta)/dbeta` by central differences. A non-finite
/// difference is retried once with a step ten times smaller.
pub fn score<F: Real, M: AuxiliaryModel<F> + ?Sized>(model: &M, z: &[F], beta: &[F]) -> Result<Vec<F>> {
    let t = F::from_usize_(z.len().max(1));
    (0..beta.len())
        .map(|j| {
            let h = fd_step(beta[j]);
            central_difference(model, z, beta, j, h)
                .or_else(|| central_difference(model, z, beta, j, h / F::lit(10.0)))
                .map(|d| d / t)
                .ok_or_else(|| Error::Numerical(format!("score coordinate {j} is not finite at {beta:?}")))
        })
        .collect()
}

/// Score at a fixed `beta`, prepared for evaluation on many series.
pub struct ScoreEvaluator<'a, F, M: ?Sized> {
    model: &'a M,
    beta: Vec<F>,
    steps: Vec<F>,
    batch: Box<dyn LoglikBatch<F> + 'a>,
}

impl<'a, F: Real, M: AuxiliaryModel<F> + ?Sized> ScoreEvaluator<'a, F, M> {
    pub fn new(model: &'a M, beta: Vec<F>, len: usize) -> Self {
        let steps: Vec<F> = beta.iter().map(|&b| fd_step(b)).collect();
        let mut points = Vec::with_capacity(2 * beta.len());
        for j in 0..beta.len() {
            for sign in [F::one(), -F::one()] {
                let mut b = beta.clone();
                b[j] = b[j] + sign * steps[j];
                points.push(b);
            }
        }
        let batch = model.batch(points, len);
        Self { model, beta, steps, batch }
    }

    pub fn beta(&self) -> &[F] {
        &self.beta
    }

    pub fn eval(&self, z: &[F]) -> Result<Vec<F>> {
        let t = F::from_usize_(z.len().max(1));
        let mut ll = vec![F::zero(); self.batch.len()];
        self.batch.eval(z, &mut ll);
        (0..self.beta.len())
            .map(|j| {
                let d = (ll[2 * j] - ll[2 * j + 1]) / (F::lit(2.0) * self.steps[j]);
                if d.is_finite() {
                    Ok(d / t)
                } else {
                    central_difference(self.model, z, &self.beta, j, self.steps[j] / F::lit(10.0))
                        .map(|d| d / t)
                        .ok_or_else(|| Error::Numerical(format!("score coordinate {j} is not finite")))
                }
            })
            .collect()
    }
}
