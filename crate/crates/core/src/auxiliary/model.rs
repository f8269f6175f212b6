use crate::filters::aukf::{aukf_loglik_with, log_squared_returns, HestonUkf};
use crate::filters::kalman::{kalman_loglik, loglik_batch, KalmanPlan};
use crate::models::{HestonParams, LgParams};
use crate::Real;

/// A tractable model whose likelihood supplies matching statistics.
///
/// `loglik` returns `-inf` wherever the model is undefined.
pub trait AuxiliaryModel<F: Real>: Send + Sync {
    fn dim(&self) -> usize;
    fn lower(&self) -> &[F];
    fn upper(&self) -> &[F];
    fn loglik(&self, z: &[F], beta: &[F]) -> F;

    /// Prepares repeated evaluation at fixed parameter points on series of
    /// length `len`. The default evaluates each point directly.
    fn batch<'a>(&'a self, betas: Vec<Vec<F>>, _len: usize) -> Box<dyn LoglikBatch<F> + 'a> {
        Box::new(Pointwise { model: self, betas })
    }

    fn in_bounds(&self, beta: &[F]) -> bool {
        beta.len() == self.dim()
            && beta.iter().zip(self.lower()).zip(self.upper()).all(|((b, l), u)| b >= l && b <= u)
    }

    fn center(&self) -> Vec<F> {
        self.lower().iter().zip(self.upper()).map(|(&l, &u)| (l + u) / F::lit(2.0)).collect()
    }

    fn widths(&self) -> Vec<F> {
        self.lower().iter().zip(self.upper()).map(|(&l, &u)| u - l).collect()
    }
}

/// Log-likelihoods at a fixed set of parameter points.
pub trait LoglikBatch<F>: Send + Sync {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn eval(&self, z: &[F], out: &mut [F]);
}

struct Pointwise<'a, F, M: ?Sized> {
    model: &'a M,
    betas: Vec<Vec<F>>,
}

impl<F: Real, M: AuxiliaryModel<F> + ?Sized> LoglikBatch<F> for Pointwise<'_, F, M> {
    fn len(&self) -> usize {
        self.betas.len()
    }
    fn eval(&self, z: &[F], out: &mut [F]) {
        for (b, o) in self.betas.iter().zip(out.iter_mut()) {
            *o = self.model.loglik(z, b);
        }
    }
}

fn finite_or_neg_inf<F: Real>(v: Option<F>) -> F {
    v.filter(|x| x.is_finite()).unwrap_or(F::neg_infinity())
}

/// The exact linear Gaussian likelihood in `beta = (rho, delta, sigma_v)`
/// with known measurement noise.
#[derive(Debug, Clone)]
pub struct LgAux<F> {
    pub sigma_e: F,
    pub lower: Vec<F>,
    pub upper: Vec<F>,
}

impl<F: Real> LgAux<F> {
    pub fn new(sigma_e: F, lower: Vec<F>, upper: Vec<F>) -> Self {
        Self { sigma_e, lower, upper }
    }

    fn params(&self, beta: &[F]) -> Option<LgParams<F>> {
        LgParams::new(beta[0], beta[1], beta[2], self.sigma_e).ok()
    }
}

impl<F: Real> AuxiliaryModel<F> for LgAux<F> {
    fn dim(&self) -> usize {
        3
    }
    fn lower(&self) -> &[F] {
        &self.lower
    }
    fn upper(&self) -> &[F] {
        &self.upper
    }
    fn loglik(&self, z: &[F], beta: &[F]) -> F {
        finite_or_neg_inf(self.params(beta).and_then(|p| kalman_loglik(z, &p).ok()))
    }
    fn batch<'a>(&'a self, betas: Vec<Vec<F>>, len: usize) -> Box<dyn LoglikBatch<F> + 'a> {
        let mut plans = Vec::with_capacity(betas.len());
        let mut slots = Vec::with_capacity(betas.len());
        for b in &betas {
            match self.params(b).and_then(|p| KalmanPlan::new(&p, len).ok()) {
                Some(plan) => {
                    slots.push(Some(plans.len()));
                    plans.push(plan);
                }
                None => slots.push(None),
            }
        }
        Box::new(KalmanBatch { plans, slots })
    }
}

struct KalmanBatch<F> {
    plans: Vec<KalmanPlan<F>>,
    /// Position of each requested point in `plans`, `None` when invalid.
    slots: Vec<Option<usize>>,
}

impl<F: Real> LoglikBatch<F> for KalmanBatch<F> {
    fn len(&self) -> usize {
        self.slots.len()
    }
    fn eval(&self, z: &[F], out: &mut [F]) {
        let mut values = vec![F::zero(); self.plans.len()];
        loglik_batch(&self.plans, z, &mut values);
        for (slot, o) in self.slots.iter().zip(out.iter_mut()) {
            *o = finite_or_neg_inf(slot.map(|i| values[i]));
        }
    }
}

/// The unscented-filter approximation to the Heston likelihood of a return
/// series, in `beta = (rho, delta, sigma_v)`.
#[derive(Debug, Clone)]
pub struct HestonAukfAux<F> {
    pub lower: Vec<F>,
    pub upper: Vec<F>,
}

impl<F: Real> AuxiliaryModel<F> for HestonAukfAux<F> {
    fn dim(&self) -> usize {
        3
    }
    fn lower(&self) -> &[F] {
        &self.lower
    }
    fn upper(&self) -> &[F] {
        &self.upper
    }
    fn loglik(&self, r: &[F], beta: &[F]) -> F {
        let ll = HestonParams::from_phi(beta)
            .and_then(HestonUkf::new)
            .and_then(|m| aukf_loglik_with(&m, &log_squared_returns(r)));
        finite_or_neg_inf(ll.ok())
    }
    fn batch<'a>(&'a self, betas: Vec<Vec<F>>, _len: usize) -> Box<dyn LoglikBatch<F> + 'a> {
        let models = betas.iter().map(|b| HestonParams::from_phi(b).and_then(HestonUkf::new).ok()).collect();
        Box::new(UkfBatch { models })
    }
}

struct UkfBatch<F> {
    models: Vec<Option<HestonUkf<F>>>,
}

impl<F: Real> LoglikBatch<F> for UkfBatch<F> {
    fn len(&self) -> usize {
        self.models.len()
    }
    fn eval(&self, r: &[F], out: &mut [F]) {
        // transform once for all points
        let y = log_squared_returns(r);
        for (m, o) in self.models.iter().zip(out.iter_mut()) {
            *o = finite_or_neg_inf(m.as_ref().and_then(|m| aukf_loglik_with(m, &y).ok()));
        }
    }
}

/// A model with some coordinates held fixed; `beta` covers the rest.
#[derive(Debug, Clone)]
pub struct Restricted<M, F> {
    pub inner: M,
    pub unknown: Vec<usize>,
    pub full: Vec<F>,
    lower: Vec<F>,
    upper: Vec<F>,
}

impl<F: Real, M: AuxiliaryModel<F>> Restricted<M, F> {
    /// `full` supplies the values of the fixed coordinates.
    pub fn new(inner: M, unknown: Vec<usize>, full: Vec<F>) -> Self {
        let lower = unknown.iter().map(|&i| inner.lower()[i]).collect();
        let upper = unknown.iter().map(|&i| inner.upper()[i]).collect();
        Self { inner, unknown, full, lower, upper }
    }

    pub fn embed(&self, beta: &[F]) -> Vec<F> {
        let mut full = self.full.clone();
        for (&i, &b) in self.unknown.iter().zip(beta) {
            full[i] = b;
        }
        full
    }
}

impl<F: Real, M: AuxiliaryModel<F>> AuxiliaryModel<F> for Restricted<M, F> {
    fn dim(&self) -> usize {
        self.unknown.len()
    }
    fn lower(&self) -> &[F] {
        &self.lower
    }
    fn upper(&self) -> &[F] {
        &self.upper
    }
    fn loglik(&self, z: &[F], beta: &[F]) -> F {
        self.inner.loglik(z, &self.embed(beta))
    }
    fn batch<'a>(&'a self, betas: Vec<Vec<F>>, len: usize) -> Box<dyn LoglikBatch<F> + 'a> {
        self.inner.batch(betas.iter().map(|b| self.embed(b)).collect(), len)
    }
}
