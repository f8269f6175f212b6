//! Deterministic grid filter for scalar-state models.
//!
//! The state is discretised on an equally spaced grid with trapezoid weights.
//! Each row of the transition kernel is normalised over the grid in log
//! space, so the filter is an exact hidden Markov recursion on the grid and
//! remains well defined when the kernel is narrower than the grid spacing.

use crate::error::{Error, Result};
use crate::filters::aukf::log_squared_returns;
use crate::filters::noise::log_eps_density;
use crate::models::heston::cir_log_transition_density;
use crate::models::{HestonParams, LgParams};
use crate::special::{linspace, log_sum_exp, normal_cdf, normal_logpdf, trapezoid_weights};
use crate::Real;

/// How grid nodes are placed between the support bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    /// `lo + (hi - lo) u^2` for uniform `u`: denser near the lower bound.
    Quadratic,
    /// Geometric spacing; needs `lo > 0`.
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<F> {
    pub n_points: usize,
    pub lo: F,
    pub hi: F,
    pub spacing: Spacing,
}

impl<F: Real> GridSpec<F> {
    pub fn new(n_points: usize, lo: F, hi: F) -> Result<Self> {
        let g = Self { n_points, lo, hi, spacing: Spacing::Linear };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 10 {
            return Err(Error::Config(format!("grid needs at least 10 points, got {}", self.n_points)));
        }
        if !(self.lo < self.hi) {
            return Err(Error::Config(format!("grid support [{}, {}] is empty", self.lo, self.hi)));
        }
        if self.spacing == Spacing::Log && !(self.lo > F::zero()) {
            return Err(Error::Config("log-spaced grid needs a positive lower bound".into()));
        }
        Ok(())
    }

    pub fn with_spacing(self, spacing: Spacing) -> Self {
        Self { spacing, ..self }
    }

    pub fn nodes(&self) -> Vec<F> {
        let u = linspace(F::zero(), F::one(), self.n_points);
        let (lo, hi) = (self.lo, self.hi);
        let mut x: Vec<F> = match self.spacing {
            Spacing::Linear => return linspace(lo, hi, self.n_points),
            Spacing::Quadratic => u.iter().map(|&u| lo + (hi - lo) * u * u).collect(),
            Spacing::Log => u.iter().map(|&u| (lo.ln() + (hi.ln() - lo.ln()) * u).exp()).collect(),
        };
        x[0] = lo;
        x[self.n_points - 1] = hi;
        x
    }

    /// Geometric grid on `[1e-6, m + 10 s]` for the stationary mean `m` and
    /// sd `s` of `V`. The stationary density behaves like a power of `V` near
    /// zero, where the measurement density varies on a log scale.
    pub fn heston_default(params: &HestonParams<F>, n_points: usize) -> Result<Self> {
        let hi = params.stationary_mean() + F::lit(10.0) * params.stationary_var().sqrt();
        Ok(Self::new(n_points, F::lit(1e-6), hi)?.with_spacing(Spacing::Log))
    }
}

pub trait GridModel<F: Real> {
    fn initial_log_density(&self, x: F) -> F;
    fn transition_log_density(&self, x: F, x_prev: F) -> Result<F>;
    fn measurement_log_density(&self, y: F, x: F) -> F;
}

/// Grid log-likelihood of `y` under `model`.
pub fn grid_loglik_with<F: Real, M: GridModel<F>>(model: &M, y: &[F], grid: &GridSpec<F>) -> Result<F> {
    grid.validate()?;
    if y.is_empty() {
        return Err(Error::Length { needed: 1, got: 0 });
    }
    let x = grid.nodes();
    let ln_w: Vec<F> = trapezoid_weights(&x).into_iter().map(F::ln).collect();
    let n = x.len();

    // kernel[k * n + l] = P(x_l | x_k)
    let mut kernel = vec![F::zero(); n * n];
    let mut row = vec![F::zero(); n];
    for k in 0..n {
        for l in 0..n {
            row[l] = ln_w[l] + model.transition_log_density(x[l], x[k])?;
        }
        let norm = log_sum_exp(&row);
        if !norm.is_finite() {
            return Err(Error::Support(format!("transition from {} leaves the grid", x[k])));
        }
        for l in 0..n {
            kernel[k * n + l] = (row[l] - norm).exp();
        }
    }

    let init: Vec<F> = (0..n).map(|l| ln_w[l] + model.initial_log_density(x[l])).collect();
    let norm = log_sum_exp(&init);
    let mut mass: Vec<F> = init.iter().map(|&v| (v - norm).exp()).collect();
    let mut pred = vec![F::zero(); n];
    let mut joint = vec![F::zero(); n];
    let mut loglik = F::zero();
    for (t, &yt) in y.iter().enumerate() {
        if t > 0 {
            pred.fill(F::zero());
            for k in 0..n {
                let m = mass[k];
                if m == F::zero() {
                    continue;
                }
                for (p, &q) in pred.iter_mut().zip(&kernel[k * n..(k + 1) * n]) {
                    *p = *p + m * q;
                }
            }
            std::mem::swap(&mut mass, &mut pred);
        }
        for l in 0..n {
            joint[l] = mass[l].ln() + model.measurement_log_density(yt, x[l]);
        }
        let c = log_sum_exp(&joint);
        if !c.is_finite() {
            return Err(Error::Numerical(format!("filtered mass vanished at t = {}; grid support too narrow", t + 1)));
        }
        loglik = loglik + c;
        for l in 0..n {
            mass[l] = (joint[l] - c).exp();
        }
    }
    Ok(loglik)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transitions {
    Exact,
    Euler,
}

/// The Heston model on `y_t = ln r_t^2` with exact or Euler variance transitions.
#[derive(Debug, Clone, Copy)]
pub struct HestonGrid<F> {
    pub params: HestonParams<F>,
    pub transitions: Transitions,
}

impl<F: Real> GridModel<F> for HestonGrid<F> {
    fn initial_log_density(&self, v: F) -> F {
        crate::models::heston::stationary_log_density(v, &self.params)
    }

    fn transition_log_density(&self, v: F, v_prev: F) -> Result<F> {
        let p = &self.params;
        match self.transitions {
            Transitions::Exact => cir_log_transition_density(v, v_prev, p),
            Transitions::Euler => {
                let mean = p.delta + p.rho * v_prev;
                let var = p.sigma_v * p.sigma_v * v_prev;
                // restricted to V > 0 and renormalised
                let kept = normal_cdf(mean / var.sqrt());
                Ok(normal_logpdf(v, mean, var) - kept.ln())
            }
        }
    }

    fn measurement_log_density(&self, y: F, v: F) -> F {
        log_eps_density(y - v.ln())
    }
}

/// The linear Gaussian model as a grid model.
#[derive(Debug, Clone, Copy)]
pub struct LinearGaussianGrid<F>(pub LgParams<F>);

impl<F: Real> LinearGaussianGrid<F> {
    /// Grid spanning `+-width` stationary standard deviations.
    pub fn spec(&self, n_points: usize, width: F) -> Result<GridSpec<F>> {
        let (m, s) = (self.0.stationary_mean(), self.0.stationary_var().sqrt());
        GridSpec::new(n_points, m - width * s, m + width * s)
    }
}

impl<F: Real> GridModel<F> for LinearGaussianGrid<F> {
    fn initial_log_density(&self, x: F) -> F {
        normal_logpdf(x, self.0.stationary_mean(), self.0.stationary_var())
    }
    fn transition_log_density(&self, x: F, x_prev: F) -> Result<F> {
        let p = &self.0;
        Ok(normal_logpdf(x, p.delta + p.rho * x_prev, p.sigma_v * p.sigma_v))
    }
    fn measurement_log_density(&self, y: F, x: F) -> F {
        normal_logpdf(y, x, self.0.sigma_e * self.0.sigma_e)
    }
}

/// Heston log-likelihood of the returns `r` by the grid filter.
pub fn grid_filter_loglik<F: Real>(
    r: &[F],
    params: &HestonParams<F>,
    transitions: Transitions,
    grid: &GridSpec<F>,
) -> Result<F> {
    params.validate()?;
    grid_loglik_with(&HestonGrid { params: *params, transitions }, &log_squared_returns(r), grid)
}
