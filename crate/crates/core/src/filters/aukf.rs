//! Augmented unscented Kalman filter for scalar-state models with
//! non-additive noise.

use crate::error::{Error, Result};
use crate::filters::noise::{log_eps_moments, truncated_normal_moments};
use crate::filters::sigma::{gaussian_spread, make_sigma_points};
use crate::filters::FilterState;
use crate::models::{HestonParams, LgParams};
use crate::special::normal_logpdf;
use crate::Real;

/// A scalar state space model `x_t = k(x_{t-1}, v_t)`, `y_t = h(x_t, e_t)`.
pub trait UnscentedModel<F: Real> {
    /// Marginal mean and variance of the state used to start the recursion.
    fn initial_moments(&self) -> (F, F);
    /// Mean and variance of `v_t` when the previous state equals `x_prev`.
    fn state_noise_moments(&self, x_prev: F) -> (F, F);
    fn measurement_noise_moments(&self) -> (F, F);
    fn transition(&self, x_prev: F, v: F) -> F;
    fn measurement(&self, x: F, e: F) -> F;
    /// Lower state sigma point. When set, the lower point of the state row
    /// sits exactly on it (`b = (mean - floor) / sd`) and propagated states
    /// are clipped to it.
    fn state_floor(&self) -> Option<F> {
        None
    }
    fn spread(&self) -> [(F, F); 3] {
        gaussian_spread()
    }
}

pub const PREDICTIVE_VAR_FLOOR: f64 = 1e-12;

/// Runs the filter over `y` and returns the final filtered state.
pub fn aukf_filter<F: Real, M: UnscentedModel<F>>(model: &M, y: &[F]) -> Result<FilterState<F>> {
    if y.is_empty() {
        return Err(Error::Length { needed: 1, got: 0 });
    }
    let spread = model.spread();
    let floor = model.state_floor();
    let clip = |x: F| floor.map_or(x, |f| x.max(f));
    // the lower state point sits on the floor; a mean at or below the floor
    // leaves no room for it and the clip inside make_sigma_points takes over
    let spread_at = |m: F, v: F| match floor {
        Some(f) if m > f && v > F::zero() => {
            let mut s = spread;
            s[0].1 = (m - f) / v.sqrt();
            s
        }
        _ => spread,
    };
    // with the lower point pinned the centre weight can go negative, so second
    // moments are taken about the centre point, which keeps them non-negative
    let centre = |at_centre: F, weighted: F| if floor.is_some() { at_centre } else { weighted };
    let (e_mean, e_var) = model.measurement_noise_moments();
    let var_floor = F::lit(PREDICTIVE_VAR_FLOOR);
    let (mut mean, mut var) = model.initial_moments();
    let mut loglik = F::zero();

    for &yt in y {
        // propagate the filtered sigma points through the transition
        let (v_mean, v_var) = model.state_noise_moments(clip(mean));
        let prev = make_sigma_points([mean, v_mean, e_mean], [var, v_var, e_var], spread_at(mean, var), floor)?;
        let w = prev.weights;
        let mut x_pred = [F::zero(); 7];
        for i in 0..7 {
            let x = prev.points[0][i];
            let v = match i {
                2 | 5 => prev.points[1][i],
                // the noise law depends on the state this column carries
                1 | 4 => model.state_noise_moments(x).0,
                _ => v_mean,
            };
            x_pred[i] = clip(model.transition(x, v));
        }
        let p_mean: F = (0..7).map(|i| w[i] * x_pred[i]).sum();
        let p_ref = centre(x_pred[0], p_mean);
        let p_var: F = (0..7).map(|i| w[i] * (x_pred[i] - p_ref) * (x_pred[i] - p_ref)).sum::<F>().max(F::zero());

        // fresh sigma points around the predictive moments, through the measurement
        let pred = make_sigma_points([p_mean, F::zero(), e_mean], [p_var, F::zero(), e_var], spread_at(p_mean, p_var), floor)?;
        let w = pred.weights;
        let mut y_sig = [F::zero(); 7];
        for i in 0..7 {
            y_sig[i] = model.measurement(pred.points[0][i], pred.points[2][i]);
        }
        let x_mean: F = (0..7).map(|i| w[i] * pred.points[0][i]).sum();
        let y_mean: F = (0..7).map(|i| w[i] * y_sig[i]).sum();
        let (x_ref, y_ref) = (centre(pred.points[0][0], x_mean), centre(y_sig[0], y_mean));
        let y_var: F = (0..7).map(|i| w[i] * (y_sig[i] - y_ref) * (y_sig[i] - y_ref)).sum::<F>().max(var_floor);
        let cross: F = (0..7).map(|i| w[i] * (pred.points[0][i] - x_ref) * (y_sig[i] - y_ref)).sum();

        loglik = loglik + normal_logpdf(yt, y_mean, y_var);
        let gain = cross / y_var;
        mean = p_mean + gain * (yt - y_mean);
        var = (p_var - gain * gain * y_var).max(F::zero());
        if !(loglik.is_finite() && mean.is_finite()) {
            return Err(Error::Numerical(format!("unscented filter diverged: loglik {loglik}, mean {mean}")));
        }
    }
    Ok(FilterState { mean, var, loglik })
}

pub fn aukf_loglik_with<F: Real, M: UnscentedModel<F>>(model: &M, y: &[F]) -> Result<F> {
    aukf_filter(model, y).map(|s| s.loglik)
}

/// The linear Gaussian model written in unscented form.
#[derive(Debug, Clone, Copy)]
pub struct LinearGaussianUkf<F>(pub LgParams<F>);

impl<F: Real> UnscentedModel<F> for LinearGaussianUkf<F> {
    fn initial_moments(&self) -> (F, F) {
        (self.0.stationary_mean(), self.0.stationary_var())
    }
    fn state_noise_moments(&self, _: F) -> (F, F) {
        (F::zero(), F::one())
    }
    fn measurement_noise_moments(&self) -> (F, F) {
        (F::zero(), F::one())
    }
    fn transition(&self, x_prev: F, v: F) -> F {
        self.0.delta + self.0.rho * x_prev + self.0.sigma_v * v
    }
    fn measurement(&self, x: F, e: F) -> F {
        x + self.0.sigma_e * e
    }
}

pub const HESTON_VARIANCE_FLOOR: f64 = 1e-5;

/// Euler-discretised Heston model on `y_t = ln r_t^2 = ln V_t + e_t`, with
/// the state innovation truncated so that `V_t` stays positive.
#[derive(Debug, Clone, Copy)]
pub struct HestonUkf<F> {
    params: HestonParams<F>,
    e_moments: (F, F),
}

impl<F: Real> HestonUkf<F> {
    pub fn new(params: HestonParams<F>) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, e_moments: log_eps_moments()? })
    }
}

impl<F: Real> UnscentedModel<F> for HestonUkf<F> {
    fn initial_moments(&self) -> (F, F) {
        (self.params.stationary_mean(), self.params.stationary_var())
    }
    fn state_noise_moments(&self, v_prev: F) -> (F, F) {
        let p = &self.params;
        let lower = -(p.delta + p.rho * v_prev) / (p.sigma_v * v_prev.sqrt());
        truncated_normal_moments(lower)
    }
    fn measurement_noise_moments(&self) -> (F, F) {
        self.e_moments
    }
    fn transition(&self, v_prev: F, v: F) -> F {
        let p = &self.params;
        p.delta + p.rho * v_prev + p.sigma_v * v_prev.sqrt() * v
    }
    fn measurement(&self, v: F, e: F) -> F {
        v.ln() + e
    }
    fn state_floor(&self) -> Option<F> {
        Some(F::lit(HESTON_VARIANCE_FLOOR))
    }
}

/// `y_t = ln(r_t^2)`, with `r_t^2` clamped away from zero.
pub fn log_squared_returns<F: Real>(r: &[F]) -> Vec<F> {
    let tiny = F::lit(1e-300).max(F::min_positive_value());
    r.iter().map(|&x| (x * x).max(tiny).ln()).collect()
}

/// Approximate Heston log-likelihood of the returns `r`.
pub fn aukf_loglik<F: Real>(r: &[F], params: &HestonParams<F>) -> Result<F> {
    aukf_loglik_with(&HestonUkf::new(*params)?, &log_squared_returns(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::kalman_loglik;
    use crate::models::{simulate_heston, simulate_lg};

    #[test]
    fn linear_model_reproduces_kalman() {
        let p = LgParams::<f64>::with_sn_ratio(0.7, 0.1, 1.0, 20.0).unwrap();
        let y = simulate_lg(&p, 400, 1).unwrap().obs;
        let ukf = aukf_loglik_with(&LinearGaussianUkf(p), &y).unwrap();
        let kf = kalman_loglik(&y, &p).unwrap();
        assert!((ukf - kf).abs() < 1e-6, "{ukf} vs {kf}");
    }

    #[test]
    fn deterministic_state_limit() {
        let p = HestonParams::<f64>::new(0.92, 0.0024, 1e-8).unwrap();
        let r = simulate_heston(&p, 200, 2).unwrap().obs;
        let y = log_squared_returns(&r);
        let (em, ev) = log_eps_moments::<f64>().unwrap();
        let v_star = p.stationary_mean().ln();
        let want: Vec<f64> = y.iter().map(|&yt| normal_logpdf(yt - v_star, em, ev)).collect();
        let model = HestonUkf::new(p).unwrap();
        for t in 0..y.len() {
            let before = aukf_loglik_with(&model, &y[..t]).unwrap_or(0.0);
            let after = aukf_loglik_with(&model, &y[..=t]).unwrap();
            assert!((after - before - want[t]).abs() < 1e-2, "t = {t}");
        }
    }

    #[test]
    fn zero_return_is_clamped() {
        let p = HestonParams::<f64>::new(0.92, 0.0024, 0.062).unwrap();
        let ll = aukf_loglik(&[0.01, 0.0, -0.02], &p).unwrap();
        assert!(ll.is_finite());
    }

    #[test]
    fn paper_setting_is_finite() {
        let p = HestonParams::<f64>::new(0.92, 0.0024, 0.062).unwrap();
        let r = simulate_heston(&p, 400, 3).unwrap().obs;
        assert!(aukf_loglik(&r, &p).unwrap().is_finite());
    }
}
