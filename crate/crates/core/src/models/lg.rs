use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Streams;
use crate::Real;

/// Linear Gaussian state space model
/// `y_t = x_t + sigma_e e_t`, `x_t = delta + rho x_{t-1} + sigma_v v_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LgParams<F> {
    pub rho: F,
    pub delta: F,
    pub sigma_v: F,
    /// Known measurement noise scale; not an inferred parameter.
    pub sigma_e: F,
}

impl<F: Real> LgParams<F> {
    pub fn new(rho: F, delta: F, sigma_v: F, sigma_e: F) -> Result<Self> {
        let p = Self { rho, delta, sigma_v, sigma_e };
        p.validate()?;
        Ok(p)
    }

    /// Builds the model with `sigma_e` chosen so that `var(x) / sigma_e^2 = sn_ratio`.
    pub fn with_sn_ratio(rho: F, delta: F, sigma_v: F, sn_ratio: F) -> Result<Self> {
        if !(sn_ratio > F::zero()) {
            return Err(Error::Domain(format!("signal-to-noise ratio must be positive, got {sn_ratio}")));
        }
        let var_x = sigma_v * sigma_v / (F::one() - rho * rho);
        Self::new(rho, delta, sigma_v, (var_x / sn_ratio).sqrt())
    }

    pub fn from_phi(phi: &[F], sigma_e: F) -> Result<Self> {
        Self::new(phi[0], phi[1], phi[2], sigma_e)
    }

    pub fn phi(&self) -> [F; 3] {
        [self.rho, self.delta, self.sigma_v]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho.abs() < F::one()) {
            return Err(Error::Domain(format!("|rho| must be < 1, got {}", self.rho)));
        }
        if !(self.sigma_v > F::zero()) || !(self.sigma_e > F::zero()) || !self.delta.is_finite() {
            return Err(Error::Domain(format!(
                "need sigma_v > 0, sigma_e > 0 and finite delta; got {:?}",
                (self.sigma_v, self.sigma_e, self.delta)
            )));
        }
        Ok(())
    }

    pub fn stationary_mean(&self) -> F {
        self.delta / (F::one() - self.rho)
    }

    pub fn stationary_var(&self) -> F {
        self.sigma_v * self.sigma_v / (F::one() - self.rho * self.rho)
    }

    pub fn sn_ratio(&self) -> F {
        self.stationary_var() / (self.sigma_e * self.sigma_e)
    }
}

/// Simulated latent states and observations, both indexed from `t = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSeries<F> {
    pub states: Vec<F>,
    pub obs: Vec<F>,
}

pub fn simulate_lg<F: Real>(params: &LgParams<F>, len: usize, seed: u64) -> Result<SimulatedSeries<F>> {
    let mut rng = Streams::new(seed).stream(0);
    simulate_lg_with(params, len, &mut rng)
}

pub fn simulate_lg_with<F: Real, R: Rng + ?Sized>(
    params: &LgParams<F>,
    len: usize,
    rng: &mut R,
) -> Result<SimulatedSeries<F>> {
    params.validate()?;
    if len < 2 {
        return Err(Error::Length { needed: 2, got: len });
    }
    let mut states = Vec::with_capacity(len);
    let mut obs = Vec::with_capacity(len);
    let mut normal = || F::lit(rng.sample::<f64, _>(StandardNormal));
    let mut x = params.stationary_mean() + params.stationary_var().sqrt() * normal();
    for t in 0..len {
        if t > 0 {
            x = params.delta + params.rho * x + params.sigma_v * normal();
        }
        states.push(x);
        obs.push(x + params.sigma_e * normal());
    }
    Ok(SimulatedSeries { states, obs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonstationary() {
        assert!(matches!(LgParams::new(1.0, 0.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(LgParams::new(0.5, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn sn_ratio_round_trips() {
        let p = LgParams::with_sn_ratio(0.7, 0.1, 1.0, 20.0).unwrap();
        assert!((p.sn_ratio() - 20.0f64).abs() < 1e-12);
    }

    #[test]
    fn noise_free_recursion_stays_at_zero() {
        let p = LgParams::new(0.5, 0.0, 1e-12, 1e-12).unwrap();
        let s = simulate_lg(&p, 50, 3).unwrap();
        assert!(s.obs.iter().all(|y: &f64| y.abs() < 1e-10));
    }

    #[test]
    fn simulation_is_deterministic() {
        let p = LgParams::with_sn_ratio(0.7, 0.1, 1.0, 20.0).unwrap();
        let a = simulate_lg::<f64>(&p, 100, 11).unwrap();
        let b = simulate_lg::<f64>(&p, 100, 11).unwrap();
        assert_eq!(a, b);
        let c = simulate_lg::<f64>(&p, 100, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sample_variance_matches_paper_setting() {
        let p = LgParams::with_sn_ratio(0.7, 0.1, 1.0, 20.0).unwrap();
        // average over independent series to keep the check tight
        let mut acc = 0.0;
        let reps = 200;
        for s in 0..reps {
            let y = simulate_lg::<f64>(&p, 400, s).unwrap().obs;
            let m = y.iter().sum::<f64>() / 400.0;
            acc += y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 399.0;
        }
        let v = acc / reps as f64;
        let target = p.stationary_var() + p.sigma_e * p.sigma_e;
        assert!((target - 2.0588).abs() < 1e-3);
        assert!((v - target).abs() < 0.05, "{v} vs {target}");
    }

    #[test]
    fn too_short_is_rejected() {
        let p = LgParams::new(0.5, 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(simulate_lg::<f64>(&p, 1, 0), Err(Error::Length { .. })));
    }
}
