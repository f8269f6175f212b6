//! Heston square-root stochastic volatility: `r_t = sqrt(V_t) eps_t`,
//! `dV = (delta - alpha V) dt + sigma_v sqrt(V) dW` observed at unit spacing.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::lg::SimulatedSeries;
use crate::rng::Streams;
use crate::special::ln_gamma;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonParams<F> {
    /// Persistence, `1 - alpha`.
    pub rho: F,
    pub delta: F,
    pub sigma_v: F,
}

impl<F: Real> HestonParams<F> {
    pub fn new(rho: F, delta: F, sigma_v: F) -> Result<Self> {
        let p = Self { rho, delta, sigma_v };
        p.validate()?;
        Ok(p)
    }

    pub fn from_phi(phi: &[F]) -> Result<Self> {
        Self::new(phi[0], phi[1], phi[2])
    }

    pub fn phi(&self) -> [F; 3] {
        [self.rho, self.delta, self.sigma_v]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > F::zero() && self.rho < F::one()) {
            return Err(Error::Domain(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        if !(self.delta > F::zero()) || !(self.sigma_v > F::zero()) {
            return Err(Error::Domain(format!(
                "delta and sigma_v must be positive, got {} and {}",
                self.delta, self.sigma_v
            )));
        }
        if F::lit(2.0) * self.delta < self.sigma_v * self.sigma_v {
            return Err(Error::Domain(format!(
                "Feller condition 2 delta >= sigma_v^2 violated: {} < {}",
                F::lit(2.0) * self.delta,
                self.sigma_v * self.sigma_v
            )));
        }
        Ok(())
    }

    pub fn alpha(&self) -> F {
        F::one() - self.rho
    }

    pub fn stationary_mean(&self) -> F {
        self.delta / self.alpha()
    }

    pub fn stationary_var(&self) -> F {
        let a = self.alpha();
        self.sigma_v * self.sigma_v * self.delta / (F::lit(2.0) * a * a)
    }

    /// Stationary gamma law as `(shape, scale)`.
    pub fn stationary_gamma(&self) -> (F, F) {
        let s2 = self.sigma_v * self.sigma_v;
        (F::lit(2.0) * self.delta / s2, s2 / (F::lit(2.0) * self.alpha()))
    }

    /// Scale `c = 2 alpha / (sigma_v^2 (1 - e^-alpha))` of the non-central chi-squared transition.
    pub fn cir_c(&self) -> F {
        let a = self.alpha();
        F::lit(2.0) * a / (self.sigma_v * self.sigma_v * (-(-a).exp_m1()))
    }

    /// Order `q = 2 delta / sigma_v^2 - 1` of the transition's Bessel function.
    pub fn cir_q(&self) -> F {
        F::lit(2.0) * self.delta / (self.sigma_v * self.sigma_v) - F::one()
    }

    /// `E[V_t | V_{t-1} = v_prev]`.
    pub fn conditional_mean(&self, v_prev: F) -> F {
        let decay = (-self.alpha()).exp();
        v_prev * decay + self.stationary_mean() * (F::one() - decay)
    }

    /// `var[V_t | V_{t-1} = v_prev]`.
    pub fn conditional_var(&self, v_prev: F) -> F {
        let a = self.alpha();
        let decay = (-a).exp();
        let s2 = self.sigma_v * self.sigma_v;
        v_prev * s2 * decay * (F::one() - decay) / a
            + self.delta * s2 * (F::one() - decay) * (F::one() - decay) / (F::lit(2.0) * a * a)
    }
}

/// Poisson variate: sequential inversion below mean 30, PTRS rejection above.
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    if mean < 30.0 {
        let mut p = (-mean).exp();
        let mut cdf = p;
        let u: f64 = rng.random();
        let mut k = 0.0;
        while u > cdf {
            k += 1.0;
            p *= mean / k;
            cdf += p;
            if p == 0.0 && cdf < u {
                // u landed in the rounding gap of the cdf; resample
                return sample_poisson(mean, rng);
            }
        }
        return k;
    }
    // Hörmann's transformed rejection with squeeze.
    let smu = mean.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.024_83 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    let log_mean = mean.ln();
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln() <= -mean + k * log_mean - ln_gamma(k + 1.0) {
            return k;
        }
    }
}

/// Exact draw of `V_t | V_{t-1}`: `j ~ Poisson(u)`, then
/// `V_t = chi2(2q + 2 + 2j) / 2c`, drawn here as `Gamma(q + 1 + j) / c`.
pub fn cir_sample_transition<F: Real, R: Rng + ?Sized>(v_prev: F, params: &HestonParams<F>, rng: &mut R) -> F {
    let c = params.cir_c().f64();
    let q = params.cir_q().f64();
    let u = c * v_prev.f64() * (-params.alpha().f64()).exp();
    let j = sample_poisson(u, rng);
    let g: f64 = Gamma::new(q + 1.0 + j, 1.0).expect("positive shape").sample(rng);
    F::lit(g / c)
}

/// Transition density `p(v | v_prev)` in log space.
///
/// Sums the Poisson-weighted central chi-squared mixture outward from its
/// largest term. For very large Bessel arguments the series becomes too long
/// and the uniform asymptotic expansion of `I_q` is used instead.
pub fn cir_log_transition_density<F: Real>(v: F, v_prev: F, params: &HestonParams<F>) -> Result<F> {
    if !(v > F::zero() && v_prev > F::zero()) {
        return Err(Error::Domain(format!("variances must be positive, got {v} given {v_prev}")));
    }
    let c = params.cir_c().f64();
    let q = params.cir_q().f64();
    let a = c * v_prev.f64() * (-params.alpha().f64()).exp();
    let b = c * v.f64();
    let lp = if a * b > 1e12 {
        log_density_asymptotic(c, q, a, b)
    } else {
        log_density_series(c, q, a, b)?
    };
    Ok(F::lit(lp))
}

/// `ln c - a - b + (q/2) ln(b/a) + ln I_q(2 sqrt(ab))` with the Debye expansion of `I_q`.
fn log_density_asymptotic(c: f64, q: f64, a: f64, b: f64) -> f64 {
    let z = 2.0 * (a * b).sqrt();
    let r = (q * q + z * z).sqrt();
    let t2 = q * q / (r * r);
    let eta = r + q * (z / (q + r)).ln();
    let correction =
        1.0 + (3.0 - 5.0 * t2) / (24.0 * r) + (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / (1152.0 * r * r);
    let log_bessel = eta - 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * r.ln() + correction.ln();
    c.ln() - a - b + 0.5 * q * (b / a).ln() + log_bessel
}

fn log_density_series(c: f64, q: f64, a: f64, b: f64) -> Result<f64> {
    const MAX_TERMS: usize = 100_000;
    let (ln_a, ln_b) = (a.ln(), b.ln());
    let j0 = ((-(q + 2.0) + (q * q + 4.0 * a * b).sqrt()) / 2.0).max(0.0).round();
    let t0 = j0 * ln_a + (q + j0) * ln_b - ln_gamma(j0 + 1.0) - ln_gamma(q + j0 + 1.0);
    let cutoff = (1e-16f64).ln();
    let mut sum = 1.0f64;
    let mut count = 0usize;

    let mut lt = t0;
    let mut j = j0;
    loop {
        // t_{j+1} / t_j = ab / ((j + 1)(q + j + 1))
        lt += ln_a + ln_b - (j + 1.0).ln() - (q + j + 1.0).ln();
        j += 1.0;
        count += 1;
        if lt - t0 < cutoff {
            break;
        }
        sum += (lt - t0).exp();
        if count > MAX_TERMS {
            return Err(Error::Numerical("transition density series did not converge".into()));
        }
    }
    let mut lt = t0;
    let mut j = j0;
    while j > 0.0 {
        lt -= ln_a + ln_b - j.ln() - (q + j).ln();
        j -= 1.0;
        count += 1;
        if lt - t0 < cutoff {
            break;
        }
        sum += (lt - t0).exp();
        if count > MAX_TERMS {
            return Err(Error::Numerical("transition density series did not converge".into()));
        }
    }
    Ok(c.ln() - a - b + t0 + sum.ln())
}

pub fn cir_transition_density<F: Real>(v: F, v_prev: F, params: &HestonParams<F>) -> Result<F> {
    cir_log_transition_density(v, v_prev, params).map(F::exp)
}

/// Log density of the stationary gamma law of `V`.
pub fn stationary_log_density<F: Real>(v: F, params: &HestonParams<F>) -> F {
    let (k, theta) = params.stationary_gamma();
    let (k, theta, v) = (k.f64(), theta.f64(), v.f64());
    F::lit((k - 1.0) * v.ln() - v / theta - ln_gamma(k) - k * theta.ln())
}

/// Simulated variance path and returns for `t = 1..=len`.
pub fn simulate_heston<F: Real>(params: &HestonParams<F>, len: usize, seed: u64) -> Result<SimulatedSeries<F>> {
    let mut rng = Streams::new(seed).stream(0);
    simulate_heston_with(params, len, &mut rng)
}

pub fn simulate_heston_with<F: Real, R: Rng + ?Sized>(
    params: &HestonParams<F>,
    len: usize,
    rng: &mut R,
) -> Result<SimulatedSeries<F>> {
    params.validate()?;
    if len < 2 {
        return Err(Error::Length { needed: 2, got: len });
    }
    let (shape, scale) = params.stationary_gamma();
    let mut v: F = F::lit(
        Gamma::new(shape.f64(), scale.f64())
            .map_err(|e| Error::Domain(format!("stationary law: {e}")))?
            .sample(rng),
    );
    let mut states = Vec::with_capacity(len);
    let mut obs = Vec::with_capacity(len);
    for t in 0..len {
        if t > 0 {
            v = cir_sample_transition(v, params, rng);
        }
        // A zero draw is a measure-zero event; keep the path strictly positive.
        v = v.max(F::min_positive_value());
        states.push(v);
        let eps: f64 = rng.sample(StandardNormal);
        obs.push(v.sqrt() * F::lit(eps));
    }
    Ok(SimulatedSeries { states, obs })
}
