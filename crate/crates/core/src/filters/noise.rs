//! Moments of the noise terms used by the unscented filter.

use std::sync::OnceLock;

use crate::error::Result;
use crate::quadrature::integrate;
use crate::special::{normal_hazard, LN_SQRT_2PI};
use crate::Real;

/// Log density of `e = ln(eps^2)` for standard normal `eps`.
#[inline]
pub fn log_eps_density<F: Real>(e: F) -> F {
    e / F::lit(2.0) - e.exp() / F::lit(2.0) - F::lit(LN_SQRT_2PI)
}

// The density decays like exp(e/2) on the left and doubly exponentially on
// the right, so this range holds all but ~1e-20 of the mass.
const E_LO: f64 = -100.0;
const E_HI: f64 = 8.0;

fn quadrature_moments() -> Result<(f64, f64)> {
    let p = |e: f64| log_eps_density(e).exp();
    let mean = integrate(|e| e * p(e), E_LO, E_HI, 1e-14, 1e-13)?;
    let var = integrate(|e| (e - mean) * (e - mean) * p(e), E_LO, E_HI, 1e-14, 1e-13)?;
    Ok((mean, var))
}

/// Mean and variance of `ln(eps^2)` by adaptive quadrature, computed once.
pub fn log_eps_moments<F: Real>() -> Result<(F, F)> {
    static CACHE: OnceLock<Result<(f64, f64)>> = OnceLock::new();
    let (m, v) = CACHE.get_or_init(quadrature_moments).clone()?;
    Ok((F::lit(m), F::lit(v)))
}

/// Mean and variance of a standard normal truncated to `(lower, inf)`.
pub fn truncated_normal_moments<F: Real>(lower: F) -> (F, F) {
    let lambda = normal_hazard(lower);
    (lambda, F::one() - lambda * (lambda - lower))
}
