//! Scalar special functions. Transcendental pieces without a generic
//! implementation go through `f64` and are converted back.

use crate::Real;

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Standard normal density.
#[inline]
pub fn normal_pdf<F: Real>(z: F) -> F {
    (-(z * z) / F::lit(2.0) - F::lit(LN_SQRT_2PI)).exp()
}

/// Log density of `N(mean, var)` at `x`.
#[inline]
pub fn normal_logpdf<F: Real>(x: F, mean: F, var: F) -> F {
    let d = x - mean;
    -F::lit(0.5) * (F::TAU().ln() + var.ln() + d * d / var)
}

/// `P(Z > a)` for a standard normal `Z`.
pub fn normal_sf<F: Real>(a: F) -> F {
    F::lit(0.5 * libm::erfc(a.f64() / std::f64::consts::SQRT_2))
}

/// `P(Z <= a)` for a standard normal `Z`.
pub fn normal_cdf<F: Real>(a: F) -> F {
    F::lit(0.5 * libm::erfc(-a.f64() / std::f64::consts::SQRT_2))
}

/// Standard-normal hazard `phi(a) / (1 - Phi(a))`.
///
/// Above `a = 8` the tail probability is too small for a direct ratio, so the
/// Mills ratio is evaluated by its continued fraction instead.
pub fn normal_hazard<F: Real>(a: F) -> F {
    let x = a.f64();
    let h = if x > 8.0 {
        // R(a) = 1/(a + 1/(a + 2/(a + 3/(a + ...))))
        let mut tail = x;
        for k in (1..=80).rev() {
            tail = x + k as f64 / tail;
        }
        tail
    } else {
        let phi = (-(x * x) / 2.0 - LN_SQRT_2PI).exp();
        let q = 0.5 * libm::erfc(x / std::f64::consts::SQRT_2);
        phi / q
    };
    F::lit(h)
}

/// `ln(sum(exp(xs)))`, returning `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<F: Real>(xs: &[F]) -> F {
    let m = xs.iter().copied().fold(F::neg_infinity(), F::max);
    if !m.is_finite() {
        return m;
    }
    let s: F = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Weighted variant: `ln(sum(w_i * exp(x_i)))` with non-negative weights.
pub fn log_sum_exp_weighted<F: Real>(xs: &[F], ws: &[F]) -> F {
    debug_assert_eq!(xs.len(), ws.len());
    let m = xs
        .iter()
        .zip(ws)
        .filter(|(_, &w)| w > F::zero())
        .map(|(&x, _)| x)
        .fold(F::neg_infinity(), F::max);
    if !m.is_finite() {
        return m;
    }
    let s: F = xs.iter().zip(ws).map(|(&x, &w)| w * (x - m).exp()).sum();
    m + s.ln()
}

/// Composite trapezoid weights for ordered abscissae.
pub fn trapezoid_weights<F: Real>(xs: &[F]) -> Vec<F> {
    let n = xs.len();
    let mut w = vec![F::zero(); n];
    let half = F::lit(0.5);
    for i in 1..n {
        let h = (xs[i] - xs[i - 1]) * half;
        w[i - 1] = w[i - 1] + h;
        w[i] = w[i] + h;
    }
    w
}

/// `n` equally spaced points covering `[lo, hi]` inclusive.
pub fn linspace<F: Real>(lo: F, hi: F, n: usize) -> Vec<F> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / F::from_usize_(n - 1);
            (0..n)
                .map(|i| if i + 1 == n { hi } else { lo + step * F::from_usize_(i) })
                .collect()
        }
    }
}
