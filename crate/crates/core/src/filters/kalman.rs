//! Exact Kalman filter for the linear Gaussian model.
//!
//! Besides the textbook recursion there is a [`KalmanPlan`]: the variance and
//! gain sequence of the filter does not depend on the data, so for a fixed
//! parameter point it can be computed once and reused across many series.

use crate::error::{Error, Result};
use crate::models::LgParams;
use crate::Real;

/// Filtered moments after processing `y_1..y_t`, plus the running log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterState<F> {
    pub mean: F,
    pub var: F,
    pub loglik: F,
}

/// Runs the filter from the stationary law and returns the state after every observation.
pub fn kalman_filter<F: Real>(y: &[F], p: &LgParams<F>) -> Result<Vec<FilterState<F>>> {
    p.validate()?;
    if y.is_empty() {
        return Err(Error::Length { needed: 1, got: 0 });
    }
    let ln_2pi = F::TAU().ln();
    let half = F::lit(0.5);
    let se2 = p.sigma_e * p.sigma_e;
    let sv2 = p.sigma_v * p.sigma_v;
    let (mut a, mut pv) = (p.stationary_mean(), p.stationary_var());
    let mut loglik = F::zero();
    let mut out = Vec::with_capacity(y.len());
    for &yt in y {
        let f = pv + se2;
        let v = yt - a;
        loglik = loglik - half * (ln_2pi + f.ln() + v * v / f);
        let k = pv / f;
        let mean = a + k * v;
        let var = pv * (F::one() - k);
        out.push(FilterState { mean, var, loglik });
        a = p.delta + p.rho * mean;
        pv = p.rho * p.rho * var + sv2;
    }
    if !loglik.is_finite() {
        return Err(Error::Numerical(format!("Kalman log-likelihood is {loglik}")));
    }
    Ok(out)
}

/// `sum_t log p(y_t | y_{1:t-1})` under the linear Gaussian model.
pub fn kalman_loglik<F: Real>(y: &[F], p: &LgParams<F>) -> Result<F> {
    Ok(kalman_filter(y, p)?.last().expect("non-empty").loglik)
}

/// Per-step coefficients of the mean recursion `a' = c_a a + c_y y + delta`,
/// with `inv_f = 1 / F_t` the innovation precision.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Step<F> {
    c_a: F,
    c_y: F,
    inv_f: F,
}

/// Precomputed gains for one parameter point and one series length.
#[derive(Debug, Clone)]
pub struct KalmanPlan<F> {
    len: usize,
    delta: F,
    a1: F,
    transient: Vec<Step<F>>,
    steady: Step<F>,
    /// `-0.5 * sum_t ln(2 pi F_t)`.
    constant: F,
}

impl<F: Real> KalmanPlan<F> {
    pub fn new(p: &LgParams<F>, len: usize) -> Result<Self> {
        p.validate()?;
        if len == 0 {
            return Err(Error::Length { needed: 1, got: 0 });
        }
        let ln_2pi = F::TAU().ln();
        let half = F::lit(0.5);
        let se2 = p.sigma_e * p.sigma_e;
        let sv2 = p.sigma_v * p.sigma_v;
        let mut pv = p.stationary_var();
        let mut transient = Vec::new();
        let mut constant = F::zero();
        let mut steady = None;
        for t in 0..len {
            let f = pv + se2;
            let k = pv / f;
            let step = Step { c_a: p.rho * (F::one() - k), c_y: p.rho * k, inv_f: f.recip() };
            constant = constant - half * (ln_2pi + f.ln());
            transient.push(step);
            let next = p.rho * p.rho * pv * (F::one() - k) + sv2;
            if (next - pv).abs() <= F::epsilon() * pv {
                // every later step repeats this one
                constant = constant - half * F::from_usize_(len - t - 1) * (ln_2pi + f.ln());
                steady = Some(step);
                break;
            }
            pv = next;
        }
        let steady = steady.unwrap_or_else(|| *transient.last().expect("len >= 1"));
        Ok(Self { len, delta: p.delta, a1: p.stationary_mean(), transient, steady, constant })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    fn step(&self, t: usize) -> &Step<F> {
        self.transient.get(t).unwrap_or(&self.steady)
    }

    pub fn loglik(&self, y: &[F]) -> F {
        assert_eq!(y.len(), self.len, "series length differs from the plan");
        let mut a = self.a1;
        let mut quad = F::zero();
        for (t, &yt) in y.iter().enumerate() {
            let s = self.step(t);
            let v = yt - a;
            quad = quad + v * v * s.inv_f;
            a = s.c_a * a + s.c_y * yt + self.delta;
        }
        self.constant - F::lit(0.5) * quad
    }
}

const LANES: usize = 8;

/// Evaluates every plan on `y`, writing into `out`. Plans are processed
/// several at a time so their independent recursions overlap.
pub fn loglik_batch<F: Real>(plans: &[KalmanPlan<F>], y: &[F], out: &mut [F]) {
    assert_eq!(plans.len(), out.len());
    for (chunk, dst) in plans.chunks(LANES).zip(out.chunks_mut(LANES)) {
        if chunk.len() < LANES {
            for (p, o) in chunk.iter().zip(dst.iter_mut()) {
                *o = p.loglik(y);
            }
            continue;
        }
        assert!(chunk.iter().all(|p| p.len == y.len()), "series length differs from the plan");
        let mut a = [F::zero(); LANES];
        let mut quad = [F::zero(); LANES];
        let mut delta = [F::zero(); LANES];
        for l in 0..LANES {
            a[l] = chunk[l].a1;
            delta[l] = chunk[l].delta;
        }
        let warm = chunk.iter().map(|p| p.transient.len()).max().unwrap_or(0).min(y.len());
        for (t, &yt) in y[..warm].iter().enumerate() {
            for l in 0..LANES {
                let s = chunk[l].step(t);
                let v = yt - a[l];
                quad[l] = quad[l] + v * v * s.inv_f;
                a[l] = s.c_a * a[l] + s.c_y * yt + delta[l];
            }
        }
        let mut c_a = [F::zero(); LANES];
        let mut c_y = [F::zero(); LANES];
        let mut inv_f = [F::zero(); LANES];
        for l in 0..LANES {
            let s = chunk[l].steady;
            (c_a[l], c_y[l], inv_f[l]) = (s.c_a, s.c_y, s.inv_f);
        }
        for &yt in &y[warm..] {
            for l in 0..LANES {
                let v = yt - a[l];
                quad[l] = quad[l] + v * v * inv_f[l];
                a[l] = c_a[l] * a[l] + c_y[l] * yt + delta[l];
            }
        }
        for l in 0..LANES {
            dst[l] = chunk[l].constant - F::lit(0.5) * quad[l];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cholesky, Matrix};
    use crate::models::simulate_lg;
    use crate::special::normal_logpdf;
    use approx::assert_relative_eq;

    fn paper() -> LgParams<f64> {
        LgParams::with_sn_ratio(0.7, 0.1, 1.0, 20.0).unwrap()
    }

    /// Joint Gaussian log density with covariance `var_x * rho^|i-j| + sigma_e^2 I`.
    fn brute_force(y: &[f64], p: &LgParams<f64>) -> f64 {
        let n = y.len();
        let mut cov = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                cov[(i, j)] = p.stationary_var() * p.rho.powi((i as i32 - j as i32).abs());
            }
            cov[(i, i)] += p.sigma_e * p.sigma_e;
        }
        let l = cholesky(&cov).unwrap();
        let mut z = vec![0.0; n];
        for i in 0..n {
            let mut s = y[i] - p.stationary_mean();
            for k in 0..i {
                s -= l[(i, k)] * z[k];
            }
            z[i] = s / l[(i, i)];
        }
        let logdet: f64 = (0..n).map(|i| l[(i, i)].ln()).sum::<f64>() * 2.0;
        -0.5 * (n as f64 * std::f64::consts::TAU.ln() + logdet + z.iter().map(|v| v * v).sum::<f64>())
    }

    #[test]
    fn single_observation_is_stationary_density() {
        let p = paper();
        let y = [0.8];
        let want = normal_logpdf(0.8, p.stationary_mean(), p.stationary_var() + p.sigma_e * p.sigma_e);
        assert_relative_eq!(kalman_loglik(&y, &p).unwrap(), want, epsilon = 1e-12);
    }

    #[test]
    fn matches_multivariate_normal() {
        let p = paper();
        let y = simulate_lg(&p, 5, 1).unwrap().obs;
        assert!((kalman_loglik(&y, &p).unwrap() - brute_force(&y, &p)).abs() < 1e-8);
    }

    #[test]
    fn independence_case() {
        let p = LgParams::new(0.0, 0.3, 0.8, 0.5).unwrap();
        let y = simulate_lg(&p, 30, 2).unwrap().obs;
        let want: f64 = y.iter().map(|&v| normal_logpdf(v, 0.3, 0.64 + 0.25)).sum();
        assert_relative_eq!(kalman_loglik(&y, &p).unwrap(), want, epsilon = 1e-10);
    }

    #[test]
    fn plan_matches_recursion() {
        let y = simulate_lg(&paper(), 400, 3).unwrap().obs;
        let params = [
            paper(),
            LgParams::new(0.98, -0.2, 0.15, 0.3).unwrap(),
            LgParams::new(0.01, 0.6, 1.9, 0.3).unwrap(),
        ];
        for p in &params {
            let plan = KalmanPlan::new(p, y.len()).unwrap();
            let exact = kalman_loglik(&y, p).unwrap();
            assert!((plan.loglik(&y) - exact).abs() < 1e-9 * exact.abs(), "{p:?}");
        }
    }

    #[test]
    fn batch_matches_single() {
        let y = simulate_lg(&paper(), 200, 4).unwrap().obs;
        let plans: Vec<_> = (0..19)
            .map(|i| {
                let rho = 0.05 * i as f64;
                KalmanPlan::new(&LgParams::new(rho, 0.1, 0.5 + 0.05 * i as f64, 0.3).unwrap(), 200).unwrap()
            })
            .collect();
        let mut out = vec![0.0; plans.len()];
        loglik_batch(&plans, &y, &mut out);
        for (p, o) in plans.iter().zip(&out) {
            assert_eq!(p.loglik(&y), *o);
        }
    }

    #[test]
    fn single_precision_runs() {
        let p = LgParams::<f32>::with_sn_ratio(0.7, 0.1, 1.0, 20.0).unwrap();
        let y: Vec<f32> = simulate_lg::<f64>(&paper(), 50, 5).unwrap().obs.iter().map(|&v| v as f32).collect();
        let ll32 = kalman_loglik(&y, &p).unwrap() as f64;
        let y64: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let ll64 = kalman_loglik(&y64, &paper()).unwrap();
        assert!((ll32 - ll64).abs() < 1e-3 * ll64.abs());
    }
}
