//! Oracles shared by the integration suites. Each one is computed directly
//! from its definition rather than through the library's own recursions.
#![allow(dead_code)]

use ssm_abc::models::{cir_transition_density, HestonParams, LgParams};
use ssm_abc::quadrature::integrate;

/// Joint Gaussian log density of `y` with covariance
/// `var_x rho^|s-t| + sigma_e^2 [s = t]`, by a hand-rolled Cholesky solve.
pub fn lg_brute_force(y: &[f64], p: &LgParams<f64>) -> f64 {
    let n = y.len();
    let var_x = p.sigma_v * p.sigma_v / (1.0 - p.rho * p.rho);
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = var_x * p.rho.powi((i - j) as i32) + if i == j { p.sigma_e * p.sigma_e } else { 0.0 };
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = if i == j { s.sqrt() } else { s / l[j][j] };
        }
    }
    let mean = p.delta / (1.0 - p.rho);
    let mut z = vec![0.0; n];
    let mut quad = 0.0;
    let mut logdet = 0.0;
    for i in 0..n {
        let mut s = y[i] - mean;
        for k in 0..i {
            s -= l[i][k] * z[k];
        }
        z[i] = s / l[i][i];
        quad += z[i] * z[i];
        logdet += 2.0 * l[i][i].ln();
    }
    -0.5 * (n as f64 * std::f64::consts::TAU.ln() + logdet + quad)
}

/// Numeric CDF of the CIR transition from `v_prev`, tabulated by adaptive
/// quadrature on `n` equal cells of `[0, hi]`. Returns `(knots, cdf)`.
pub fn cir_cdf_table(v_prev: f64, p: &HestonParams<f64>, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let density = |v: f64| if v <= 0.0 { 0.0 } else { cir_transition_density(v, v_prev, p).unwrap() };
    let knots: Vec<f64> = (0..=n).map(|i| hi * i as f64 / n as f64).collect();
    let mut cdf = vec![0.0];
    for w in knots.windows(2) {
        let last = *cdf.last().unwrap();
        cdf.push(last + integrate(density, w[0], w[1], 1e-13, 1e-12).unwrap());
    }
    (knots, cdf)
}

/// Kolmogorov-Smirnov statistic of `draws` against a CDF tabulated on
/// equally spaced knots, interpolated linearly.
pub fn ks_statistic(draws: &[f64], knots: &[f64], cdf: &[f64]) -> f64 {
    let mut x = draws.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let h = knots[1] - knots[0];
    let last = knots.len() - 1;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let f = if v >= knots[last] {
            cdf[last]
        } else {
            let k = ((v / h).floor() as usize).min(last - 1);
            let w = (v - knots[k]) / h;
            cdf[k] * (1.0 - w) + cdf[k + 1] * w
        };
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Sample mean, variance and the standard errors of both.
pub fn moments_with_se(x: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    (mean, var, (var / n).sqrt(), ((m4 - var * var) / n).sqrt())
}
