//! Adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<G: Fn(f64) -> f64>(f: &G, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]`, bisecting the worst interval until the
/// summed error estimate meets `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<G: Fn(f64) -> f64>(f: G, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    const MAX_INTERVALS: usize = 4000;
    let (i0, e0) = gk15(&f, a, b);
    let mut parts = vec![(a, b, i0, e0)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Numerical("non-finite integrand in quadrature".into()));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::Numerical(format!(
                "quadrature did not converge: error estimate {err:e}"
            )));
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (il, el) = gk15(&f, lo, mid);
        let (ir, er) = gk15(&f, mid, hi);
        parts.push((lo, mid, il, el));
        parts.push((mid, hi, ir, er));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomial_exactly() {
        let v = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-14, 1e-14).unwrap();
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn integrates_gaussian_tail() {
        let v = integrate(|x| (-x * x / 2.0).exp(), -40.0, 40.0, 1e-14, 1e-14).unwrap();
        assert!((v - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn reports_non_finite_integrand() {
        assert!(integrate(|x| 1.0 / x, -1.0, 1.0, 1e-12, 1e-12).is_err());
    }
}
