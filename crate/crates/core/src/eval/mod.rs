//! Reference posteriors on parameter grids, kernel density estimates of ABC
//! draws and the accuracy measures used to compare them.

mod exact;
mod replicate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{normal_pdf, trapezoid_weights};

pub use exact::{exact_posterior, posterior_axes};
pub use replicate::{replicate, MethodDraws, ParamSummary, ReplicationReport};

const NORMALIZATION_TOL: f64 = 1e-6;

/// Marginal density of one parameter on an ordered grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorGrid {
    pub param_index: usize,
    pub abscissae: Vec<f64>,
    pub ordinates: Vec<f64>,
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    trapezoid_weights(xs).iter().zip(ys).map(|(w, y)| w * y).sum()
}

fn check_abscissae(xs: &[f64]) -> Result<()> {
    if xs.len() < 2 {
        return Err(Error::Shape(format!("a density grid needs at least 2 points, got {}", xs.len())));
    }
    if !xs.iter().all(|x| x.is_finite()) || !xs.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Shape("abscissae must be finite and strictly increasing".into()));
    }
    Ok(())
}

impl PosteriorGrid {
    /// Checks ordering, non-negativity and unit trapezoid mass.
    pub fn new(param_index: usize, abscissae: Vec<f64>, ordinates: Vec<f64>) -> Result<Self> {
        check_abscissae(&abscissae)?;
        if ordinates.len() != abscissae.len() {
            return Err(Error::Shape(format!("{} ordinates for {} abscissae", ordinates.len(), abscissae.len())));
        }
        if !ordinates.iter().all(|y| y.is_finite() && *y >= 0.0) {
            return Err(Error::Numerical("density ordinates must be finite and non-negative".into()));
        }
        let mass = trapezoid(&abscissae, &ordinates);
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Numerical(format!("density integrates to {mass}, not 1")));
        }
        Ok(Self { param_index, abscissae, ordinates })
    }

    /// Scales non-negative `weights` to unit trapezoid mass.
    pub fn normalized(param_index: usize, abscissae: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        check_abscissae(&abscissae)?;
        let mass = trapezoid(&abscissae, &weights);
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Support(format!("unnormalized density has mass {mass}")));
        }
        let ordinates = weights.iter().map(|w| w / mass).collect();
        Self::new(param_index, abscissae, ordinates)
    }

    pub fn len(&self) -> usize {
        self.abscissae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissae.is_empty()
    }

    pub fn mass(&self) -> f64 {
        trapezoid(&self.abscissae, &self.ordinates)
    }

    /// Linear interpolation, zero outside the grid.
    pub fn value_at(&self, x: f64) -> f64 {
        let xs = &self.abscissae;
        if !(x >= xs[0] && x <= xs[xs.len() - 1]) {
            return 0.0;
        }
        let k = xs.partition_point(|&a| a <= x).clamp(1, xs.len() - 1);
        let (x0, x1) = (xs[k - 1], xs[k]);
        let (y0, y1) = (self.ordinates[k - 1], self.ordinates[k]);
        let t = (x - x0) / (x1 - x0);
        y0 * (1.0 - t) + y1 * t
    }

    pub fn resample(&self, abscissae: &[f64]) -> Vec<f64> {
        abscissae.iter().map(|&x| self.value_at(x)).collect()
    }

    pub fn mean(&self) -> f64 {
        let xy: Vec<f64> = self.abscissae.iter().zip(&self.ordinates).map(|(x, y)| x * y).collect();
        trapezoid(&self.abscissae, &xy) / self.mass()
    }

    /// Quantile of the piecewise linear density.
    pub fn quantile(&self, p: f64) -> f64 {
        let xs = &self.abscissae;
        let ys = &self.ordinates;
        let target = p.clamp(0.0, 1.0) * self.mass();
        let mut acc = 0.0;
        for k in 1..xs.len() {
            let h = xs[k] - xs[k - 1];
            let seg = 0.5 * h * (ys[k - 1] + ys[k]);
            if acc + seg >= target && seg > 0.0 {
                // solve y0 t + (y1 - y0) t^2 / (2h) = target - acc for t in [0, h]
                let need = target - acc;
                let (a, b) = ((ys[k] - ys[k - 1]) / (2.0 * h), ys[k - 1]);
                let t = if a.abs() < 1e-300 { need / b } else { (-b + (b * b + 4.0 * a * need).max(0.0).sqrt()) / (2.0 * a) };
                return xs[k - 1] + t.clamp(0.0, h);
            }
            acc += seg;
        }
        xs[xs.len() - 1]
    }

    pub fn percentiles(&self) -> [f64; 5] {
        PERCENTILE_LEVELS.map(|p| self.quantile(p))
    }
}

pub const PERCENTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// Type-7 sample quantile of sorted data.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted_finite(draws: &[f64]) -> Result<Vec<f64>> {
    if draws.len() < 20 {
        return Err(Error::Length { needed: 20, got: draws.len() });
    }
    if !draws.iter().all(|x| x.is_finite()) {
        return Err(Error::DegenerateSample("draws contain non-finite values".into()));
    }
    let mut s = draws.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// 5th, 25th, 50th, 75th and 95th sample percentiles (type 7).
pub fn percentiles(draws: &[f64]) -> Result<[f64; 5]> {
    let s = sorted_finite(draws)?;
    Ok(PERCENTILE_LEVELS.map(|p| quantile_sorted(&s, p)))
}

/// Silverman's rule `1.06 min(sd, IQR/1.34) n^(-1/5)`. When the IQR is zero
/// but the draws are not all equal the standard deviation is used alone.
pub fn silverman_bandwidth(draws: &[f64]) -> Result<f64> {
    let s = sorted_finite(draws)?;
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let sd = (s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 1.06 * spread * n.powf(-0.2);
    if !(h > 0.0) {
        return Err(Error::DegenerateSample("all draws are identical, bandwidth is zero".into()));
    }
    Ok(h)
}

/// Gaussian kernel density estimate on `abscissae`, renormalized to unit
/// trapezoid mass on that grid.
pub fn kde(draws: &[f64], abscissae: &[f64]) -> Result<PosteriorGrid> {
    let h = silverman_bandwidth(draws)?;
    kde_with_bandwidth(draws, abscissae, h)
}

pub fn kde_with_bandwidth(draws: &[f64], abscissae: &[f64], h: f64) -> Result<PosteriorGrid> {
    check_abscissae(abscissae)?;
    let norm = 1.0 / (draws.len() as f64 * h);
    let raw: Vec<f64> = abscissae
        .iter()
        .map(|&x| draws.iter().map(|&d| normal_pdf((x - d) / h)).sum::<f64>() * norm)
        .collect();
    PosteriorGrid::normalized(0, abscissae.to_vec(), raw)
        .map_err(|_| Error::DegenerateSample("kernel estimate has no mass on the grid".into()))
}

/// `sqrt(mean (est - ref)^2)` over the reference abscissae, with `est`
/// linearly interpolated onto them.
pub fn rmse(est: &PosteriorGrid, reference: &PosteriorGrid) -> Result<f64> {
    let p_hat = est.resample(&reference.abscissae);
    if p_hat.len() != reference.ordinates.len() {
        return Err(Error::Shape(format!("{} resampled ordinates for {}", p_hat.len(), reference.ordinates.len())));
    }
    let g = p_hat.len() as f64;
    Ok((p_hat.iter().zip(&reference.ordinates).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / g).sqrt())
}

/// RMSE between ordinates rescaled to sum to one over the reference grid,
/// i.e. between per-point probabilities rather than densities. On an evenly
/// spaced grid this is `rmse` times the spacing, up to endpoint weights.
pub fn rmse_mass(est: &PosteriorGrid, reference: &PosteriorGrid) -> Result<f64> {
    let p_hat = est.resample(&reference.abscissae);
    let (s_hat, s_ref) = (p_hat.iter().sum::<f64>(), reference.ordinates.iter().sum::<f64>());
    if !(s_hat > 0.0 && s_ref > 0.0) {
        return Err(Error::Support("an estimate has no mass on the reference grid".into()));
    }
    let g = p_hat.len() as f64;
    Ok((p_hat.iter().zip(&reference.ordinates).map(|(a, b)| (a / s_hat - b / s_ref).powi(2)).sum::<f64>() / g).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::linspace;

    fn flat(n: usize) -> PosteriorGrid {
        PosteriorGrid::new(0, linspace(0.0, 1.0, n), vec![1.0; n]).unwrap()
    }

    #[test]
    fn unnormalized_grid_is_rejected() {
        assert!(PosteriorGrid::new(0, vec![0.0, 1.0], vec![2.0, 2.0]).is_err());
        assert!(PosteriorGrid::new(0, vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(PosteriorGrid::new(0, vec![0.0, 1.0], vec![-1.0, 3.0]).is_err());
    }

    #[test]
    fn rmse_examples() {
        let r = flat(11);
        assert_eq!(rmse(&r, &r).unwrap(), 0.0);
        let shifted = PosteriorGrid { ordinates: vec![1.1; 11], ..r.clone() };
        assert!((rmse(&shifted, &r).unwrap() - 0.1).abs() < 1e-12);
        let a = PosteriorGrid { param_index: 0, abscissae: vec![0.0, 1.0], ordinates: vec![1.3, 1.4] };
        let b = PosteriorGrid { param_index: 0, abscissae: vec![0.0, 1.0], ordinates: vec![1.0, 1.0] };
        assert!((rmse(&a, &b).unwrap() - 0.353_553_390_593_273_8).abs() < 1e-12);
    }

    #[test]
    fn mass_rmse_compares_probabilities() {
        let r = flat(11);
        assert_eq!(rmse_mass(&r, &r).unwrap(), 0.0);
        let xs = linspace(0.0, 1.0, 11);
        let tilt = PosteriorGrid::normalized(0, xs, (0..11).map(|k| 1.0 + k as f64 / 10.0).collect()).unwrap();
        let probs: Vec<f64> = (0..11).map(|k| 1.0 + k as f64 / 10.0).collect();
        let total: f64 = probs.iter().sum();
        let want = (probs.iter().map(|p| (p / total - 1.0 / 11.0).powi(2)).sum::<f64>() / 11.0).sqrt();
        assert!((rmse_mass(&tilt, &r).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn percentile_examples() {
        let draws: Vec<f64> = (1..=100).map(f64::from).collect();
        let p = percentiles(&draws).unwrap();
        let want = [5.95, 25.75, 50.5, 75.25, 95.05];
        for (a, b) in p.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert_eq!(percentiles(&[2.5; 30]).unwrap(), [2.5; 5]);
        assert!(percentiles(&[1.0; 19]).is_err());
    }

    #[test]
    fn identical_draws_have_no_bandwidth() {
        assert!(matches!(kde(&[0.4; 50], &linspace(0.0, 1.0, 20)), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn grid_quantiles_of_a_uniform() {
        let u = flat(101);
        for p in [0.05, 0.5, 0.95] {
            assert!((u.quantile(p) - p).abs() < 1e-12);
        }
        assert!((u.mean() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn grid_quantiles_of_a_triangle() {
        let xs = linspace(0.0, 1.0, 3);
        let tri = PosteriorGrid::new(0, xs, vec![0.0, 2.0, 0.0]).unwrap();
        // F(x) = 2x^2 on [0, 1/2]
        assert!((tri.quantile(0.125) - 0.25).abs() < 1e-12);
        assert!((tri.quantile(0.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn interpolation_is_zero_outside() {
        let u = flat(5);
        assert_eq!(u.value_at(-0.1), 0.0);
        assert_eq!(u.value_at(1.1), 0.0);
        assert_eq!(u.value_at(1.0), 1.0);
        assert_eq!(u.value_at(0.3), 1.0);
    }
}
