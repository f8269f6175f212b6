use crate::error::{Error, Result};
use crate::Real;

/// Augmented sigma points for (state, state noise, measurement noise).
///
/// Column 0 is the mean, columns `1..=3` are shifted up by `a_j` standard
/// deviations along dimension `j`, columns `4..=6` down by `b_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaSet<F> {
    pub points: [[F; 7]; 3],
    pub weights: [F; 7],
}

impl<F: Real> SigmaSet<F> {
    pub fn mean(&self, row: usize) -> F {
        (0..7).map(|i| self.weights[i] * self.points[row][i]).sum()
    }

    pub fn var(&self, row: usize) -> F {
        let m = self.mean(row);
        (0..7).map(|i| self.weights[i] * (self.points[row][i] - m) * (self.points[row][i] - m)).sum()
    }
}

/// Symmetric spread `a = b = sqrt(3)`, optimal for Gaussian dimensions.
pub fn gaussian_spread<F: Real>() -> [(F, F); 3] {
    let s = F::lit(3.0).sqrt();
    [(s, s); 3]
}

/// Builds the seven sigma points of a diagonal augmented covariance.
///
/// Dimension `j` contributes weights `1 / (a (a + b))` and `1 / (b (a + b))`
/// to its two offset points, which reproduces its mean and variance; the
/// centre point takes what is left. When `state_floor` is set the state row
/// is clipped from below, which breaks exact moment matching for that row.
pub fn make_sigma_points<F: Real>(
    mean: [F; 3],
    var: [F; 3],
    spread: [(F, F); 3],
    state_floor: Option<F>,
) -> Result<SigmaSet<F>> {
    let mut points = [[F::zero(); 7]; 3];
    let mut weights = [F::zero(); 7];
    let mut centre = F::one();
    for j in 0..3 {
        if !(var[j] >= F::zero()) {
            return Err(Error::Domain(format!("sigma-point variance {j} is {}", var[j])));
        }
        let (a, b) = spread[j];
        if !(a > F::zero() && b > F::zero()) {
            return Err(Error::Domain(format!("sigma-point spread {j} must be positive")));
        }
        weights[1 + j] = (a * (a + b)).recip();
        weights[4 + j] = (b * (a + b)).recip();
        centre = centre - weights[1 + j] - weights[4 + j];
    }
    weights[0] = centre;
    for (row, &m) in points.iter_mut().zip(&mean) {
        row.fill(m);
    }
    for j in 0..3 {
        let sd = var[j].sqrt();
        let (a, b) = spread[j];
        points[j][1 + j] = mean[j] + a * sd;
        points[j][4 + j] = mean[j] - b * sd;
    }
    if let Some(floor) = state_floor {
        for x in points[0].iter_mut() {
            *x = x.max(floor);
        }
    }
    Ok(SigmaSet { points, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gaussian_weights() {
        let s = make_sigma_points([1.0, 0.0, 0.0], [0.0, 1.0, 1.0], gaussian_spread::<f64>(), None).unwrap();
        assert!(s.weights[0].abs() < 1e-15);
        for w in &s.weights[1..] {
            assert!((w - 1.0 / 6.0).abs() < 1e-15);
        }
        assert!(s.points[0].iter().all(|&x| x == 1.0));
    }

    #[test]
    fn floor_clips_the_state_row() {
        let s = make_sigma_points([1e-6, 0.0, 0.0], [1.0, 1.0, 1.0], gaussian_spread::<f64>(), Some(1e-5)).unwrap();
        assert_eq!(s.points[0][4], 1e-5);
        assert!(s.points[0].iter().all(|&x| x >= 1e-5));
    }

    #[test]
    fn negative_variance_rejected() {
        assert!(make_sigma_points([0.0; 3], [1.0, -1.0, 1.0], gaussian_spread::<f64>(), None).is_err());
    }

    proptest! {
        #[test]
        fn moments_are_matched(
            mean in prop::array::uniform3(-10.0f64..10.0),
            var in prop::array::uniform3(0.0f64..5.0),
            a in prop::array::uniform3(0.5f64..3.0),
            b in prop::array::uniform3(0.5f64..3.0),
        ) {
            let spread = [(a[0], b[0]), (a[1], b[1]), (a[2], b[2])];
            let s = make_sigma_points(mean, var, spread, None).unwrap();
            prop_assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for j in 0..3 {
                prop_assert!((s.mean(j) - mean[j]).abs() < 1e-12);
                prop_assert!((s.var(j) - var[j]).abs() < 1e-12);
            }
        }
    }
}
