use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

/// Statistics of a series that are sufficient for a Gaussian AR(1):
/// interior sum and sum of squares, lag-one cross products, and the
/// endpoint terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats5<F> {
    pub s: [F; 5],
}

impl<F: Real> SummaryStats5<F> {
    pub fn as_slice(&self) -> &[F] {
        &self.s
    }
}

pub fn ar1_summary_stats<F: Real>(y: &[F]) -> Result<SummaryStats5<F>> {
    let n = y.len();
    if n < 3 {
        return Err(Error::Length { needed: 3, got: n });
    }
    let interior = &y[1..n - 1];
    let s1 = interior.iter().copied().sum::<F>();
    let s2 = interior.iter().map(|&v| v * v).sum::<F>();
    let s3 = y.windows(2).map(|w| w[0] * w[1]).sum::<F>();
    let (first, last) = (y[0], y[n - 1]);
    Ok(SummaryStats5 { s: [s1, s2, s3, first + last, first * first + last * last] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_computed_examples() {
        assert_eq!(ar1_summary_stats(&[1.0, 1.0, 1.0, 1.0]).unwrap().s, [2.0, 2.0, 3.0, 2.0, 2.0]);
        assert_eq!(ar1_summary_stats(&[0.0f64; 7]).unwrap().s, [0.0; 5]);
        assert_eq!(ar1_summary_stats(&[1.0, 2.0, 3.0]).unwrap().s, [2.0, 4.0, 8.0, 4.0, 10.0]);
    }

    #[test]
    fn short_series_rejected() {
        assert!(matches!(ar1_summary_stats(&[1.0f64, 2.0]), Err(Error::Length { needed: 3, got: 2 })));
    }

    #[test]
    fn works_in_single_precision() {
        assert_eq!(ar1_summary_stats(&[1.0f32, 2.0, 3.0]).unwrap().s, [2.0, 4.0, 8.0, 4.0, 10.0]);
    }

    proptest! {
        #[test]
        fn scaling_covariance(y in prop::collection::vec(-10.0f64..10.0, 3..40), k in -5.0f64..5.0) {
            let base = ar1_summary_stats(&y).unwrap().s;
            let scaled: Vec<f64> = y.iter().map(|v| k * v).collect();
            let got = ar1_summary_stats(&scaled).unwrap().s;
            let powers = [1, 2, 2, 1, 2];
            for j in 0..5 {
                let want = base[j] * k.powi(powers[j]);
                prop_assert!((got[j] - want).abs() <= 1e-9 * (1.0 + want.abs()));
            }
            prop_assert!(base[1] >= 0.0);
        }
    }
}
