use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Real;

/// A coordinate referenced by a joint constraint: either a free parameter
/// of the prior or a value held fixed outside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Slot<F> {
    Free(usize),
    Fixed(F),
}

impl<F: Real> Slot<F> {
    fn value(&self, phi: &[F]) -> F {
        match *self {
            Slot::Free(i) => phi[i],
            Slot::Fixed(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum JointConstraint<F> {
    /// `2 delta >= sigma_v^2`.
    Feller { delta: Slot<F>, sigma_v: Slot<F> },
}

impl<F: Real> JointConstraint<F> {
    pub fn holds(&self, phi: &[F]) -> bool {
        match self {
            JointConstraint::Feller { delta, sigma_v } => {
                let s = sigma_v.value(phi);
                F::lit(2.0) * delta.value(phi) >= s * s
            }
        }
    }

    fn restricted(&self, unknown: &[usize], fixed: &[F]) -> Self {
        let remap = |slot: Slot<F>| match slot {
            Slot::Free(i) => match unknown.iter().position(|&u| u == i) {
                Some(k) => Slot::Free(k),
                None => Slot::Fixed(fixed[i]),
            },
            fixed @ Slot::Fixed(_) => fixed,
        };
        match *self {
            JointConstraint::Feller { delta, sigma_v } => {
                JointConstraint::Feller { delta: remap(delta), sigma_v: remap(sigma_v) }
            }
        }
    }
}

/// Uniform prior on a box, optionally cut by a joint constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformPrior<F> {
    pub lower: Vec<F>,
    pub upper: Vec<F>,
    pub constraint: Option<JointConstraint<F>>,
}

const MAX_TRIALS: u64 = 10_000_000;

impl<F: Real> UniformPrior<F> {
    pub fn new(lower: Vec<F>, upper: Vec<F>, constraint: Option<JointConstraint<F>>) -> Result<Self> {
        let p = Self { lower, upper, constraint };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() || self.lower.is_empty() {
            return Err(Error::Config("prior bounds must be non-empty and of equal length".into()));
        }
        for (j, (l, u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(l < u) || !l.is_finite() || !u.is_finite() {
                return Err(Error::Config(format!("prior bound {j}: need lower < upper, got [{l}, {u}]")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, phi: &[F]) -> bool {
        phi.len() == self.dim()
            && phi.iter().zip(&self.lower).zip(&self.upper).all(|((x, l), u)| x >= l && x <= u)
            && self.constraint.as_ref().is_none_or(|c| c.holds(phi))
    }

    pub fn center(&self) -> Vec<F> {
        self.lower.iter().zip(&self.upper).map(|(&l, &u)| (l + u) / F::lit(2.0)).collect()
    }

    pub fn widths(&self) -> Vec<F> {
        self.lower.iter().zip(&self.upper).map(|(&l, &u)| u - l).collect()
    }

    /// Rejection-samples the box until the joint constraint holds.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<F>> {
        for _ in 0..MAX_TRIALS {
            let phi: Vec<F> = self
                .lower
                .iter()
                .zip(&self.upper)
                .map(|(&l, &u)| l + (u - l) * F::lit(rng.random::<f64>()))
                .collect();
            if self.constraint.as_ref().is_none_or(|c| c.holds(&phi)) {
                return Ok(phi);
            }
        }
        Err(Error::DegeneratePrior { rate: 0.0, trials: MAX_TRIALS })
    }

    /// Fails when the admissible region carries less than `1e-6` of the box.
    /// Stops early once enough acceptances have been seen.
    pub fn check_mass<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<()> {
        let Some(c) = &self.constraint else { return Ok(()) };
        let needed = (MAX_TRIALS as f64 * 1e-6) as u64;
        let mut hits = 0u64;
        for trial in 1..=MAX_TRIALS {
            let phi: Vec<F> = self
                .lower
                .iter()
                .zip(&self.upper)
                .map(|(&l, &u)| l + (u - l) * F::lit(rng.random::<f64>()))
                .collect();
            if c.holds(&phi) {
                hits += 1;
                if hits >= needed {
                    return Ok(());
                }
            }
            if trial == MAX_TRIALS {
                break;
            }
        }
        Err(Error::DegeneratePrior { rate: hits as f64 / MAX_TRIALS as f64, trials: MAX_TRIALS })
    }

    /// The prior on the `unknown` coordinates with all others held at `fixed`.
    pub fn restrict(&self, unknown: &[usize], fixed: &[F]) -> Self {
        Self {
            lower: unknown.iter().map(|&i| self.lower[i]).collect(),
            upper: unknown.iter().map(|&i| self.upper[i]).collect(),
            constraint: self.constraint.as_ref().map(|c| c.restricted(unknown, fixed)),
        }
    }

    /// Smallest box covering `draws`, widened by `inflate` of its width on each
    /// side and intersected with this prior's box.
    pub fn truncated_to(&self, draws: &[Vec<F>], inflate: F) -> Self {
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        for j in 0..self.dim() {
            let lo = draws.iter().map(|d| d[j]).fold(F::infinity(), F::min);
            let hi = draws.iter().map(|d| d[j]).fold(F::neg_infinity(), F::max);
            if !(lo.is_finite() && hi.is_finite()) {
                continue;
            }
            let pad = (hi - lo) * inflate;
            let (nlo, nhi) = (self.lower[j].max(lo - pad), self.upper[j].min(hi + pad));
            if nlo < nhi {
                lower[j] = nlo;
                upper[j] = nhi;
            }
        }
        Self { lower, upper, constraint: self.constraint }
    }
}

/// Default LG prior: `rho in (0, 0.99)`, `delta in (-0.5, 0.7)`, `sigma_v in (0.1, 2)`.
pub fn lg_default_prior<F: Real>() -> UniformPrior<F> {
    UniformPrior {
        lower: vec![F::zero(), F::lit(-0.5), F::lit(0.1)],
        upper: vec![F::lit(0.99), F::lit(0.7), F::lit(2.0)],
        constraint: None,
    }
}

/// Default Heston prior: `rho in (0.5, 0.999)`, `delta in (1e-4, 0.01)`,
/// `sigma_v in (0.01, 0.15)`, cut by the Feller condition.
pub fn heston_default_prior<F: Real>() -> UniformPrior<F> {
    UniformPrior {
        lower: vec![F::lit(0.5), F::lit(1e-4), F::lit(0.01)],
        upper: vec![F::lit(0.999), F::lit(0.01), F::lit(0.15)],
        constraint: Some(JointConstraint::Feller { delta: Slot::Free(1), sigma_v: Slot::Free(2) }),
    }
}
