//! Integrated likelihood over nuisance coordinates and its score.

use crate::auxiliary::model::{AuxiliaryModel, LoglikBatch};
use crate::auxiliary::score::fd_step;
use crate::error::{Error, Result};
use crate::optim::golden_section_max;
use crate::special::{linspace, log_sum_exp, trapezoid_weights};
use crate::Real;

/// Trapezoid points per nuisance axis.
pub const DEFAULT_NUISANCE_POINTS: usize = 30;

/// Tensor trapezoid rule over every coordinate except `j`, spanning the
/// model's box with `n_points` per axis. Returns full parameter vectors with
/// coordinate `j` left at zero, and the log weights.
fn nuisance_rule<F: Real, M: AuxiliaryModel<F> + ?Sized>(model: &M, j: usize, n_points: usize) -> (Vec<Vec<F>>, Vec<F>) {
    let mut points = vec![vec![F::zero(); model.dim()]];
    let mut log_w = vec![F::zero()];
    for k in (0..model.dim()).filter(|&k| k != j) {
        let nodes = linspace(model.lower()[k], model.upper()[k], n_points);
        let w: Vec<F> = trapezoid_weights(&nodes).into_iter().map(F::ln).collect();
        let mut next_p = Vec::with_capacity(points.len() * n_points);
        let mut next_w = Vec::with_capacity(points.len() * n_points);
        for (p, &lw) in points.iter().zip(&log_w) {
            for (&x, &wx) in nodes.iter().zip(&w) {
                let mut q = p.clone();
                q[k] = x;
                next_p.push(q);
                next_w.push(lw + wx);
            }
        }
        points = next_p;
        log_w = next_w;
    }
    (points, log_w)
}

fn with_coordinate<F: Real>(points: &[Vec<F>], j: usize, value: F) -> Vec<Vec<F>> {
    points
        .iter()
        .map(|p| {
            let mut q = p.clone();
            q[j] = value;
            q
        })
        .collect()
}

fn integrate_logs<F: Real>(ll: &[F], log_w: &[F]) -> Result<F> {
    let terms: Vec<F> = ll.iter().zip(log_w).map(|(&l, &w)| l + w).collect();
    let v = log_sum_exp(&terms);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Support("likelihood is -inf on the whole nuisance grid".into()))
    }
}

/// `log int exp(L_a(z; beta)) dbeta_{-j}` at `beta_j = phi_j`.
pub fn integrated_loglik<F: Real, M: AuxiliaryModel<F> + ?Sized>(
    model: &M,
    z: &[F],
    j: usize,
    phi_j: F,
    n_points: usize,
) -> Result<F> {
    let (points, log_w) = nuisance_rule(model, j, n_points);
    let ll: Vec<F> = with_coordinate(&points, j, phi_j).iter().map(|b| model.loglik(z, b)).collect();
    integrate_logs(&ll, &log_w)
}

/// `T^-1 dL(z; phi_j)/dphi_j` of the integrated log-likelihood.
pub fn marginal_score<F: Real, M: AuxiliaryModel<F> + ?Sized>(
    model: &M,
    z: &[F],
    j: usize,
    phi_j: F,
    n_points: usize,
) -> Result<F> {
    let t = F::from_usize_(z.len().max(1));
    let diff = |h: F| -> Option<F> {
        let up = integrated_loglik(model, z, j, phi_j + h, n_points).ok()?;
        let down = integrated_loglik(model, z, j, phi_j - h, n_points).ok()?;
        let d = (up - down) / (F::lit(2.0) * h * t);
        d.is_finite().then_some(d)
    };
    let h = fd_step(phi_j);
    diff(h)
        .or_else(|| diff(h / F::lit(10.0)))
        .ok_or_else(|| Error::Numerical(format!("marginal score for coordinate {j} is not finite")))
}

/// Maximiser of the integrated likelihood of `z` in coordinate `j`: the best
/// of `grid_points` equally spaced values, refined by golden section between
/// its neighbours.
pub fn marginal_mle<F: Real, M: AuxiliaryModel<F> + ?Sized>(
    model: &M,
    z: &[F],
    j: usize,
    n_points: usize,
    grid_points: usize,
) -> Result<F> {
    let (points, log_w) = nuisance_rule(model, j, n_points);
    let candidates = linspace(model.lower()[j], model.upper()[j], grid_points);
    let eval_at = |phi: F| -> F {
        let pts = with_coordinate(&points, j, phi);
        let batch = model.batch(pts, z.len());
        let mut ll = vec![F::zero(); batch.len()];
        batch.eval(z, &mut ll);
        integrate_logs(&ll, &log_w).unwrap_or(F::neg_infinity())
    };
    let values: Vec<F> = candidates.iter().map(|&c| eval_at(c)).collect();
    let (k, best) = values
        .iter()
        .enumerate()
        .fold((0, F::neg_infinity()), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    if !best.is_finite() {
        return Err(Error::Support(format!("integrated likelihood of coordinate {j} is -inf everywhere")));
    }
    let lo = candidates[k.saturating_sub(1)];
    let hi = candidates[(k + 1).min(grid_points - 1)];
    let tol = (model.upper()[j] - model.lower()[j]) * F::lit(1e-10);
    let (x, fx) = golden_section_max(eval_at, lo, hi, tol);
    Ok(if fx >= best { x } else { candidates[k] })
}

/// Marginal score at a fixed `phi_j`, prepared for many series.
pub struct MarginalScorer<'a, F, M: ?Sized> {
    model: &'a M,
    j: usize,
    phi_j: F,
    n_points: usize,
    step: F,
    log_w: Vec<F>,
    up: Box<dyn LoglikBatch<F> + 'a>,
    down: Box<dyn LoglikBatch<F> + 'a>,
}

impl<'a, F: Real, M: AuxiliaryModel<F> + ?Sized> MarginalScorer<'a, F, M> {
    pub fn new(model: &'a M, j: usize, phi_j: F, n_points: usize, len: usize) -> Self {
        let (points, log_w) = nuisance_rule(model, j, n_points);
        let step = fd_step(phi_j);
        let up = model.batch(with_coordinate(&points, j, phi_j + step), len);
        let down = model.batch(with_coordinate(&points, j, phi_j - step), len);
        Self { model, j, phi_j, n_points, step, log_w, up, down }
    }

    pub fn coordinate(&self) -> usize {
        self.j
    }

    pub fn phi_j(&self) -> F {
        self.phi_j
    }

    pub fn eval(&self, z: &[F]) -> Result<F> {
        let t = F::from_usize_(z.len().max(1));
        let mut ll = vec![F::zero(); self.log_w.len()];
        self.up.eval(z, &mut ll);
        let up = integrate_logs(&ll, &self.log_w);
        self.down.eval(z, &mut ll);
        let down = integrate_logs(&ll, &self.log_w);
        if let (Ok(u), Ok(d)) = (up, down) {
            let s = (u - d) / (F::lit(2.0) * self.step * t);
            if s.is_finite() {
                return Ok(s);
            }
        }
        let h = self.step / F::lit(10.0);
        let u = integrated_loglik(self.model, z, self.j, self.phi_j + h, self.n_points);
        let d = integrated_loglik(self.model, z, self.j, self.phi_j - h, self.n_points);
        match (u, d) {
            (Ok(u), Ok(d)) if ((u - d) / h).is_finite() => Ok((u - d) / (F::lit(2.0) * h * t)),
            _ => Err(Error::Numerical(format!("marginal score for coordinate {} is not finite", self.j))),
        }
    }
}
