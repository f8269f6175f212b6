//! Derivative-free minimizers.

use crate::Real;

#[derive(Debug, Clone)]
pub struct NelderMeadOptions<F> {
    pub reflection: F,
    pub expansion: F,
    pub contraction: F,
    pub shrink: F,
    /// Converged once every vertex is within this distance of the best one...
    pub diameter_tol: F,
    /// ...and the objective spread across the simplex is below this.
    pub spread_tol: F,
    pub max_evals: usize,
}

impl<F: Real> Default for NelderMeadOptions<F> {
    fn default() -> Self {
        Self {
            reflection: F::one(),
            expansion: F::lit(2.0),
            contraction: F::lit(0.5),
            shrink: F::lit(0.5),
            diameter_tol: F::tol(1e-8),
            spread_tol: F::tol(1e-10),
            max_evals: 20_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum<F> {
    pub x: Vec<F>,
    pub value: F,
    pub evals: usize,
    pub converged: bool,
}

/// Minimizes `f` starting from `start` with an axis-aligned initial simplex
/// of edge lengths `step`.
pub fn nelder_mead<F: Real, G: FnMut(&[F]) -> F>(
    mut f: G,
    start: &[F],
    step: &[F],
    opts: &NelderMeadOptions<F>,
) -> Minimum<F> {
    let n = start.len();
    let mut evals = 0usize;
    let mut eval = |x: &[F], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() { F::infinity() } else { v }
    };

    let mut simplex: Vec<Vec<F>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for j in 0..n {
        let mut x = start.to_vec();
        x[j] = x[j] + step[j];
        simplex.push(x);
    }
    let mut values: Vec<F> = simplex.iter().map(|x| eval(x, &mut evals)).collect();
    let mut converged = false;

    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp_(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = &simplex[0];
        let diameter = simplex[1..]
            .iter()
            .map(|x| x.iter().zip(best).map(|(&a, &b)| (a - b) * (a - b)).sum::<F>().sqrt())
            .fold(F::zero(), F::max);
        let spread = (values[n] - values[0]).abs();
        if diameter < opts.diameter_tol && (spread < opts.spread_tol || !values[0].is_finite()) {
            converged = values[0].is_finite();
            break;
        }

        let mut centroid = vec![F::zero(); n];
        for x in &simplex[..n] {
            for (c, &xi) in centroid.iter_mut().zip(x) {
                *c = *c + xi;
            }
        }
        let nf = F::from_usize_(n);
        centroid.iter_mut().for_each(|c| *c = *c / nf);
        let towards = |from: &[F], coef: F| -> Vec<F> {
            centroid.iter().zip(from).map(|(&c, &x)| c + coef * (x - c)).collect()
        };

        let reflected = towards(&simplex[n], -opts.reflection);
        let fr = eval(&reflected, &mut evals);
        if fr < values[0] {
            let expanded = towards(&reflected, opts.expansion);
            let fe = eval(&expanded, &mut evals);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc_target) = if fr < values[n] {
            (towards(&reflected, opts.contraction), fr)
        } else {
            (towards(&simplex[n], opts.contraction), values[n])
        };
        let fc = eval(&contracted, &mut evals);
        if fc < fc_target || (fc == fc_target && fc.is_finite()) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            let shrunk: Vec<F> = best
                .iter()
                .zip(&simplex[i])
                .map(|(&b, &x)| b + opts.shrink * (x - b))
                .collect();
            values[i] = eval(&shrunk, &mut evals);
            simplex[i] = shrunk;
        }
    }

    let (i_best, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp_(b.1))
        .unwrap();
    Minimum { x: simplex[i_best].clone(), value: values[i_best], evals, converged }
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_max<F: Real, G: FnMut(F) -> F>(mut f: G, mut lo: F, mut hi: F, tol: F) -> (F, F) {
    let inv_phi = F::lit(0.618_033_988_749_894_8);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 > f2 { (x1, f1) } else { (x2, f2) }
}

trait TotalCmp {
    fn total_cmp_(&self, other: &Self) -> std::cmp::Ordering;
}

impl<F: Real> TotalCmp for F {
    fn total_cmp_(&self, other: &Self) -> std::cmp::Ordering {
        self.partial_cmp(other).unwrap_or_else(|| {
            // NaN sorts last
            match (self.is_nan(), other.is_nan()) {
                (true, false) => std::cmp::Ordering::Greater,
                (false, true) => std::cmp::Ordering::Less,
                _ => std::cmp::Ordering::Equal,
            }
        })
    }
}
