//! Small dense linear algebra: enough for 3x3 weighting matrices and the
//! six-column least-squares fits used by the regression summary.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Real> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = F::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<F>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn diag(values: &[F]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<F>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, c: F) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * c).collect() }
    }

    /// `(A + A') / 2`.
    pub fn symmetrized(&self) -> Self {
        assert_eq!(self.rows, self.cols);
        let mut out = self.clone();
        let half = F::lit(0.5);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = (self[(i, j)] + self[(j, i)]) * half;
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> F {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(F::zero(), F::max)
    }

    /// `v' A v`.
    pub fn quad_form(&self, v: &[F]) -> F {
        self.matvec(v).iter().zip(v).map(|(&a, &b)| a * b).sum()
    }
}

impl<F> Index<(usize, usize)> for Matrix<F> {
    type Output = F;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &F {
        &self.data[i * self.cols + j]
    }
}

impl<F> IndexMut<(usize, usize)> for Matrix<F> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower Cholesky factor `L` with `A = L L'`.
pub fn cholesky<F: Real>(a: &Matrix<F>) -> Result<Matrix<F>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Shape(format!("cholesky of {}x{}", n, a.cols())));
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d = d - l[(j, k)] * l[(j, k)];
        }
        if !(d > F::zero()) || !d.is_finite() {
            return Err(Error::Conditioning(format!("pivot {j} is {d:e}")));
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
pub fn spd_inverse<F: Real>(a: &Matrix<F>) -> Result<Matrix<F>> {
    let n = a.rows();
    let l = cholesky(a)?;
    let mut inv = Matrix::zeros(n, n);
    for col in 0..n {
        let mut e = vec![F::zero(); n];
        e[col] = F::one();
        // forward: L y = e
        for i in 0..n {
            let mut s = e[i];
            for k in 0..i {
                s = s - l[(i, k)] * e[k];
            }
            e[i] = s / l[(i, i)];
        }
        // backward: L' x = y
        for i in (0..n).rev() {
            let mut s = e[i];
            for k in i + 1..n {
                s = s - l[(k, i)] * e[k];
            }
            e[i] = s / l[(i, i)];
        }
        for i in 0..n {
            inv[(i, col)] = e[i];
        }
    }
    Ok(inv.symmetrized())
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and the matrix whose columns are the eigenvectors.
pub fn sym_eigen<F: Real>(a: &Matrix<F>) -> (Vec<F>, Matrix<F>) {
    let n = a.rows();
    let mut m = a.symmetrized();
    let mut v = Matrix::identity(n);
    for _sweep in 0..100 {
        let off: F = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        let scale: F = (0..n).map(|i| m[(i, i)] * m[(i, i)]).sum::<F>() + F::min_positive_value();
        if off <= F::epsilon() * F::epsilon() * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == F::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (F::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + F::one()).sqrt());
                let c = F::one() / (t * t + F::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| m[(i, i)]).collect(), v)
}

/// Rebuilds `V diag(lambda) V'`.
pub fn from_eigen<F: Real>(values: &[F], vectors: &Matrix<F>) -> Matrix<F> {
    let n = values.len();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = F::zero();
            for k in 0..n {
                s = s + vectors[(i, k)] * values[k] * vectors[(j, k)];
            }
            out[(i, j)] = s;
        }
    }
    out.symmetrized()
}

/// Outcome of a least-squares solve.
#[derive(Debug, Clone)]
pub struct LstsqSolution<F> {
    pub coef: Vec<F>,
    /// True when the design was rank deficient and a ridge penalty was used.
    pub ridge: bool,
}

/// Minimizes `||X b - y||` by Householder QR on a column-scaled design.
/// Falls back to ridge regression with `ridge_penalty` when the design is
/// numerically rank deficient.
pub fn lstsq<F: Real>(x: &Matrix<F>, y: &[F], ridge_penalty: F) -> Result<LstsqSolution<F>> {
    let (m, n) = (x.rows(), x.cols());
    if y.len() != m {
        return Err(Error::Shape(format!("design has {m} rows, response {}", y.len())));
    }
    if m < n {
        return Err(Error::Shape(format!("{m} rows for {n} coefficients")));
    }
    let scales: Vec<F> = (0..n)
        .map(|j| {
            let s = (0..m).map(|i| x[(i, j)] * x[(i, j)]).sum::<F>().sqrt();
            if s > F::zero() { s } else { F::one() }
        })
        .collect();
    let mut a = x.clone();
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = a[(i, j)] / scales[j];
        }
    }
    let scaled = a.clone();
    let mut b = y.to_vec();
    let mut diag = vec![F::zero(); n];
    for k in 0..n {
        let norm = (k..m).map(|i| a[(i, k)] * a[(i, k)]).sum::<F>().sqrt();
        let alpha = if a[(k, k)] > F::zero() { -norm } else { norm };
        diag[k] = alpha;
        if norm == F::zero() {
            continue;
        }
        a[(k, k)] = a[(k, k)] - alpha;
        let vnorm2: F = (k..m).map(|i| a[(i, k)] * a[(i, k)]).sum();
        if vnorm2 == F::zero() {
            continue;
        }
        for j in k + 1..n {
            let dot: F = (k..m).map(|i| a[(i, k)] * a[(i, j)]).sum();
            let f = F::lit(2.0) * dot / vnorm2;
            for i in k..m {
                a[(i, j)] = a[(i, j)] - f * a[(i, k)];
            }
        }
        let dot: F = (k..m).map(|i| a[(i, k)] * b[i]).sum();
        let f = F::lit(2.0) * dot / vnorm2;
        for i in k..m {
            b[i] = b[i] - f * a[(i, k)];
        }
    }
    let max_diag = diag.iter().fold(F::zero(), |acc, d| acc.max(d.abs()));
    let rank_tol = max_diag * F::epsilon() * F::from_usize_(m.max(n)) * F::lit(16.0);
    if diag.iter().any(|d| d.abs() <= rank_tol) {
        let coef = ridge(&scaled, y, ridge_penalty)?;
        let coef = coef.iter().zip(&scales).map(|(&c, &s)| c / s).collect();
        return Ok(LstsqSolution { coef, ridge: true });
    }
    let mut coef = vec![F::zero(); n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in k + 1..n {
            s = s - a[(k, j)] * coef[j];
        }
        coef[k] = s / diag[k];
    }
    for j in 0..n {
        coef[j] = coef[j] / scales[j];
    }
    Ok(LstsqSolution { coef, ridge: false })
}

fn ridge<F: Real>(x: &Matrix<F>, y: &[F], penalty: F) -> Result<Vec<F>> {
    let xt = x.transpose();
    let mut xtx = xt.matmul(x);
    for i in 0..xtx.rows() {
        xtx[(i, i)] = xtx[(i, i)] + penalty;
    }
    let xty = xt.matvec(y);
    Ok(spd_inverse(&xtx)?.matvec(&xty))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spd3() -> Matrix<f64> {
        Matrix::from_rows(&[vec![4.0, 1.0, 0.5], vec![1.0, 3.0, 0.2], vec![0.5, 0.2, 2.0]])
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = spd3();
        let l = cholesky(&a).unwrap();
        assert!(l.matmul(&l.transpose()).max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(cholesky(&a), Err(Error::Conditioning(_))));
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = spd3();
        let inv = spd_inverse(&a).unwrap();
        assert!(inv.matmul(&a).max_abs_diff(&Matrix::identity(3)) < 1e-14);
    }

    #[test]
    fn jacobi_eigen_reconstructs() {
        let a = spd3();
        let (vals, vecs) = sym_eigen(&a);
        assert!(from_eigen(&vals, &vecs).max_abs_diff(&a) < 1e-12);
        let trace: f64 = vals.iter().sum();
        assert_relative_eq!(trace, 9.0, epsilon = 1e-12);
    }

    #[test]
    fn lstsq_recovers_exact_fit() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, i as f64, (i * i) as f64]).collect();
        let x = Matrix::from_rows(&rows);
        let y: Vec<f64> = (0..20).map(|i| 2.0 - 0.5 * i as f64 + 0.25 * (i * i) as f64).collect();
        let sol = lstsq(&x, &y, 1e-8).unwrap();
        assert!(!sol.ridge);
        for (c, e) in sol.coef.iter().zip([2.0, -0.5, 0.25]) {
            assert_relative_eq!(*c, e, epsilon = 1e-10);
        }
    }

    #[test]
    fn lstsq_falls_back_to_ridge_on_collinear_design() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64, 2.0 * i as f64]).collect();
        let x = Matrix::from_rows(&rows);
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let sol = lstsq(&x, &y, 1e-8).unwrap();
        assert!(sol.ridge);
        let fitted = x.matvec(&sol.coef);
        for (f, t) in fitted.iter().zip(&y) {
            assert!((f - t).abs() < 1e-5);
        }
    }
}
