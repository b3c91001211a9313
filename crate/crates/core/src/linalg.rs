//! Small dense symmetric linear algebra: Cholesky factorization and a
//! cyclic Jacobi eigensolver. Matrices here are covariate-model sized
//! (hundreds of rows at most), so simple O(p^3) routines are plenty and
//! keep the crate free of native BLAS/LAPACK linkage.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub struct Cholesky {
    l: Array2<f64>,
}

impl Cholesky {
    pub fn new(a: ArrayView2<'_, f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::invalid("cholesky requires a square matrix"));
        }
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::numerical(format!(
                    "matrix is not positive definite: pivot {d:.3e} at index {j}"
                )));
            }
            let dj = d.sqrt();
            l[(j, j)] = dj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / dj;
            }
        }
        Ok(Cholesky { l })
    }

    /// Pivots of the factorization (squares of the diagonal of L).
    /// The lower-triangular factor L with A = L Lᵀ.
    pub fn factor(&self) -> &Array2<f64> {
        &self.l
    }

    pub fn pivots(&self) -> Vec<f64> {
        (0..self.l.nrows()).map(|i| self.l[(i, i)] * self.l[(i, i)]).collect()
    }

    /// Ratio of largest to smallest pivot; a cheap conditioning estimate.
    pub fn pivot_ratio(&self) -> f64 {
        let p = self.pivots();
        let max = p.iter().cloned().fold(f64::MIN, f64::max);
        let min = p.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    }

    /// Solve A x = b.
    pub fn solve(&self, b: ArrayView1<'_, f64>) -> Array1<f64> {
        let n = self.l.nrows();
        let mut x = b.to_owned();
        // forward: L y = b
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[(i, k)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        // backward: L^T x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    /// Solve A X = B column by column.
    pub fn solve_mat(&self, b: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::<f64>::zeros(b.raw_dim());
        for (j, col) in b.columns().into_iter().enumerate() {
            out.column_mut(j).assign(&self.solve(col));
        }
        out
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues (ascending) and the matching orthonormal columns.
pub fn sym_eigen(a: ArrayView2<'_, f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::invalid("eigensolver requires a square matrix"));
    }
    let mut m = a.to_owned();
    let mut v = Array2::<f64>::eye(n);
    let off = |m: &Array2<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += m[(i, j)] * m[(i, j)];
            }
        }
        s.sqrt()
    };
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(1e-300, f64::max);
    let tol = 1e-14 * scale.max(off(&m));
    for _sweep in 0..100 {
        if off(&m) <= tol {
            let mut vals: Vec<(f64, usize)> =
                (0..n).map(|i| (m[(i, i)], i)).collect();
            vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let mut vecs = Array2::<f64>::zeros((n, n));
            for (dst, &(_, src)) in vals.iter().enumerate() {
                vecs.column_mut(dst).assign(&v.column(src));
            }
            return Ok((vals.into_iter().map(|(x, _)| x).collect(), vecs));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
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
    Err(Error::numerical("jacobi eigensolver did not converge in 100 sweeps"))
}

/// Solve the symmetric system G x = b, falling back to an eigen-based
/// pseudoinverse when G is (numerically) singular. The second return value
/// reports whether the fallback was taken.
pub fn solve_sym(g: ArrayView2<'_, f64>, b: ArrayView1<'_, f64>) -> Result<(Array1<f64>, bool)> {
    match Cholesky::new(g) {
        Ok(ch) => Ok((ch.solve(b), false)),
        Err(_) => {
            let (vals, vecs) = sym_eigen(g)?;
            let vmax = vals.iter().cloned().fold(0.0f64, |a, x| a.max(x.abs()));
            let cut = 1e-12 * vmax.max(1e-300);
            let n = b.len();
            let mut x = Array1::<f64>::zeros(n);
            for (i, &lam) in vals.iter().enumerate() {
                if lam.abs() <= cut {
                    continue;
                }
                let u = vecs.column(i);
                let proj = u.dot(&b) / lam;
                for k in 0..n {
                    x[k] += proj * u[k];
                }
            }
            Ok((x, true))
        }
    }
}
