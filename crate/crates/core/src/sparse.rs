//! Compressed sparse row storage and the two SPD solve routes: a sparse
//! Cholesky factorization (faer) and Jacobi-preconditioned conjugate gradients.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Square CSR matrix with sorted column indices in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from raw parts; panics if the structure is inconsistent.
    pub fn from_parts(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(row_ptr.len(), n + 1);
        assert_eq!(col_idx.len(), values.len());
        assert_eq!(row_ptr[n], col_idx.len());
        debug_assert!((0..n).all(|r| col_idx[row_ptr[r]..row_ptr[r + 1]].windows(2).all(|w| w[0] < w[1])));
        CsrMatrix { n, row_ptr, col_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of one row.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *yr = cols.iter().zip(vals).map(|(&c, v)| v * x[c]).sum();
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.row(r).1.iter().sum()).collect()
    }

    /// Largest |a_ij - a_ji| relative to the largest |a_ij|.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for r in 0..self.n {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst / scale
    }

    /// ‖b − A x‖₂ / ‖b‖₂ (absolute norm when b = 0).
    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.n];
        self.mul_vec(x, &mut ax);
        let r = norm(ax.iter().zip(b).map(|(a, b)| b - a));
        let bn = norm(b.iter().copied());
        if bn > 0.0 {
            r / bn
        } else {
            r
        }
    }
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Linear solver backend for the reduced SPD system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// Supernodal sparse Cholesky (LLᵀ) with fill-reducing ordering.
    #[default]
    Cholesky,
    /// Jacobi-preconditioned conjugate gradients.
    ConjugateGradient,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Cholesky => "cholesky",
            SolverKind::ConjugateGradient => "conjugate-gradient",
        })
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cholesky" => Ok(SolverKind::Cholesky),
            "cg" | "conjugate-gradient" => Ok(SolverKind::ConjugateGradient),
            other => Err(format!("unknown solver '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveFailure {
    /// The factorization broke down (matrix not numerically SPD).
    NotPositiveDefinite,
    /// The iteration limit was reached.
    NotConverged { iterations: usize, residual: f64 },
}

/// Solves `A x = b` for symmetric positive definite `A` by sparse Cholesky.
pub fn solve_cholesky(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, SolveFailure> {
    let n = a.dim();
    // symmetric: the CSR arrays are also a valid CSC description
    let symbolic = SymbolicSparseColMat::<usize>::new_checked(n, n, a.row_ptr.clone(), None, a.col_idx.clone());
    let mat = SparseColMat::new(symbolic, a.values.clone());
    let llt = mat.sp_cholesky(Side::Lower).map_err(|_| SolveFailure::NotPositiveDefinite)?;
    let mut rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    llt.solve_in_place(rhs.as_mut());
    let x: Vec<f64> = (0..n).map(|i| rhs[(i, 0)]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SolveFailure::NotPositiveDefinite);
    }
    Ok(x)
}

/// Jacobi-preconditioned CG until ‖r‖ ≤ tol · ‖b‖.
pub fn solve_pcg(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize), SolveFailure> {
    let n = a.dim();
    let mut x = vec![0.0; n];
    let bn = norm(b.iter().copied());
    if bn == 0.0 {
        return Ok((x, 0));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { f64::NAN })
        .collect();
    if inv_diag.iter().any(|v| v.is_nan()) {
        return Err(SolveFailure::NotPositiveDefinite);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        a.mul_vec(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(SolveFailure::NotPositiveDefinite);
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(r.iter().copied()) <= tol * bn {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolveFailure::NotConverged {
        iterations: max_iter,
        residual: norm(r.iter().copied()) / bn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1D Dirichlet Laplacian tridiag(-1, 2, -1).
    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut row_ptr = vec![0];
        let (mut cols, mut vals) = (vec![], vec![]);
        for r in 0..n {
            if r > 0 {
                cols.push(r - 1);
                vals.push(-1.0);
            }
            cols.push(r);
            vals.push(2.0);
            if r + 1 < n {
                cols.push(r + 1);
                vals.push(-1.0);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix::from_parts(n, row_ptr, cols, vals)
    }

    #[test]
    fn both_routes_agree() {
        let a = laplacian_1d(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let x1 = solve_cholesky(&a, &b).unwrap();
        let (x2, _) = solve_pcg(&a, &b, 1e-12, 500).unwrap();
        assert!(a.relative_residual(&x1, &b) < 1e-13);
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let a = CsrMatrix::from_parts(2, vec![0, 2, 4], vec![0, 1, 0, 1], vec![1.0, 2.0, 2.0, 1.0]);
        assert_eq!(solve_cholesky(&a, &[1.0, 1.0]), Err(SolveFailure::NotPositiveDefinite));
    }

    #[test]
    fn cg_iteration_limit() {
        let a = laplacian_1d(200);
        let b = vec![1.0; 200];
        assert!(matches!(solve_pcg(&a, &b, 1e-14, 3), Err(SolveFailure::NotConverged { iterations: 3, .. })));
    }
}
