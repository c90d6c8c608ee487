//! Dense LU with partial pivoting and the first buckling-type eigenvalue.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::assembly::{bending_matrix, tensor_block, GramTable, LinearSystem};
use crate::error::{Error, Result};

/// Relative pivot threshold below which a solve is reported as near-singular.
pub const NEAR_SINGULAR_RTOL: f64 = 1e-13;

pub const LAMBDA_RTOL: f64 = 1e-10;
pub const LAMBDA_MAX_ITER: usize = 10_000;

/// `PA = LU` stored in place, unit lower triangle implicit.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    lu: DMatrix<f64>,
    /// Row `i` of `PA` is row `perm[i]` of `A`.
    perm: Vec<usize>,
    pivot_min: f64,
}

impl LuFactorization {
    pub fn new(mut a: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "LU of non-square {}x{} matrix",
                n,
                a.ncols()
            )));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut pivot_min = f64::INFINITY;
        let data = a.as_mut_slice();
        for k in 0..n {
            let col_k = k * n;
            let (mut p, mut best) = (k, data[col_k + k].abs());
            for i in k + 1..n {
                let v = data[col_k + i].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::Singular { column: k });
            }
            if p != k {
                for j in 0..n {
                    data.swap(j * n + k, j * n + p);
                }
                perm.swap(k, p);
            }
            pivot_min = pivot_min.min(best);
            let pivot = data[col_k + k];
            for i in k + 1..n {
                data[col_k + i] /= pivot;
            }
            let (head, tail) = data.split_at_mut((k + 1) * n);
            let lcol = &head[col_k + k + 1..col_k + n];
            for col in tail.chunks_exact_mut(n) {
                let akj = col[k];
                if akj != 0.0 {
                    for (x, l) in col[k + 1..].iter_mut().zip(lcol) {
                        *x -= l * akj;
                    }
                }
            }
        }
        if n == 0 {
            pivot_min = 0.0;
        }
        Ok(Self {
            lu: a,
            perm,
            pivot_min,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Smallest absolute pivot encountered.
    pub fn pivot_min(&self) -> f64 {
        self.pivot_min
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let lu = self.lu.as_slice();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for i in j + 1..n {
                    x[i] -= lu[j * n + i] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= lu[j * n + j];
            let xj = x[j];
            if xj != 0.0 {
                for i in 0..j {
                    x[i] -= lu[j * n + i] * xj;
                }
            }
        }
        DVector::from_vec(x)
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let lu = self.lu.as_slice();
        let mut w: Vec<f64> = b.iter().copied().collect();
        // U^T w = b
        for i in 0..n {
            let col = &lu[i * n..i * n + i];
            let s: f64 = col.iter().zip(&w[..i]).map(|(u, v)| u * v).sum();
            w[i] = (w[i] - s) / lu[i * n + i];
        }
        // L^T v = w
        for i in (0..n).rev() {
            let col = &lu[i * n + i + 1..(i + 1) * n];
            let s: f64 = col.iter().zip(&w[i + 1..]).map(|(l, v)| l * v).sum();
            w[i] -= s;
        }
        let mut x = DVector::zeros(n);
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
        x
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut inv = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            inv.set_column(j, &self.solve(&e));
        }
        inv
    }

    /// Hager's lower bound for `||A^{-1}||_1`.
    pub fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        let mut x = DVector::from_element(n, 1.0 / n as f64);
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            est = y.lp_norm(1);
            let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
            let z = self.solve_transpose(&xi);
            let (jmax, zmax) = z.iter().enumerate().fold((0, 0.0), |acc, (j, v)| {
                if v.abs() > acc.1 {
                    (j, v.abs())
                } else {
                    acc
                }
            });
            if zmax <= z.dot(&x) {
                break;
            }
            x = DVector::zeros(n);
            x[jmax] = 1.0;
        }
        est
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: DVector<f64>,
    /// `||A x - b||_2 / max(||b||_2, tiny)`.
    pub residual_norm: f64,
    pub pivot_min: f64,
    pub condition_estimate: Option<f64>,
}

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max)
}

pub fn relative_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let r = a * x - b;
    r.norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Factors and solves without the near-singularity check.
pub fn solve_unchecked(matrix: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<SolveReport> {
    if matrix.nrows() != rhs.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows, rhs has {} entries",
            matrix.nrows(),
            rhs.len()
        )));
    }
    let lu = LuFactorization::new(matrix.clone())?;
    let solution = lu.solve(rhs);
    let residual_norm = relative_residual(matrix, &solution, rhs);
    Ok(SolveReport {
        residual_norm,
        pivot_min: lu.pivot_min(),
        condition_estimate: Some(norm1(matrix) * lu.inverse_norm1_estimate()),
        solution,
    })
}

/// Solves `A x = b`; fails with [`Error::NearSingular`] when the smallest pivot drops
/// below `NEAR_SINGULAR_RTOL * max|A|`.
pub fn lu_solve(system: &LinearSystem) -> Result<SolveReport> {
    let report = solve_unchecked(&system.matrix, &system.rhs)?;
    let threshold = NEAR_SINGULAR_RTOL * system.matrix.amax();
    if report.pivot_min < threshold {
        return Err(Error::NearSingular {
            pivot_min: report.pivot_min,
            threshold,
        });
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct Lambda1Estimate {
    pub lambda1: f64,
    pub iterations: usize,
    pub eigenvector: DVector<f64>,
}

/// Smallest eigenvalue of `K v = lambda M v` by inverse iteration on `K^{-1} M`.
///
/// `K` must be symmetric positive definite and `M` symmetric positive semidefinite.
pub fn inverse_iteration(
    k: &DMatrix<f64>,
    m: &DMatrix<f64>,
    rtol: f64,
    max_iter: usize,
) -> Result<Lambda1Estimate> {
    let n = k.nrows();
    let lu = LuFactorization::new(k.clone())?;
    let mut v = DVector::from_element(n, 1.0);
    let mut lambda = f64::NAN;
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        let w = lu.solve(&(m * &v));
        let mw = m * &w;
        let mass = w.dot(&mw);
        if !(mass > 0.0) {
            return Err(Error::NoConvergence {
                iterations: it,
                change,
            });
        }
        let next = w.dot(&(k * &w)) / mass;
        v = w / mass.sqrt();
        if lambda.is_finite() {
            change = ((next - lambda) / next).abs();
            if change < rtol {
                return Ok(Lambda1Estimate {
                    lambda1: next,
                    iterations: it,
                    eigenvector: v,
                });
            }
        }
        lambda = next;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        change,
    })
}

/// First eigenvalue of the bending operator against `-u_xx`, in weak form
/// `a(v, w) = lambda (v_x, w_x)`.
pub fn estimate_lambda1(grams: &GramTable, sigma: f64) -> Result<Lambda1Estimate> {
    let k = bending_matrix(grams, sigma);
    let m = tensor_block(&grams.x11, &grams.y00);
    inverse_iteration(&k, &m, LAMBDA_RTOL, LAMBDA_MAX_ITER)
}

/// Full generalized spectrum of `K v = lambda M v` for symmetric `K` and SPD `M`,
/// ascending, by Cholesky reduction and a dense symmetric eigensolve.
pub fn dense_generalized_eigenvalues(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let chol = Cholesky::new(m.clone())
        .ok_or_else(|| Error::DimensionMismatch("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let left = l
        .solve_lower_triangular(k)
        .ok_or(Error::Singular { column: 0 })?;
    let reduced = l
        .solve_lower_triangular(&left.transpose())
        .ok_or(Error::Singular { column: 0 })?;
    let sym = (&reduced + reduced.transpose()) * 0.5;
    let mut values: Vec<f64> = SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PlateParameters;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn system(matrix: DMatrix<f64>, rhs: DVector<f64>) -> LinearSystem {
        LinearSystem {
            matrix,
            rhs,
            params: PlateParameters::default(),
        }
    }

    #[test]
    fn identity() {
        let mut b = DVector::zeros(5);
        b[0] = 1.0;
        let r = lu_solve(&system(DMatrix::identity(5, 5), b.clone())).unwrap();
        assert_eq!(r.solution, b);
        assert_eq!(r.residual_norm, 0.0);
    }

    #[test]
    fn two_by_two() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let r = lu_solve(&system(a, DVector::from_vec(vec![3.0, 4.0]))).unwrap();
        assert!((r.solution[0] - 1.0).abs() < 1e-15);
        assert!((r.solution[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 5.0, 2.0, 0.0, -2.0, 6.0]);
        let r = lu_solve(&system(a, DVector::zeros(3))).unwrap();
        assert!(r.solution.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pivoting_needed() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 1.0]);
        let r = lu_solve(&system(a, DVector::from_vec(vec![2.0, 3.0]))).unwrap();
        assert!((r.solution[0] - 1.0).abs() < 1e-15);
        assert!((r.solution[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_and_near_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            lu_solve(&system(a, DVector::from_vec(vec![1.0, 1.0]))),
            Err(Error::Singular { .. })
        ));
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 + 1e-15]);
        assert!(matches!(
            lu_solve(&system(a, DVector::from_vec(vec![1.0, 1.0]))),
            Err(Error::NearSingular { .. })
        ));
    }

    #[test]
    fn transpose_solve_and_condition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_fn(12, 12, |i, j| {
            rng.gen_range(-1.0..1.0) + if i == j { 6.0 } else { 0.0 }
        });
        let lu = LuFactorization::new(a.clone()).unwrap();
        let b = DVector::from_fn(12, |i, _| i as f64 - 3.0);
        let x = lu.solve_transpose(&b);
        assert!((a.transpose() * x - &b).norm() < 1e-12);
        let inv = lu.inverse();
        let exact = norm1(&inv);
        let est = lu.inverse_norm1_estimate();
        assert!(est <= exact * (1.0 + 1e-12) && est >= 0.3 * exact);
    }

    #[test]
    fn random_spd_backward_stable_and_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let n = 40;
            let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let a = &b * b.transpose() + DMatrix::identity(n, n) * n as f64;
            let rhs = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let r = lu_solve(&system(a.clone(), rhs.clone())).unwrap();
            assert!(r.residual_norm < 1e-12);
            let scaled = lu_solve(&system(a, &rhs * 3.5)).unwrap();
            let diff = (&scaled.solution - &r.solution * 3.5).norm() / (r.solution.norm() * 3.5);
            assert!(diff < 1e-12);
        }
    }

    #[test]
    fn inverse_iteration_diagonal() {
        let k = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 8.0, 20.0]));
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 1.0]));
        let est = inverse_iteration(&k, &m, 1e-12, 1000).unwrap();
        assert!((est.lambda1 - 3.0).abs() < 1e-10);
        let dense = dense_generalized_eigenvalues(&k, &m).unwrap();
        assert!((dense[0] - 3.0).abs() < 1e-12);
        assert!((dense[1] - 4.0).abs() < 1e-12);
    }
}
