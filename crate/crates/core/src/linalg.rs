//! Small dense square matrices and a cyclic Jacobi eigensolver for the
//! symmetric case.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds from rows; all rows must have the same length as the row count.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("matrix", "must be square"));
        }
        Ok(Self {
            n,
            data: rows.concat(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.n.max(1)).map(<[T]>::to_vec).collect()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, k: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&v| v * k).collect(),
        }
    }

    /// Fails with the worst offending pair when `|a_ij − a_ji| > tol`.
    pub fn check_symmetric(&self, tol: T) -> Result<()> {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let gap = (self.get(i, j) - self.get(j, i)).abs();
                if gap > tol || gap.is_nan() {
                    return Err(Error::Asymmetric {
                        row: i,
                        col: j,
                        gap: gap.to_f64().unwrap_or(f64::NAN),
                    });
                }
            }
        }
        Ok(())
    }

    fn off_diagonal_norm(&self) -> T {
        let mut s = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    let v = self.get(i, j);
                    s = s + v * v;
                }
            }
        }
        s.sqrt()
    }
}

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
///
/// Sweeps until the off-diagonal Frobenius norm falls below
/// `tol · max(1, max|a_ij|)`. The input is assumed symmetric; only the upper
/// triangle drives the rotations.
pub fn jacobi_eigenvalues<T: Scalar>(matrix: &Matrix<T>, tol: T) -> Vec<T> {
    let n = matrix.dim();
    let mut a = matrix.clone();
    let scale = a.max_abs().max(T::one());
    let two = T::lit(2.0);

    for _ in 0..MAX_SWEEPS {
        if a.off_diagonal_norm() <= tol * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == T::zero() {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                a.set(p, q, T::zero());
                a.set(q, p, T::zero());
            }
        }
    }

    let mut eigs: Vec<T> = (0..n).map(|i| a.get(i, i)).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    eigs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_zero() {
        let e = jacobi_eigenvalues(&Matrix::<f64>::identity(3), 1e-14);
        assert_eq!(e, vec![1.0, 1.0, 1.0]);
        let e = jacobi_eigenvalues(&Matrix::<f64>::zeros(4), 1e-14);
        assert_eq!(e, vec![0.0; 4]);
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3
        let m = Matrix::from_rows(&[vec![2.0_f64, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = jacobi_eigenvalues(&m, 1e-14);
        assert!((e[0] - 1.0).abs() < 1e-14 && (e[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn tridiagonal_known_spectrum() {
        // eigenvalues of tridiag(-1, 2, -1) of order n: 2 - 2cos(kπ/(n+1))
        let n = 7;
        let m = Matrix::from_fn(n, |i, j| match i.abs_diff(j) {
            0 => 2.0_f64,
            1 => -1.0,
            _ => 0.0,
        });
        let e = jacobi_eigenvalues(&m, 1e-14);
        for (k, ek) in e.iter().enumerate() {
            let exact =
                2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((ek - exact).abs() < 1e-12, "{ek} vs {exact}");
        }
    }

    #[test]
    fn symmetry_check() {
        let m = Matrix::from_rows(&[vec![1.0_f64, 2.0], vec![2.5, 1.0]]).unwrap();
        assert!(matches!(
            m.check_symmetric(1e-12),
            Err(Error::Asymmetric { row: 0, col: 1, .. })
        ));
        assert!(Matrix::from_rows(&[vec![1.0_f64, 2.0]]).is_err());
    }
}
