//! Symmetric eigendecomposition.

use super::matrix::Matrix;
use crate::scalar::Scalar;

/// `A = V diag(values) V^T` with eigenvalues sorted ascending and
/// eigenvectors stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct SymEigen<T: Scalar> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Scalar> SymEigen<T> {
    /// Decomposes `(A + A^T) / 2`.
    pub fn new(a: &Matrix<T>) -> Self {
        assert!(a.is_square(), "eigendecomposition of a non-square matrix");
        let n = a.rows();
        let (raw, vecs) = T::sym_eigen(n, a.symmetrized().as_slice());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| raw[i].partial_cmp(&raw[j]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| raw[i]).collect();
        let vectors = Matrix::from_fn(n, n, |r, c| vecs[r * n + order[c]]);
        Self { values, vectors }
    }

    #[inline]
    pub fn min(&self) -> T {
        self.values.first().copied().unwrap_or_else(T::zero)
    }

    #[inline]
    pub fn max(&self) -> T {
        self.values.last().copied().unwrap_or_else(T::zero)
    }

    /// Rebuilds `V diag(f(λ)) V^T`.
    pub fn reconstruct(&self, f: impl Fn(T) -> T) -> Matrix<T> {
        let n = self.values.len();
        let fv: Vec<T> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = T::zero();
                for k in 0..n {
                    s = s + self.vectors[(i, k)] * fv[k] * self.vectors[(j, k)];
                }
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_input_is_sorted() {
        let e = SymEigen::new(&Matrix::from_diag(&[3.0, 1.0, 2.0]));
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = Matrix::from_rows(&[[2.0f64, 1.0], [1.0, 2.0]]).unwrap();
        let e = SymEigen::new(&a);
        assert!((e.values[0] - 1.0).abs() < 1e-15);
        assert!((e.values[1] - 3.0).abs() < 1e-15);
        let back = e.reconstruct(|l| l);
        assert!(back.sub(&a).max_abs() < 1e-14);
    }

    #[test]
    fn reconstructs_dense_matrix() {
        let a = Matrix::from_fn(6, 6, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let e = SymEigen::new(&a);
        assert!(e.reconstruct(|l| l).sub(&a).max_abs() < 1e-13);
        let vtv = e.vectors.transpose().matmul(&e.vectors);
        assert!(vtv.sub(&Matrix::identity(6)).max_abs() < 1e-13);
        // Hilbert-like matrices are badly conditioned; the smallest
        // eigenvalue must still come out positive.
        assert!(e.min() > 0.0);
    }
}
