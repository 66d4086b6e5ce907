use super::eigen::SymEigen;
use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lower-triangular Cholesky factor `A = L L^T`.
#[derive(Clone, Debug)]
pub struct Cholesky<T: Scalar> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        assert!(a.is_square());
        let n = a.rows();
        match T::cholesky_lower(n, a.as_slice()) {
            Some(l) => Ok(Self { l: Matrix::from_vec(n, n, l)? }),
            None => {
                let eig = SymEigen::new(a);
                Err(Error::NotPositiveDefinite { ratio: (eig.min() / eig.max().abs()).as_f64() })
            }
        }
    }

    pub fn factor(&self) -> &Matrix<T> {
        &self.l
    }

    pub fn logdet(&self) -> T {
        let two = T::lit(2.0);
        (0..self.l.rows()).map(|i| two * self.l[(i, i)].ln()).sum()
    }

    /// Solves `A x = b`.
    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s = s - self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// `A^{-1}`, symmetrized.
    pub fn inverse(&self) -> Matrix<T> {
        let n = self.l.rows();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            let col = self.solve_vec(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv.symmetrized()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logdet_and_inverse() {
        let a = Matrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let c = Cholesky::new(&a).unwrap();
        assert!((c.logdet() - 8.0f64.ln()).abs() < 1e-14);
        let prod = a.matmul(&c.inverse());
        assert!(prod.sub(&Matrix::identity(2)).max_abs() < 1e-14);
    }

    #[test]
    fn indefinite_rejected() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(Cholesky::new(&a), Err(Error::NotPositiveDefinite { .. })));
    }
}
