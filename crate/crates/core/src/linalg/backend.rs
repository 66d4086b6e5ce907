//! Dense factorizations delegated to nalgebra, per concrete scalar type.

use nalgebra::DMatrix;

/// Factorization kernels on row-major `n×n` buffers.
pub trait Dense: Sized {
    /// Eigenvalues (unsorted) and the matching eigenvectors as columns of a
    /// row-major matrix.
    fn sym_eigen(n: usize, data: &[Self]) -> (Vec<Self>, Vec<Self>);

    /// Row-major lower Cholesky factor, or `None` if the matrix is not
    /// numerically positive definite.
    fn cholesky_lower(n: usize, data: &[Self]) -> Option<Vec<Self>>;
}

fn row_major<T: nalgebra::Scalar + Copy>(m: &DMatrix<T>) -> Vec<T> {
    m.transpose().as_slice().to_vec()
}

macro_rules! dense_impl {
    ($t:ty) => {
        impl Dense for $t {
            fn sym_eigen(n: usize, data: &[Self]) -> (Vec<Self>, Vec<Self>) {
                let e = DMatrix::from_row_slice(n, n, data).symmetric_eigen();
                (e.eigenvalues.as_slice().to_vec(), row_major(&e.eigenvectors))
            }

            fn cholesky_lower(n: usize, data: &[Self]) -> Option<Vec<Self>> {
                DMatrix::from_row_slice(n, n, data).cholesky().map(|c| row_major(&c.l()))
            }
        }
    };
}

dense_impl!(f32);
dense_impl!(f64);
