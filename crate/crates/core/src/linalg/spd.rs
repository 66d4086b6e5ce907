use serde::{Deserialize, Serialize};

use super::cholesky::Cholesky;
use super::eigen::SymEigen;
use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Symmetric positive definite matrix.
///
/// Construction checks symmetry to `1e-12 * (1 + max|A_ij|)`, stores the
/// explicitly symmetrized matrix, and rejects anything whose smallest
/// eigenvalue is not above `1e-12` times its largest.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct SpdMatrix<T: Scalar> {
    inner: Matrix<T>,
}

impl<'de, T: Scalar> Deserialize<'de> for SpdMatrix<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(bound = "")]
        struct Raw<T: Scalar> {
            inner: Matrix<T>,
        }
        let raw = Raw::<T>::deserialize(d)?;
        SpdMatrix::new(raw.inner).map_err(serde::de::Error::custom)
    }
}

impl<T: Scalar> SpdMatrix<T> {
    pub fn new(a: Matrix<T>) -> Result<Self> {
        if !a.is_square() || a.rows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "SPD matrix must be square and non-empty, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if !a.is_finite() {
            return Err(Error::InvalidArgument("non-finite matrix entry".into()));
        }
        let asym = a.max_asymmetry();
        if asym > T::tol(1e-12) * (T::one() + a.max_abs()) {
            return Err(Error::NotSymmetric { asymmetry: asym.as_f64() });
        }
        let a = a.symmetrized();
        let eig = SymEigen::new(&a);
        let (lo, hi) = (eig.min(), eig.max());
        if !(hi > T::zero()) || lo <= T::tol(1e-12) * hi {
            let ratio = if hi > T::zero() { lo / hi } else { lo };
            return Err(Error::NotPositiveDefinite { ratio: ratio.as_f64() });
        }
        Ok(Self { inner: a })
    }

    /// Wraps a matrix known to be SPD by construction (symmetrizes it).
    pub(crate) fn from_trusted(a: Matrix<T>) -> Self {
        debug_assert!(a.is_square());
        Self { inner: a.symmetrized() }
    }

    pub fn identity(n: usize) -> Self {
        Self { inner: Matrix::identity(n) }
    }

    pub fn from_diag(diag: &[T]) -> Result<Self> {
        Self::new(Matrix::from_diag(diag))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix<T> {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.inner
    }

    pub fn eigen(&self) -> SymEigen<T> {
        SymEigen::new(&self.inner)
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        self.eigen().values
    }

    pub fn cholesky(&self) -> Result<Cholesky<T>> {
        Cholesky::new(&self.inner)
    }

    /// Natural log of the determinant via Cholesky.
    pub fn logdet(&self) -> Result<T> {
        Ok(self.cholesky()?.logdet())
    }

    /// Largest eigenvalue, i.e. the operator 2-norm.
    pub fn spectral_norm(&self) -> T {
        self.eigen().max()
    }

    pub fn condition_number(&self) -> T {
        let e = self.eigen();
        e.max() / e.min()
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(Self::from_trusted(self.cholesky()?.inverse()))
    }

    /// `A^t` through the eigendecomposition.
    pub fn power(&self, t: T) -> Self {
        if t == T::one() {
            return self.clone();
        }
        Self::from_trusted(self.eigen().reconstruct(|l| l.powf(t)))
    }

    pub fn sqrt(&self) -> Self {
        Self::from_trusted(self.eigen().reconstruct(|l| l.sqrt()))
    }

    /// `c * A` for `c > 0`.
    pub fn scaled(&self, c: T) -> Self {
        assert!(c > T::zero(), "SPD scaling requires a positive factor");
        Self { inner: self.inner.scale(c) }
    }

    /// Divides by the spectral norm so that `‖A‖₂ = 1`; returns the norm too.
    pub fn spectrally_normalized(&self) -> (Self, T) {
        let s = self.spectral_norm();
        (self.scaled(T::one() / s), s)
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self { inner: self.inner.kron(&other.inner) }
    }

    /// Relative Frobenius distance `‖A − B‖_F / ‖B‖_F`.
    pub fn relative_distance(&self, reference: &Self) -> T {
        self.inner.sub(&reference.inner).frobenius_norm() / reference.inner.frobenius_norm()
    }
}

/// A point on the (extended) geodesic between two SPD matrices.
#[derive(Clone, Debug)]
pub struct GeodesicPoint<T: Scalar> {
    pub t: T,
    pub value: SpdMatrix<T>,
}

/// `kron(a, b)`; eigenvalues are all pairwise products of the inputs'.
pub fn kron<T: Scalar>(a: &SpdMatrix<T>, b: &SpdMatrix<T>) -> SpdMatrix<T> {
    a.kron(b)
}

pub fn logdet<T: Scalar>(a: &SpdMatrix<T>) -> Result<T> {
    a.logdet()
}

pub fn spd_power<T: Scalar>(a: &SpdMatrix<T>, t: T) -> SpdMatrix<T> {
    a.power(t)
}

pub fn spectral_norm<T: Scalar>(a: &SpdMatrix<T>) -> T {
    a.spectral_norm()
}

/// `γ_t(P, R) = P^{1/2} (P^{-1/2} R P^{-1/2})^t P^{1/2}`.
///
/// Any real `t` is accepted; values outside `[0, 1]` follow the extended
/// geodesic.
pub fn geodesic<T: Scalar>(p: &SpdMatrix<T>, r: &SpdMatrix<T>, t: T) -> SpdMatrix<T> {
    assert_eq!(p.dim(), r.dim(), "geodesic endpoints must share a dimension");
    let eig = p.eigen();
    let half = eig.reconstruct(|l| l.sqrt());
    let inv_half = eig.reconstruct(|l| T::one() / l.sqrt());
    let middle = SpdMatrix::from_trusted(inv_half.matmul(r.matrix()).matmul(&inv_half));
    let moved = middle.power(t);
    SpdMatrix::from_trusted(half.matmul(moved.matrix()).matmul(&half))
}

pub fn geodesic_point<T: Scalar>(p: &SpdMatrix<T>, r: &SpdMatrix<T>, t: T) -> GeodesicPoint<T> {
    GeodesicPoint { t, value: geodesic(p, r, t) }
}
