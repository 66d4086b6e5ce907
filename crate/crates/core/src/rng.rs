//! Seeded, platform-independent random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream
//! identified by `(seed, stream index)`, so sample `i` of a data set or start
//! `k` of a multistart run can be regenerated without replaying the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{Matrix, SpdMatrix};
use crate::scalar::Scalar;

/// ChaCha8 generator positioned on stream `stream` of key `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable seed for a labelled sub-experiment, e.g. `derive_seed(base, &[n, trial])`.
pub fn derive_seed(base: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(mix64(base), |acc, &l| mix64(acc ^ mix64(l)))
}

pub fn standard_normal<T: Scalar, R: rand::Rng + ?Sized>(rng: &mut R) -> T {
    let z: f64 = StandardNormal.sample(rng);
    T::lit(z)
}

pub fn gaussian_matrix<T: Scalar, R: rand::Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |_, _| standard_normal(rng))
}

/// `A^T A + eps I` with standard Gaussian `A`, spectrally normalized.
pub fn random_spd<T: Scalar, R: rand::Rng + ?Sized>(dim: usize, eps: T, rng: &mut R) -> SpdMatrix<T> {
    let a: Matrix<T> = gaussian_matrix(dim, dim, rng);
    let mut m = a.transpose().matmul(&a);
    for i in 0..dim {
        m[(i, i)] = m[(i, i)] + eps;
    }
    SpdMatrix::from_trusted(m).spectrally_normalized().0
}
