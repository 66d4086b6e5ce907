//! Dense symmetric / SPD linear algebra for small-to-moderate dimensions.

pub mod backend;
mod cholesky;
mod eigen;
mod matrix;
mod spd;

pub use backend::Dense;
pub use cholesky::Cholesky;
pub use eigen::SymEigen;
pub use matrix::Matrix;
pub(crate) use matrix::dot;
pub use spd::{geodesic, geodesic_point, kron, logdet, spd_power, spectral_norm, GeodesicPoint, SpdMatrix};
