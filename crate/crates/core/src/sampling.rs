//! Sample containers, synthetic data generators, and the moment estimators
//! that act directly on samples (mean, SCM, centering reduction).

use std::fmt;
use std::str::FromStr;

use rand_distr::{ChiSquared, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, SpdMatrix, SymEigen};
use crate::rng::{gaussian_matrix, standard_normal, stream_rng};
use crate::scalar::Scalar;

/// An ordered collection of `n ≥ 1` real p×q matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SampleSet<T: Scalar> {
    p: usize,
    q: usize,
    samples: Vec<Matrix<T>>,
}

impl<T: Scalar> SampleSet<T> {
    pub fn new(p: usize, q: usize, samples: Vec<Matrix<T>>) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::InvalidArgument("sample dimensions must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        if let Some((i, s)) = samples.iter().enumerate().find(|(_, s)| s.shape() != (p, q)) {
            return Err(Error::DimensionMismatch(format!(
                "sample {i} is {}x{}, expected {p}x{q}",
                s.rows(),
                s.cols()
            )));
        }
        Ok(Self { p, q, samples })
    }

    /// Infers `(p, q)` from the first sample.
    pub fn from_samples(samples: Vec<Matrix<T>>) -> Result<Self> {
        let (p, q) = samples.first().map(Matrix::shape).ok_or(Error::TooFewSamples { needed: 1, got: 0 })?;
        Self::new(p, q, samples)
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[Matrix<T>] {
        &self.samples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Matrix<T>> {
        self.samples.iter()
    }

    pub fn into_samples(self) -> Vec<Matrix<T>> {
        self.samples
    }

    /// `X_i − m` for every sample.
    pub fn shifted(&self, m: &Matrix<T>) -> Result<Self> {
        if m.shape() != (self.p, self.q) {
            return Err(Error::DimensionMismatch(format!(
                "mean is {}x{}, samples are {}x{}",
                m.rows(),
                m.cols(),
                self.p,
                self.q
            )));
        }
        Ok(Self { p: self.p, q: self.q, samples: self.samples.iter().map(|x| x.sub(m)).collect() })
    }

    /// `c_i X_i` for per-sample scalars.
    pub fn scaled_each(&self, factors: &[T]) -> Self {
        assert_eq!(factors.len(), self.n());
        let samples = self.samples.iter().zip(factors).map(|(x, &c)| x.scale(c)).collect();
        Self { p: self.p, q: self.q, samples }
    }

    /// Errors with [`Error::ZeroSample`] if any sample is identically zero.
    pub fn ensure_nonzero(&self) -> Result<()> {
        match self.samples.iter().position(|x| x.max_abs() == T::zero()) {
            Some(index) => Err(Error::ZeroSample { index }),
            None => Ok(()),
        }
    }
}

/// Parameters of `X ~ MN(M, P ⊗ Q)`.
#[derive(Clone, Debug)]
pub struct MatrixNormalParams<T: Scalar> {
    pub mean: Matrix<T>,
    pub row_cov: SpdMatrix<T>,
    pub col_cov: SpdMatrix<T>,
}

impl<T: Scalar> MatrixNormalParams<T> {
    pub fn new(mean: Matrix<T>, row_cov: SpdMatrix<T>, col_cov: SpdMatrix<T>) -> Result<Self> {
        if mean.shape() != (row_cov.dim(), col_cov.dim()) {
            return Err(Error::DimensionMismatch(format!(
                "mean {}x{} vs factors {} and {}",
                mean.rows(),
                mean.cols(),
                row_cov.dim(),
                col_cov.dim()
            )));
        }
        Ok(Self { mean, row_cov, col_cov })
    }

    /// Zero mean, identity factors.
    pub fn standard(p: usize, q: usize) -> Self {
        Self { mean: Matrix::zeros(p, q), row_cov: SpdMatrix::identity(p), col_cov: SpdMatrix::identity(q) }
    }
}

/// Radial law of an elliptical sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Gaussian,
    /// Multivariate Student-t with `nu` degrees of freedom.
    StudentT { nu: f64 },
    /// Real angular central elliptical: Gaussian direction projected to the unit sphere.
    Race,
}

impl fmt::Display for Tail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tail::Gaussian => f.write_str("gaussian"),
            Tail::StudentT { nu } => write!(f, "student-t({nu})"),
            Tail::Race => f.write_str("race"),
        }
    }
}

impl FromStr for Tail {
    type Err = Error;

    /// Accepts `gaussian`, `race`, `student-t(NU)` or `student-t:NU`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "gaussian" | "normal" => return Ok(Tail::Gaussian),
            "race" => return Ok(Tail::Race),
            _ => {}
        }
        let rest = s
            .strip_prefix("student-t")
            .or_else(|| s.strip_prefix("student_t"))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown tail tag `{s}`")))?;
        let nu_str = rest.trim_start_matches([':', '(']).trim_end_matches(')');
        let nu: f64 = nu_str
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad degrees of freedom in `{s}`")))?;
        let tail = Tail::StudentT { nu };
        tail.validate()?;
        Ok(tail)
    }
}

impl Tail {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Tail::StudentT { nu } if !(nu.is_finite() && nu > 0.0) => {
                Err(Error::InvalidArgument(format!("student-t needs nu > 0, got {nu}")))
            }
            _ => Ok(()),
        }
    }
}

/// Draws `n` samples `M + P^{1/2} Z Q^{1/2}`; sample `i` uses stream `i` of `seed`.
pub fn sample_matrix_normal<T: Scalar>(params: &MatrixNormalParams<T>, n: usize, seed: u64) -> Result<SampleSet<T>> {
    if n == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let (p, q) = params.mean.shape();
    let p_half = params.row_cov.sqrt();
    let q_half = params.col_cov.sqrt();
    let samples = (0..n)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let z: Matrix<T> = gaussian_matrix(p, q, &mut rng);
            params.mean.add(&p_half.matrix().matmul(&z).matmul(q_half.matrix()))
        })
        .collect();
    SampleSet::new(p, q, samples)
}

/// Draws `n` zero-mean elliptical p×q samples whose row-major vectorization
/// has shape matrix `shape` (dimension `pq`).
pub fn sample_elliptical<T: Scalar>(
    p: usize,
    q: usize,
    shape: &SpdMatrix<T>,
    tail: Tail,
    n: usize,
    seed: u64,
) -> Result<SampleSet<T>> {
    tail.validate()?;
    if n == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if shape.dim() != p * q {
        return Err(Error::DimensionMismatch(format!("shape has dim {}, need pq = {}", shape.dim(), p * q)));
    }
    let root = shape.sqrt();
    let chi = match tail {
        Tail::StudentT { nu } => Some(ChiSquared::new(nu).map_err(|e| Error::InvalidArgument(e.to_string()))?),
        _ => None,
    };
    let samples = (0..n)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let z: Vec<T> = (0..p * q).map(|_| standard_normal(&mut rng)).collect();
            let mut g = root.matrix().matvec(&z);
            match tail {
                Tail::Gaussian => {}
                Tail::StudentT { nu } => {
                    let w: f64 = chi.as_ref().expect("chi-squared set for student-t").sample(&mut rng);
                    let s = T::lit((nu / w).sqrt());
                    g.iter_mut().for_each(|v| *v = *v * s);
                }
                Tail::Race => {
                    let norm = g.iter().map(|&v| v * v).sum::<T>().sqrt();
                    g.iter_mut().for_each(|v| *v = *v / norm);
                }
            }
            Matrix::from_vec(p, q, g).expect("pq entries")
        })
        .collect();
    SampleSet::new(p, q, samples)
}

/// Entrywise arithmetic mean.
pub fn sample_mean<T: Scalar>(x: &SampleSet<T>) -> Matrix<T> {
    let mut acc = Matrix::zeros(x.p(), x.q());
    for s in x.iter() {
        acc.add_assign_scaled(s, T::one());
    }
    acc.scale(T::one() / T::lit(x.n() as f64))
}

/// Sample covariance of the vectorized samples, possibly rank-deficient.
#[derive(Clone, Debug)]
pub struct Scm<T: Scalar> {
    /// Symmetric PSD `pq × pq` matrix.
    pub matrix: Matrix<T>,
    pub rank: usize,
    pub full_rank: bool,
}

impl<T: Scalar> Scm<T> {
    /// The SCM as a validated SPD matrix, if it is full rank.
    pub fn to_spd(&self) -> Option<SpdMatrix<T>> {
        if self.full_rank {
            SpdMatrix::new(self.matrix.clone()).ok()
        } else {
            None
        }
    }
}

/// Numerical rank of a symmetric PSD matrix: eigenvalues above `rel_tol · λ_max`.
pub(crate) fn psd_rank<T: Scalar>(m: &Matrix<T>, rel_tol: T) -> usize {
    let eig = SymEigen::new(m);
    let top = eig.max();
    if !(top > T::zero()) {
        return 0;
    }
    eig.values.iter().filter(|&&l| l > rel_tol * top).count()
}

/// `(1/n) Σ vec(X_i − mean) vec(X_i − mean)^T`.
pub fn scm<T: Scalar>(x: &SampleSet<T>, mean: &Matrix<T>) -> Result<Scm<T>> {
    let d = x.p() * x.q();
    let centered = x.shifted(mean)?;
    let mut s = Matrix::zeros(d, d);
    for y in centered.iter() {
        let v = y.as_slice();
        for i in 0..d {
            for j in i..d {
                s[(i, j)] = s[(i, j)] + v[i] * v[j];
            }
        }
    }
    let inv_n = T::one() / T::lit(x.n() as f64);
    for i in 0..d {
        for j in i..d {
            let v = s[(i, j)] * inv_n;
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    let rank = psd_rank(&s, T::tol(1e-10));
    Ok(Scm { matrix: s, rank, full_rank: rank == d })
}

/// Replaces `n` samples by `n − 1` samples `Z` with
/// `(1/n) Σ_x ⟨A(x − x̄), x − x̄⟩ = (1/(n−1)) Σ_z ⟨A z, z⟩` for every symmetric `A`.
///
/// The sample axis is rotated by the Householder reflection sending `e_n` to
/// `1/√n`; the first `n − 1` rotated coordinates are orthogonal to the
/// constant vector and carry all of the centered data. The result is
/// deterministic but only defined up to this choice of basis.
pub fn center_reduce<T: Scalar>(x: &SampleSet<T>) -> Result<SampleSet<T>> {
    let n = x.n();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let nf = T::lit(n as f64);
    let u = T::one() / nf.sqrt();
    // v = e_n − u·1, H = I − 2 v v^T / (v^T v); H e_n = u·1.
    let mut v = vec![-u; n];
    v[n - 1] = T::one() - u;
    let vtv: T = v.iter().map(|&a| a * a).sum();
    let two_over = T::lit(2.0) / vtv;
    let basis_entry = |row: usize, col: usize| -> T {
        let delta = if row == col { T::one() } else { T::zero() };
        delta - two_over * v[row] * v[col]
    };
    let shrink = ((nf - T::one()) / nf).sqrt();
    let z = (0..n - 1)
        .map(|i| {
            let mut acc = Matrix::zeros(x.p(), x.q());
            for (j, xj) in x.iter().enumerate() {
                acc.add_assign_scaled(xj, basis_entry(j, i));
            }
            acc.scale(shrink)
        })
        .collect();
    SampleSet::new(x.p(), x.q(), z)
}
