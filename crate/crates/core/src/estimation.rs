//! Types shared by the Gaussian and robust flip-flop estimators, and the
//! iteration driver they both use.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Factor, Result};
use crate::linalg::{Matrix, SpdMatrix, SymEigen};
use crate::scalar::Scalar;

/// How the scale ambiguity `(P, Q) ~ (cP, Q/c)` is pinned down.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `‖P‖₂ = 1`; the Gaussian manifold.
    SpectralP,
    /// `‖P‖₂ = ‖Q‖₂ = 1`; the robust (scale-free) manifold.
    SpectralBoth,
    None,
}

/// A pair of Kronecker factors `(P, Q)` representing `P ⊗ Q`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct KroneckerPair<T: Scalar> {
    p_factor: SpdMatrix<T>,
    q_factor: SpdMatrix<T>,
    normalization: Normalization,
}

impl<T: Scalar> KroneckerPair<T> {
    /// Checks that the declared normalization holds to `1e-10`.
    pub fn new(p_factor: SpdMatrix<T>, q_factor: SpdMatrix<T>, normalization: Normalization) -> Result<Self> {
        let tol = T::tol(1e-10);
        let off = |s: &SpdMatrix<T>| (s.spectral_norm() - T::one()).abs() > tol;
        let ok = match normalization {
            Normalization::SpectralP => !off(&p_factor),
            Normalization::SpectralBoth => !off(&p_factor) && !off(&q_factor),
            Normalization::None => true,
        };
        if !ok {
            return Err(Error::InvalidArgument(format!("pair violates {normalization:?} normalization")));
        }
        Ok(Self { p_factor, q_factor, normalization })
    }

    /// Rescales `(P, Q)` onto the requested normalization; the product
    /// `P ⊗ Q` is preserved except under `SpectralBoth`, which also drops
    /// the overall scale.
    pub fn normalized(p_factor: SpdMatrix<T>, q_factor: SpdMatrix<T>, normalization: Normalization) -> Self {
        let (p_factor, q_factor) = match normalization {
            Normalization::SpectralP => {
                let (p, s) = p_factor.spectrally_normalized();
                (p, q_factor.scaled(s))
            }
            Normalization::SpectralBoth => (p_factor.spectrally_normalized().0, q_factor.spectrally_normalized().0),
            Normalization::None => (p_factor, q_factor),
        };
        Self { p_factor, q_factor, normalization }
    }

    pub fn identity(p: usize, q: usize, normalization: Normalization) -> Self {
        Self { p_factor: SpdMatrix::identity(p), q_factor: SpdMatrix::identity(q), normalization }
    }

    pub(crate) fn from_parts(p_factor: SpdMatrix<T>, q_factor: SpdMatrix<T>, normalization: Normalization) -> Self {
        Self { p_factor, q_factor, normalization }
    }

    pub fn renormalized(&self, normalization: Normalization) -> Self {
        Self::normalized(self.p_factor.clone(), self.q_factor.clone(), normalization)
    }

    pub fn p_factor(&self) -> &SpdMatrix<T> {
        &self.p_factor
    }

    pub fn q_factor(&self) -> &SpdMatrix<T> {
        &self.q_factor
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.p_factor.dim(), self.q_factor.dim())
    }

    /// Materialized `P ⊗ Q` (diagnostics and tests only).
    pub fn kron(&self) -> SpdMatrix<T> {
        self.p_factor.kron(&self.q_factor)
    }

    /// Relative Frobenius distance `‖P⊗Q − R⊗S‖_F / ‖R⊗S‖_F` computed
    /// factor-wise. With `scale_free`, both products are first scaled to unit
    /// Frobenius norm.
    pub fn product_distance(&self, other: &Self, scale_free: bool) -> T {
        let (mut a, mut b) = (self.p_factor.matrix().clone(), self.q_factor.matrix().clone());
        let (mut c, mut d) = (other.p_factor.matrix().clone(), other.q_factor.matrix().clone());
        if scale_free {
            a = a.scale(T::one() / a.frobenius_norm());
            b = b.scale(T::one() / b.frobenius_norm());
            c = c.scale(T::one() / c.frobenius_norm());
            d = d.scale(T::one() / d.frobenius_norm());
        }
        // A⊗B − C⊗D = (A − C)⊗B + C⊗(B − D); expanding the squared norm
        // keeps every term small when the products are close.
        let dp = a.sub(&c);
        let dq = b.sub(&d);
        let sq = dp.frobenius_dot(&dp) * b.frobenius_dot(&b)
            + c.frobenius_dot(&c) * dq.frobenius_dot(&dq)
            + T::lit(2.0) * dp.frobenius_dot(&c) * b.frobenius_dot(&dq);
        let reference = c.frobenius_norm() * d.frobenius_norm();
        sq.max(T::zero()).sqrt() / reference
    }
}

/// Why an estimation run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
    /// A factor's condition number exceeded the guard; the iterates are
    /// heading to the boundary of the cone.
    DivergedToBoundary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EstimationResult<T: Scalar> {
    pub pair: KroneckerPair<T>,
    pub mean: Matrix<T>,
    /// `objective_trace[0]` is the objective at the initial pair and
    /// `objective_trace[k]` the value after sweep `k`.
    pub objective_trace: Vec<T>,
    pub residual: T,
    pub status: Status,
    pub iterations: usize,
}

impl<T: Scalar> EstimationResult<T> {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn final_objective(&self) -> T {
        *self.objective_trace.last().expect("trace holds the initial objective")
    }

    /// Largest increase between consecutive trace entries (≤ 0 for a
    /// strictly descending run).
    pub fn max_ascent(&self) -> T {
        self.objective_trace.windows(2).map(|w| w[1] - w[0]).fold(T::neg_infinity(), T::max)
    }
}

/// Iteration controls for both flip-flop schemes.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FlipFlopOptions {
    /// Stop once the scale-projected fixed-point residual is at most this.
    pub tol: f64,
    pub max_iters: usize,
    /// Update right-hand sides with `λ_min ≤ rank_eps · λ_max` at the
    /// initial pair are treated as structurally rank deficient.
    pub rank_eps: f64,
    /// Condition-number guard for later sweeps.
    pub kappa_max: f64,
}

impl FlipFlopOptions {
    pub fn gaussian() -> Self {
        Self { tol: 1e-9, max_iters: 10_000, rank_eps: 1e-10, kappa_max: 1e12 }
    }

    pub fn robust() -> Self {
        Self { max_iters: 20_000, ..Self::gaussian() }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }
}

/// Symmetrizes an update right-hand side and checks `λ_min > min_ratio · λ_max`.
/// Returns the SPD matrix and its spectral norm.
pub(crate) fn checked_update<T: Scalar>(m: Matrix<T>, factor: Factor, min_ratio: T) -> Result<(SpdMatrix<T>, T)> {
    let m = m.symmetrized();
    if !m.is_finite() {
        return Err(Error::RankDeficientUpdate { factor, ratio: f64::NAN });
    }
    let eig = SymEigen::new(&m);
    let (lo, hi) = (eig.min(), eig.max());
    if !(hi > T::zero()) || lo <= min_ratio * hi {
        let ratio = if hi > T::zero() { (lo / hi).as_f64() } else { 0.0 };
        return Err(Error::RankDeficientUpdate { factor, ratio });
    }
    Ok((SpdMatrix::from_trusted(m), hi))
}

/// Relative Frobenius gap `‖current − target‖_F / ‖current‖_F`.
pub(crate) fn relative_gap<T: Scalar>(current: &Matrix<T>, target: &Matrix<T>) -> T {
    current.sub(target).frobenius_norm() / current.frobenius_norm()
}

/// The per-estimator pieces the flip-flop driver needs.
pub(crate) trait FlipFlop<T: Scalar> {
    fn objective(&self, pair: &KroneckerPair<T>) -> Result<T>;
    fn residual(&self, pair: &KroneckerPair<T>) -> Result<T>;
    /// Verifies the update right-hand sides at `pair` are full rank.
    fn check_ranks(&self, pair: &KroneckerPair<T>, min_ratio: T) -> Result<()>;
    /// One full (row then column) sweep.
    fn sweep(&self, pair: &KroneckerPair<T>, min_ratio: T) -> Result<KroneckerPair<T>>;
}

/// Runs `scheme` from `init` until the residual drops below `opts.tol`,
/// `opts.max_iters` sweeps are done, or a factor becomes ill-conditioned.
///
/// Rank deficiency of the update right-hand sides does not depend on the
/// current pair (the factors enter only through invertible congruences), so
/// it is tested once at the start with `rank_eps` and reported as an error.
/// Later near-singularity can only come from drifting towards the boundary
/// and is reported as [`Status::DivergedToBoundary`].
pub(crate) fn drive<T: Scalar, S: FlipFlop<T>>(
    scheme: &S,
    init: KroneckerPair<T>,
    mean: Matrix<T>,
    opts: &FlipFlopOptions,
) -> Result<EstimationResult<T>> {
    scheme.check_ranks(&init, T::tol(opts.rank_eps))?;
    let tol = T::tol(opts.tol);
    let guard = T::one() / T::lit(opts.kappa_max);

    let mut pair = init;
    let mut trace = vec![scheme.objective(&pair)?];
    let mut iterations = 0;
    loop {
        let residual = scheme.residual(&pair)?;
        let status = if residual <= tol {
            Some(Status::Converged)
        } else if iterations >= opts.max_iters {
            Some(Status::MaxIters)
        } else {
            None
        };
        if let Some(status) = status {
            return Ok(EstimationResult { pair, mean, objective_trace: trace, residual, status, iterations });
        }
        match scheme.sweep(&pair, guard) {
            Ok(next) => {
                pair = next;
                iterations += 1;
                trace.push(scheme.objective(&pair)?);
            }
            Err(Error::RankDeficientUpdate { .. } | Error::NotPositiveDefinite { .. }) => {
                return Ok(EstimationResult {
                    pair,
                    mean,
                    objective_trace: trace,
                    residual,
                    status: Status::DivergedToBoundary,
                    iterations,
                });
            }
            Err(e) => return Err(e),
        }
    }
}
