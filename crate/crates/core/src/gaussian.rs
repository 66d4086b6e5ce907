//! Matrix-normal Kronecker MLE: the negative log-likelihood and the Gaussian
//! flip-flop (GFF).
//!
//! The iteration is run on `Y_i = X_i − M` with
//!
//! ```text
//! P̃ = (1/qn) Σ Y_i Q⁻¹ Y_iᵀ,   P ← P̃ / ‖P̃‖₂
//! Q  = (1/pn) Σ Y_iᵀ P⁻¹ Y_i     (with the freshly normalized P)
//! ```
//!
//! Each half of a sweep is the exact minimizer of the objective in one factor
//! with the other held fixed, so the objective never increases.

use crate::error::{Error, Factor, Result};
use crate::estimation::{checked_update, drive, relative_gap, EstimationResult, FlipFlop, FlipFlopOptions, KroneckerPair, Normalization};
use crate::linalg::{Matrix, SpdMatrix, SymEigen};
use crate::sampling::{sample_mean, SampleSet};
use crate::scalar::Scalar;

fn check_dims<T: Scalar>(pair: &KroneckerPair<T>, x: &SampleSet<T>) -> Result<()> {
    if pair.dims() != (x.p(), x.q()) {
        let (p, q) = pair.dims();
        return Err(Error::DimensionMismatch(format!(
            "factors are {p} and {q}, samples are {}x{}",
            x.p(),
            x.q()
        )));
    }
    Ok(())
}

/// `(1/qn) Σ Y Q⁻¹ Yᵀ`.
pub(crate) fn row_update<T: Scalar>(y: &SampleSet<T>, q_inv: &Matrix<T>) -> Matrix<T> {
    let mut acc = Matrix::zeros(y.p(), y.p());
    for yi in y.iter() {
        acc = acc.add(&yi.matmul(q_inv).matmul_t(yi));
    }
    acc.scale(T::one() / T::lit((y.q() * y.n()) as f64))
}

/// `(1/pn) Σ Yᵀ P⁻¹ Y`.
pub(crate) fn column_update<T: Scalar>(y: &SampleSet<T>, p_inv: &Matrix<T>) -> Matrix<T> {
    let mut acc = Matrix::zeros(y.q(), y.q());
    for yi in y.iter() {
        let yt = yi.transpose();
        acc = acc.add(&yt.matmul(p_inv).matmul(yi));
    }
    acc.scale(T::one() / T::lit((y.p() * y.n()) as f64))
}

/// Negative log-likelihood up to constants:
/// `(1/n) Σ tr(P⁻¹ (X_i − M) Q⁻¹ (X_i − M)ᵀ) + q ln|P| + p ln|Q|`.
///
/// Proofs of existence usually work in the inverse parametrization
/// `(P, Q) ↦ (P⁻¹, Q⁻¹)`, which turns this into a geodesically convex
/// function; the value is the same, only the coordinates differ.
pub fn gaussian_nll<T: Scalar>(m: &Matrix<T>, pair: &KroneckerPair<T>, x: &SampleSet<T>) -> Result<T> {
    check_dims(pair, x)?;
    let y = x.shifted(m)?;
    centered_nll(pair, &y)
}

fn centered_nll<T: Scalar>(pair: &KroneckerPair<T>, y: &SampleSet<T>) -> Result<T> {
    let (p, q) = pair.dims();
    let pc = pair.p_factor().cholesky()?;
    let qc = pair.q_factor().cholesky()?;
    let p_inv = pc.inverse();
    let q_inv = qc.inverse();
    let quad: T = y.iter().map(|yi| p_inv.matmul(yi).matmul(&q_inv).frobenius_dot(yi)).sum();
    let n = T::lit(y.n() as f64);
    Ok(quad / n + T::lit(q as f64) * pc.logdet() + T::lit(p as f64) * qc.logdet())
}

struct Gff<'a, T: Scalar> {
    y: &'a SampleSet<T>,
}

impl<T: Scalar> FlipFlop<T> for Gff<'_, T> {
    fn objective(&self, pair: &KroneckerPair<T>) -> Result<T> {
        centered_nll(pair, self.y)
    }

    fn residual(&self, pair: &KroneckerPair<T>) -> Result<T> {
        gff_residual(pair, self.y)
    }

    fn check_ranks(&self, pair: &KroneckerPair<T>, min_ratio: T) -> Result<()> {
        let q_inv = pair.q_factor().inverse()?;
        let p_inv = pair.p_factor().inverse()?;
        checked_update(row_update(self.y, q_inv.matrix()), Factor::Row, min_ratio)?;
        checked_update(column_update(self.y, p_inv.matrix()), Factor::Column, min_ratio)?;
        Ok(())
    }

    fn sweep(&self, pair: &KroneckerPair<T>, min_ratio: T) -> Result<KroneckerPair<T>> {
        sweep(pair, self.y, min_ratio)
    }
}

fn sweep<T: Scalar>(pair: &KroneckerPair<T>, y: &SampleSet<T>, min_ratio: T) -> Result<KroneckerPair<T>> {
    let q_inv = pair.q_factor().inverse()?;
    let (p_tilde, p_norm) = checked_update(row_update(y, q_inv.matrix()), Factor::Row, min_ratio)?;
    let p_next = p_tilde.scaled(T::one() / p_norm);
    let p_inv = p_next.inverse()?;
    let (q_next, _) = checked_update(column_update(y, p_inv.matrix()), Factor::Column, min_ratio)?;
    Ok(KroneckerPair::from_parts(p_next, q_next, Normalization::SpectralP))
}

/// One normalized GFF sweep on centered samples `y`.
///
/// Fails with [`Error::RankDeficientUpdate`] when either update has
/// `λ_min ≤ 1e-10 · λ_max`, which happens exactly when there are too few
/// samples for the factors to be identifiable.
pub fn gff_step<T: Scalar>(pair: &KroneckerPair<T>, y: &SampleSet<T>) -> Result<KroneckerPair<T>> {
    check_dims(pair, y)?;
    sweep(pair, y, T::tol(FlipFlopOptions::gaussian().rank_eps))
}

/// Scale-projected fixed-point residual of the first-order conditions at
/// `pair`: the larger of the relative Frobenius gaps between each factor and
/// its update right-hand side, after moving the right-hand-side pair onto
/// `pair`'s normalization.
pub fn gff_residual<T: Scalar>(pair: &KroneckerPair<T>, y: &SampleSet<T>) -> Result<T> {
    check_dims(pair, y)?;
    let q_inv = pair.q_factor().inverse()?;
    let p_inv = pair.p_factor().inverse()?;
    let p_hat = row_update(y, q_inv.matrix()).symmetrized();
    let q_hat = column_update(y, p_inv.matrix()).symmetrized();
    let (p_hat, q_hat) = project_scale(pair, p_hat, q_hat);
    let gap_p = relative_gap(pair.p_factor().matrix(), &p_hat);
    let gap_q = relative_gap(pair.q_factor().matrix(), &q_hat);
    Ok(gap_p.max(gap_q))
}

pub(crate) fn project_scale<T: Scalar>(pair: &KroneckerPair<T>, p_hat: Matrix<T>, q_hat: Matrix<T>) -> (Matrix<T>, Matrix<T>) {
    let top = |m: &Matrix<T>| SymEigen::new(m).max();
    match pair.normalization() {
        Normalization::SpectralP => {
            let s = top(&p_hat);
            (p_hat.scale(T::one() / s), q_hat.scale(s))
        }
        Normalization::SpectralBoth => {
            let sp = top(&p_hat) / pair.p_factor().spectral_norm();
            let sq = top(&q_hat) / pair.q_factor().spectral_norm();
            (p_hat.scale(T::one() / sp), q_hat.scale(T::one() / sq))
        }
        Normalization::None => (p_hat, q_hat),
    }
}

/// Runs the GFF from `init` (renormalized to `‖P‖₂ = 1`).
///
/// Without `known_mean` the mean is profiled out as the sample average.
pub fn gff_estimate<T: Scalar>(
    x: &SampleSet<T>,
    init: &KroneckerPair<T>,
    known_mean: Option<&Matrix<T>>,
    opts: &FlipFlopOptions,
) -> Result<EstimationResult<T>> {
    check_dims(init, x)?;
    let mean = match known_mean {
        Some(m) => m.clone(),
        None => sample_mean(x),
    };
    let y = x.shifted(&mean)?;
    let init = init.renormalized(Normalization::SpectralP);
    drive(&Gff { y: &y }, init, mean, opts)
}

/// Default starting point `(I_p, I_q)`.
pub fn default_init<T: Scalar>(p: usize, q: usize) -> KroneckerPair<T> {
    KroneckerPair::identity(p, q, Normalization::SpectralP)
}

/// Helper for callers holding plain factors.
pub fn pair_from<T: Scalar>(p_factor: SpdMatrix<T>, q_factor: SpdMatrix<T>) -> KroneckerPair<T> {
    KroneckerPair::normalized(p_factor, q_factor, Normalization::SpectralP)
}
