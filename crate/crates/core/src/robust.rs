//! Tyler-type robust estimation: the Kronecker-constrained robust objective,
//! the robust flip-flop (RFF), and the unconstrained Tyler fixed point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Factor, Result};
use crate::estimation::{checked_update, drive, relative_gap, EstimationResult, FlipFlop, FlipFlopOptions, KroneckerPair, Normalization};
use crate::gaussian::project_scale;
use crate::linalg::{Matrix, SpdMatrix};
use crate::sampling::{psd_rank, SampleSet};
use crate::scalar::Scalar;

fn check_dims<T: Scalar>(pair: &KroneckerPair<T>, x: &SampleSet<T>) -> Result<()> {
    if pair.dims() != (x.p(), x.q()) {
        return Err(Error::DimensionMismatch(format!(
            "factors {:?} vs samples {}x{}",
            pair.dims(),
            x.p(),
            x.q()
        )));
    }
    Ok(())
}

/// `tr(P⁻¹ X_i Q⁻¹ X_iᵀ)` for every sample.
fn tyler_weights<T: Scalar>(x: &SampleSet<T>, p_inv: &Matrix<T>, q_inv: &Matrix<T>) -> Vec<T> {
    x.iter().map(|xi| p_inv.matmul(xi).matmul(q_inv).frobenius_dot(xi)).collect()
}

fn weighted_row_update<T: Scalar>(x: &SampleSet<T>, q_inv: &Matrix<T>, w: &[T]) -> Matrix<T> {
    let mut acc = Matrix::zeros(x.p(), x.p());
    for (xi, &wi) in x.iter().zip(w) {
        acc.add_assign_scaled(&xi.matmul(q_inv).matmul_t(xi), T::one() / wi);
    }
    acc.scale(T::one() / T::lit((x.q() * x.n()) as f64))
}

fn weighted_column_update<T: Scalar>(x: &SampleSet<T>, p_inv: &Matrix<T>, w: &[T]) -> Matrix<T> {
    let mut acc = Matrix::zeros(x.q(), x.q());
    for (xi, &wi) in x.iter().zip(w) {
        acc.add_assign_scaled(&xi.transpose().matmul(p_inv).matmul(xi), T::one() / wi);
    }
    acc.scale(T::one() / T::lit((x.p() * x.n()) as f64))
}

/// `(1/pq) ln|P⊗Q| + (1/n) Σ ln tr(P⁻¹ X_i Q⁻¹ X_iᵀ)`.
///
/// Invariant under `(P, Q) → (λP, μQ)` for any `λ, μ > 0`.
pub fn robust_nll<T: Scalar>(pair: &KroneckerPair<T>, x: &SampleSet<T>) -> Result<T> {
    check_dims(pair, x)?;
    x.ensure_nonzero()?;
    unchecked_nll(pair, x)
}

fn unchecked_nll<T: Scalar>(pair: &KroneckerPair<T>, x: &SampleSet<T>) -> Result<T> {
    let (p, q) = pair.dims();
    let pc = pair.p_factor().cholesky()?;
    let qc = pair.q_factor().cholesky()?;
    let w = tyler_weights(x, &pc.inverse(), &qc.inverse());
    let logdet = T::lit(q as f64) * pc.logdet() + T::lit(p as f64) * qc.logdet();
    let mean_log = w.iter().map(|wi| wi.ln()).sum::<T>() / T::lit(x.n() as f64);
    Ok(logdet / T::lit((p * q) as f64) + mean_log)
}

struct Rff<'a, T: Scalar> {
    x: &'a SampleSet<T>,
}

impl<T: Scalar> FlipFlop<T> for Rff<'_, T> {
    fn objective(&self, pair: &KroneckerPair<T>) -> Result<T> {
        unchecked_nll(pair, self.x)
    }

    fn residual(&self, pair: &KroneckerPair<T>) -> Result<T> {
        residual(pair, self.x)
    }

    fn check_ranks(&self, pair: &KroneckerPair<T>, min_ratio: T) -> Result<()> {
        let p_inv = pair.p_factor().inverse()?;
        let q_inv = pair.q_factor().inverse()?;
        let w = tyler_weights(self.x, p_inv.matrix(), q_inv.matrix());
        checked_update(weighted_row_update(self.x, q_inv.matrix(), &w), Factor::Row, min_ratio)?;
        checked_update(weighted_column_update(self.x, p_inv.matrix(), &w), Factor::Column, min_ratio)?;
        Ok(())
    }

    fn sweep(&self, pair: &KroneckerPair<T>, min_ratio: T) -> Result<KroneckerPair<T>> {
        sweep(pair, self.x, min_ratio)
    }
}

fn sweep<T: Scalar>(pair: &KroneckerPair<T>, x: &SampleSet<T>, min_ratio: T) -> Result<KroneckerPair<T>> {
    let p_inv = pair.p_factor().inverse()?;
    let q_inv = pair.q_factor().inverse()?;
    let w = tyler_weights(x, p_inv.matrix(), q_inv.matrix());
    let (p_tilde, p_norm) = checked_update(weighted_row_update(x, q_inv.matrix(), &w), Factor::Row, min_ratio)?;
    let p_next = p_tilde.scaled(T::one() / p_norm);

    let p_next_inv = p_next.inverse()?;
    let w = tyler_weights(x, p_next_inv.matrix(), q_inv.matrix());
    let (q_tilde, q_norm) = checked_update(weighted_column_update(x, p_next_inv.matrix(), &w), Factor::Column, min_ratio)?;
    let q_next = q_tilde.scaled(T::one() / q_norm);
    Ok(KroneckerPair::from_parts(p_next, q_next, Normalization::SpectralBoth))
}

/// One RFF sweep: a Tyler-weighted row update, then a column update
/// reweighted with the new row factor, each divided by its spectral norm.
pub fn rff_step<T: Scalar>(pair: &KroneckerPair<T>, x: &SampleSet<T>) -> Result<KroneckerPair<T>> {
    check_dims(pair, x)?;
    x.ensure_nonzero()?;
    sweep(pair, x, T::tol(FlipFlopOptions::robust().rank_eps))
}

/// Fixed-point residual of the robust critical-point system with both
/// sides projected to unit spectral norm.
pub fn rff_residual<T: Scalar>(pair: &KroneckerPair<T>, x: &SampleSet<T>) -> Result<T> {
    check_dims(pair, x)?;
    x.ensure_nonzero()?;
    residual(pair, x)
}

fn residual<T: Scalar>(pair: &KroneckerPair<T>, x: &SampleSet<T>) -> Result<T> {
    let p_inv = pair.p_factor().inverse()?;
    let q_inv = pair.q_factor().inverse()?;
    let w = tyler_weights(x, p_inv.matrix(), q_inv.matrix());
    let p_hat = weighted_row_update(x, q_inv.matrix(), &w).symmetrized();
    let q_hat = weighted_column_update(x, p_inv.matrix(), &w).symmetrized();
    let both = pair.renormalized(Normalization::SpectralBoth);
    let (p_hat, q_hat) = project_scale(&both, p_hat, q_hat);
    Ok(relative_gap(both.p_factor().matrix(), &p_hat).max(relative_gap(both.q_factor().matrix(), &q_hat)))
}

/// Runs the normalized RFF on samples with known (already subtracted) mean.
pub fn rff_estimate<T: Scalar>(
    x: &SampleSet<T>,
    init: &KroneckerPair<T>,
    opts: &FlipFlopOptions,
) -> Result<EstimationResult<T>> {
    check_dims(init, x)?;
    x.ensure_nonzero()?;
    let init = init.renormalized(Normalization::SpectralBoth);
    drive(&Rff { x }, init, Matrix::zeros(x.p(), x.q()), opts)
}

/// Outcome of the unconstrained Tyler iteration.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TylerFit<T: Scalar> {
    /// Fixed point scaled to `tr(T) = pq`.
    pub scatter: SpdMatrix<T>,
    pub residual: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Tyler's scatter `T = (d/n) Σ x xᵀ / (xᵀ T⁻¹ x)` on the vectorized
/// samples (`d = pq`), trace-normalized to `tr(T) = d`.
pub fn tyler_unconstrained<T: Scalar>(x: &SampleSet<T>, tol: T, max_iters: usize) -> Result<TylerFit<T>> {
    let d = x.p() * x.q();
    let n = x.n();
    if n <= d {
        return Err(Error::RankDeficient(format!("need n > pq = {d}, got n = {n}")));
    }
    x.ensure_nonzero()?;
    let vecs: Vec<&[T]> = x.iter().map(Matrix::as_slice).collect();
    let gram = outer_sum(&vecs, &vec![T::one(); n], d);
    if psd_rank(&gram, T::tol(1e-10)) < d {
        return Err(Error::RankDeficient("samples do not span R^pq".into()));
    }

    let df = T::lit(d as f64);
    let step = |t: &SpdMatrix<T>| -> Result<SpdMatrix<T>> {
        let chol = t.cholesky()?;
        let w: Vec<T> = vecs.iter().map(|v| crate::linalg::dot(v, &chol.solve_vec(v))).collect();
        let inv_w: Vec<T> = w.iter().map(|&wi| T::one() / wi).collect();
        let rhs = outer_sum(&vecs, &inv_w, d);
        let tr = rhs.trace();
        Ok(SpdMatrix::from_trusted(rhs.scale(df / tr)))
    };

    let mut t = SpdMatrix::identity(d);
    let mut iterations = 0;
    loop {
        let next = step(&t)?;
        let residual = relative_gap(t.matrix(), next.matrix());
        if residual <= tol || iterations >= max_iters {
            return Ok(TylerFit { scatter: t, residual, iterations, converged: residual <= tol });
        }
        t = next;
        iterations += 1;
    }
}

fn outer_sum<T: Scalar>(vecs: &[&[T]], weights: &[T], d: usize) -> Matrix<T> {
    let mut m = Matrix::zeros(d, d);
    for (v, &w) in vecs.iter().zip(weights) {
        for i in 0..d {
            let vi = v[i] * w;
            for j in i..d {
                m[(i, j)] = m[(i, j)] + vi * v[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
    m
}
