//! Existence/uniqueness diagnostics.
//!
//! * sample-count thresholds for the Gaussian (known and unknown mean) and
//!   robust estimators,
//! * the exact 2×2 criterion: the discriminant `D(X₁, X₂)`, the indicator
//!   ζ, and a brute-force collinearity search that checks them,
//! * rank-based necessary conditions,
//! * empirical multistart uniqueness probing,
//! * the boundary path along which the objective stays bounded when a
//!   collinearity witness exists.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{EstimationResult, FlipFlopOptions, KroneckerPair, Normalization, Status};
use crate::gaussian::{column_update, gff_estimate, row_update};
use crate::linalg::{Matrix, SpdMatrix};
use crate::robust::rff_estimate;
use crate::rng::{random_spd, stream_rng};
use crate::sampling::{psd_rank, sample_mean, SampleSet};
use crate::scalar::Scalar;

/// Estimation setting; selects both the sample-count thresholds and the estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// Gaussian flip-flop with the mean profiled out.
    GaussianUnknownMean,
    /// Gaussian flip-flop with zero (known) mean.
    GaussianKnownMean,
    /// Robust flip-flop, known mean.
    Robust,
}

impl Setting {
    pub const ALL: [Setting; 3] = [Setting::GaussianUnknownMean, Setting::GaussianKnownMean, Setting::Robust];

    pub fn as_str(&self) -> &'static str {
        match self {
            Setting::GaussianUnknownMean => "gaussian_unknown_mean",
            Setting::GaussianKnownMean => "gaussian_known_mean",
            Setting::Robust => "robust",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown setting `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    NoUniqueMinimum,
    Gap,
    UniqueMinimum,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::NoUniqueMinimum => "no_unique_minimum",
            Regime::Gap => "gap",
            Regime::UniqueMinimum => "unique_minimum",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where `n` falls relative to the necessary (`lower`) and sufficient
/// (`upper`) sample counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdVerdict {
    pub regime: Regime,
    pub lower: f64,
    pub upper: f64,
    pub setting: Setting,
}

/// Classifies `n` samples of p×q matrices.
///
/// | setting               | no unique minimum if       | unique a.s. if        |
/// |-----------------------|----------------------------|-----------------------|
/// | Gaussian, unknown mean| n < max(p/q, q/p) + 1      | n > p/q + q/p + 1     |
/// | Gaussian, known mean  | n < max(p/q, q/p)          | n > p/q + q/p         |
/// | robust                | n < max(p/q, q/p)          | n > max(p/q, q/p)     |
///
/// Comparisons are done in integers (multiplied through by `pq`).
pub fn threshold_verdict(p: usize, q: usize, n: usize, mode: Setting) -> Result<ThresholdVerdict> {
    if p == 0 || q == 0 || n == 0 {
        return Err(Error::InvalidArgument("p, q and n must be positive".into()));
    }
    let (p, q, n) = (p as u128, q as u128, n as u128);
    let pq = p * q;
    // Thresholds scaled by pq: max(p/q, q/p)·pq = max(p², q²), (p/q + q/p)·pq = p² + q².
    let max_sq = (p * p).max(q * q);
    let sum_sq = p * p + q * q;
    let shift = match mode {
        Setting::GaussianUnknownMean => pq,
        _ => 0,
    };
    let lower = max_sq + shift;
    let upper = match mode {
        Setting::Robust => max_sq,
        _ => sum_sq + shift,
    };
    let scaled_n = n * pq;
    let regime = if scaled_n < lower {
        Regime::NoUniqueMinimum
    } else if scaled_n > upper {
        Regime::UniqueMinimum
    } else {
        Regime::Gap
    };
    Ok(ThresholdVerdict { regime, lower: lower as f64 / pq as f64, upper: upper as f64 / pq as f64, setting: mode })
}

/// Indicator ζ for a single 2×2 sample (a.s.).
pub const ZETA_SINGLE_SAMPLE: u8 = 1;
/// Indicator ζ for three or more 2×2 samples (a.s.).
pub const ZETA_MANY_SAMPLES: u8 = 2;

fn require_2x2<T: Scalar>(m: &Matrix<T>) -> Result<()> {
    if m.shape() != (2, 2) {
        return Err(Error::DimensionMismatch(format!("expected 2x2, got {}x{}", m.rows(), m.cols())));
    }
    Ok(())
}

/// Discriminant of the quadratic form `t ↦ det[X₁t | X₂t]`. A direction `t`
/// with `X₁t ∥ X₂t` exists iff `D ≥ 0`.
///
/// With `X₁ = [[x, y], [u, v]]` and `X₂ = [[a, b], [c, d]]`:
/// `D = (|x b; u d| + |y a; v c|)² − 4 |x a; u c| |y b; v d|`.
pub fn discriminant_2x2<T: Scalar>(x1: &Matrix<T>, x2: &Matrix<T>) -> Result<T> {
    require_2x2(x1)?;
    require_2x2(x2)?;
    let (x, y, u, v) = (x1[(0, 0)], x1[(0, 1)], x1[(1, 0)], x1[(1, 1)]);
    let (a, b, c, d) = (x2[(0, 0)], x2[(0, 1)], x2[(1, 0)], x2[(1, 1)]);
    let det = |a11: T, a12: T, a21: T, a22: T| a11 * a22 - a12 * a21;
    let mixed = det(x, b, u, d) + det(y, a, v, c);
    Ok(mixed * mixed - T::lit(4.0) * det(x, a, u, c) * det(y, b, v, d))
}

/// `|D| ≤ 1e-6 · ‖X₁‖²_F ‖X₂‖²_F`: the sign of `D` is not trustworthy.
pub fn discriminant_is_degenerate<T: Scalar>(x1: &Matrix<T>, x2: &Matrix<T>, d: T) -> bool {
    d.abs() <= T::lit(1e-6) * x1.frobenius_dot(x1) * x2.frobenius_dot(x2)
}

/// ζ(X) for exactly two 2×2 samples: 1 if `D ≥ 0`, else 2.
pub fn zeta_2x2<T: Scalar>(x: &SampleSet<T>) -> Result<u8> {
    if x.p() != 2 || x.q() != 2 || x.n() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "zeta needs two 2x2 samples, got {} of {}x{}",
            x.n(),
            x.p(),
            x.q()
        )));
    }
    let d = discriminant_2x2(&x.samples()[0], &x.samples()[1])?;
    Ok(if d >= T::zero() { 1 } else { 2 })
}

const ORACLE_GRID: usize = 10_000;
const ORACLE_TOL: f64 = 1e-9;

/// Worst pairwise normalized `|det[X_i t | X_j t]|` at angle θ.
fn collinearity_defect<T: Scalar>(x: &SampleSet<T>, norms: &[T], theta: T) -> T {
    let (c, s) = (theta.cos(), theta.sin());
    let images: Vec<[T; 2]> =
        x.iter().map(|m| [m[(0, 0)] * c + m[(0, 1)] * s, m[(1, 0)] * c + m[(1, 1)] * s]).collect();
    let mut worst = T::zero();
    for i in 0..images.len() {
        for j in (i + 1)..images.len() {
            let scale = norms[i] * norms[j];
            if scale == T::zero() {
                continue;
            }
            let det = images[i][0] * images[j][1] - images[i][1] * images[j][0];
            worst = worst.max(det.abs() / scale);
        }
    }
    worst
}

fn golden_section<T: Scalar>(f: impl Fn(T) -> T, mut lo: T, mut hi: T) -> (T, T) {
    let ratio = T::lit(0.618_033_988_749_894_8);
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if hi - lo <= T::epsilon() * (T::one() + lo.abs()) {
            break;
        }
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        }
    }
    if fa <= fb {
        (a, fa)
    } else {
        (b, fb)
    }
}

/// Brute-force search for a unit `t` making every `X_i t` collinear.
///
/// Scans 10⁴ angles in `[0, π)`, refines every local minimum of the worst
/// normalized pairwise determinant by golden-section search, and accepts the
/// best direction if its defect is at most `1e-9`.
pub fn collinearity_oracle<T: Scalar>(x: &SampleSet<T>) -> Result<Option<[T; 2]>> {
    if x.p() != 2 || x.q() != 2 {
        return Err(Error::DimensionMismatch("collinearity oracle needs 2x2 samples".into()));
    }
    let norms: Vec<T> = x.iter().map(Matrix::frobenius_norm).collect();
    let pi = T::lit(std::f64::consts::PI);
    let step = pi / T::lit(ORACLE_GRID as f64);
    let f = |theta: T| collinearity_defect(x, &norms, theta);
    let values: Vec<T> = (0..ORACLE_GRID).map(|k| f(T::lit(k as f64) * step)).collect();

    let mut best = (T::zero(), T::infinity());
    for k in 0..ORACLE_GRID {
        let prev = values[(k + ORACLE_GRID - 1) % ORACLE_GRID];
        let next = values[(k + 1) % ORACLE_GRID];
        if values[k] > prev || values[k] > next {
            continue;
        }
        let theta = T::lit(k as f64) * step;
        let (t_ref, v_ref) = if values[k] == T::zero() {
            (theta, T::zero())
        } else {
            golden_section(f, theta - step, theta + step)
        };
        if v_ref < best.1 {
            best = (t_ref, v_ref);
        }
    }
    if best.1 <= T::lit(ORACLE_TOL) {
        Ok(Some([best.0.cos(), best.0.sin()]))
    } else {
        Ok(None)
    }
}

/// Samples the update right-hand sides act on for `mode`.
fn working_samples<T: Scalar>(x: &SampleSet<T>, mode: Setting) -> SampleSet<T> {
    match mode {
        Setting::GaussianUnknownMean => x.shifted(&sample_mean(x)).expect("mean has sample shape"),
        _ => x.clone(),
    }
}

/// True iff both flip-flop update right-hand sides, evaluated at `(I, I)`,
/// are full rank. Necessary for any fixed point to exist.
pub fn rank_necessary_check<T: Scalar>(x: &SampleSet<T>, mode: Setting) -> bool {
    if mode == Setting::Robust && x.ensure_nonzero().is_err() {
        return false;
    }
    let y = working_samples(x, mode);
    let eps = T::tol(FlipFlopOptions::gaussian().rank_eps);
    // Positive Tyler weights do not change the rank, so the unweighted sums decide.
    let rows = row_update(&y, &Matrix::identity(y.q()));
    let cols = column_update(&y, &Matrix::identity(y.p()));
    psd_rank(&rows, eps) == y.p() && psd_rank(&cols, eps) == y.q()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UniquenessVerdict {
    Unique,
    NonUnique,
    Inconclusive,
}

/// Outcome of a single multistart run.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct StartOutcome<T: Scalar> {
    pub start: usize,
    pub result: Option<EstimationResult<T>>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct UniquenessReport<T: Scalar> {
    /// Final pair and objective of every run that produced one, in start order.
    pub limits: Vec<(KroneckerPair<T>, T)>,
    /// Cluster index of each entry of `limits`.
    pub assignments: Vec<usize>,
    pub cluster_count: usize,
    /// Spread of final objectives over converged runs.
    pub max_objective_spread: T,
    /// Largest pairwise quotient distance over converged runs.
    pub diameter: T,
    pub verdict: UniquenessVerdict,
    pub outcomes: Vec<StartOutcome<T>>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MultistartOptions {
    pub k_starts: usize,
    pub seed: u64,
    pub flip_flop: FlipFlopOptions,
    /// Limits closer than this (scale-projected relative Frobenius) share a cluster.
    pub cluster_tol: f64,
    /// Run starts on the rayon pool; output is identical either way.
    pub parallel: bool,
}

impl MultistartOptions {
    pub fn new(mode: Setting, k_starts: usize, seed: u64) -> Self {
        let flip_flop = match mode {
            Setting::Robust => FlipFlopOptions::robust(),
            _ => FlipFlopOptions::gaussian(),
        };
        Self { k_starts, seed, flip_flop, cluster_tol: 1e-4, parallel: true }
    }
}

/// Random initial pair for start `k`: `AᵀA + 1e-3·I` factors, normalized.
pub fn random_init<T: Scalar>(p: usize, q: usize, seed: u64, k: usize, normalization: Normalization) -> KroneckerPair<T> {
    let mut rng = stream_rng(seed, k as u64);
    let eps = T::lit(1e-3);
    let a = random_spd(p, eps, &mut rng);
    let b = random_spd(q, eps, &mut rng);
    KroneckerPair::normalized(a, b, normalization)
}

/// Runs the estimator selected by `mode` from `k_starts` random initial
/// pairs and clusters the limits on the scale quotient.
///
/// Per-start failures are recorded in the report. If no start produced a
/// pair at all the first error is returned; for structurally rank-deficient
/// data every start fails the same way.
pub fn multistart_uniqueness<T: Scalar>(
    x: &SampleSet<T>,
    mode: Setting,
    opts: &MultistartOptions,
) -> Result<UniquenessReport<T>> {
    if opts.k_starts < 2 {
        return Err(Error::InvalidArgument("multistart needs at least two starts".into()));
    }
    let known_zero = Matrix::zeros(x.p(), x.q());
    let run = |k: usize| -> Result<EstimationResult<T>> {
        match mode {
            Setting::GaussianUnknownMean => {
                let init = random_init(x.p(), x.q(), opts.seed, k, Normalization::SpectralP);
                gff_estimate(x, &init, None, &opts.flip_flop)
            }
            Setting::GaussianKnownMean => {
                let init = random_init(x.p(), x.q(), opts.seed, k, Normalization::SpectralP);
                gff_estimate(x, &init, Some(&known_zero), &opts.flip_flop)
            }
            Setting::Robust => {
                let init = random_init(x.p(), x.q(), opts.seed, k, Normalization::SpectralBoth);
                rff_estimate(x, &init, &opts.flip_flop)
            }
        }
    };
    let results: Vec<Result<EstimationResult<T>>> = if opts.parallel {
        (0..opts.k_starts).into_par_iter().map(run).collect()
    } else {
        (0..opts.k_starts).map(run).collect()
    };

    let mut first_error = None;
    let mut outcomes = Vec::with_capacity(results.len());
    for (start, r) in results.into_iter().enumerate() {
        match r {
            Ok(res) => outcomes.push(StartOutcome { start, result: Some(res), error: None }),
            Err(e) => {
                outcomes.push(StartOutcome { start, result: None, error: Some(e.to_string()) });
                first_error.get_or_insert(e);
            }
        }
    }
    let finished: Vec<&EstimationResult<T>> = outcomes.iter().filter_map(|o| o.result.as_ref()).collect();
    if finished.is_empty() {
        return Err(first_error.expect("every start failed"));
    }

    let scale_free = mode == Setting::Robust;
    let cluster_tol = T::lit(opts.cluster_tol);
    let mut reps: Vec<&KroneckerPair<T>> = Vec::new();
    let mut assignments = Vec::with_capacity(finished.len());
    for res in &finished {
        let hit = reps.iter().position(|r| res.pair.product_distance(r, scale_free) <= cluster_tol);
        match hit {
            Some(c) => assignments.push(c),
            None => {
                assignments.push(reps.len());
                reps.push(&res.pair);
            }
        }
    }
    let cluster_count = reps.len();

    let converged: Vec<&&EstimationResult<T>> = finished.iter().filter(|r| r.converged()).collect();
    let mut diameter = T::zero();
    for i in 0..converged.len() {
        for j in (i + 1)..converged.len() {
            diameter = diameter.max(converged[i].pair.product_distance(&converged[j].pair, scale_free));
        }
    }
    let objs = converged.iter().map(|r| r.final_objective());
    let (lo, hi) = objs.fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let max_objective_spread = if converged.is_empty() { T::zero() } else { hi - lo };

    let all_converged = first_error.is_none() && converged.len() == finished.len();
    let boundary = finished.iter().any(|r| r.status == Status::DivergedToBoundary);
    let converged_clusters = {
        let mut seen: Vec<usize> =
            finished.iter().zip(&assignments).filter(|(r, _)| r.converged()).map(|(_, &c)| c).collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    };
    let verdict = if boundary || converged_clusters >= 2 {
        UniquenessVerdict::NonUnique
    } else if cluster_count == 1 && all_converged {
        UniquenessVerdict::Unique
    } else {
        UniquenessVerdict::Inconclusive
    };

    let limits = finished.iter().map(|r| (r.pair.clone(), r.final_objective())).collect();
    Ok(UniquenessReport {
        limits,
        assignments,
        cluster_count,
        max_objective_spread,
        diameter,
        verdict,
        outcomes,
    })
}

/// Default μ grid `{10¹, …, 10⁶}`.
pub fn default_mu_grid<T: Scalar>() -> Vec<T> {
    (1..=6).map(|k| T::lit(10f64.powi(k))).collect()
}

fn rotation<T: Scalar>(first: [T; 2]) -> Matrix<T> {
    let norm = (first[0] * first[0] + first[1] * first[1]).sqrt();
    let (c, s) = (first[0] / norm, first[1] / norm);
    Matrix::from_rows(&[[c, -s], [s, c]]).expect("2x2")
}

fn unit<T: Scalar>(v: [T; 2]) -> [T; 2] {
    let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
    [v[0] / norm, v[1] / norm]
}

fn det2<T: Scalar>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[1] - a[1] * b[0]
}

/// Largest image `X_i t`, or `None` if every image vanishes.
fn dominant_image<T: Scalar>(x: &SampleSet<T>, t: [T; 2]) -> Option<[T; 2]> {
    x.iter()
        .map(|m| [m[(0, 0)] * t[0] + m[(0, 1)] * t[1], m[(1, 0)] * t[0] + m[(1, 1)] * t[1]])
        .max_by(|a, b| (a[0] * a[0] + a[1] * a[1]).partial_cmp(&(b[0] * b[0] + b[1] * b[1])).unwrap_or(std::cmp::Ordering::Equal))
        .filter(|v| v[0] != T::zero() || v[1] != T::zero())
}

/// Known-mean Gaussian objective in inverse parametrization,
/// `(1/n) Σ tr(P X_i Q X_iᵀ) − ln|P⊗Q|`, along
/// `P = S diag(1/μ, 1) Sᵀ`, `Q = T diag(μ, 1) Tᵀ`.
pub fn probe_path<T: Scalar>(x: &SampleSet<T>, row_basis: &Matrix<T>, col_basis: &Matrix<T>, mu_grid: &[T]) -> Result<Vec<(T, T)>> {
    if x.p() != 2 || x.q() != 2 {
        return Err(Error::DimensionMismatch("boundary probe needs 2x2 samples".into()));
    }
    let n = T::lit(x.n() as f64);
    mu_grid
        .iter()
        .map(|&mu| {
            let p = SpdMatrix::from_trusted(row_basis.matmul(&Matrix::from_diag(&[T::one() / mu, T::one()])).matmul_t(row_basis));
            let q = SpdMatrix::from_trusted(col_basis.matmul(&Matrix::from_diag(&[mu, T::one()])).matmul_t(col_basis));
            let quad: T = x.iter().map(|xi| p.matrix().matmul(xi).matmul(q.matrix()).frobenius_dot(xi)).sum();
            let two = T::lit(2.0);
            let logdet = two * p.logdet()? + two * q.logdet()?;
            Ok((mu, quad / n - logdet))
        })
        .collect()
}

/// The path in orthonormal bases: `Q`'s basis is `{t, t⊥}`, `P`'s basis
/// starts with the direction of `X_i t`. Every sample then has a zero (2,1)
/// entry, the trace term decreases to a finite limit like `1/μ`, and
/// `ln|P⊗Q| = 0`.
pub fn orthonormal_probe_2x2<T: Scalar>(x: &SampleSet<T>, witness: Option<[T; 2]>, mu_grid: &[T]) -> Result<Vec<(T, T)>> {
    let t = witness.ok_or(Error::MissingWitness)?;
    if x.p() != 2 || x.q() != 2 {
        return Err(Error::DimensionMismatch("boundary probe needs 2x2 samples".into()));
    }
    let s = dominant_image(x, t).unwrap_or([T::one(), T::zero()]);
    probe_path(x, &rotation(s), &rotation(t), mu_grid)
}

/// Second root of `det[X₁t | X₂t] = 0`, the one least parallel to `t`.
fn second_witness<T: Scalar>(x: &SampleSet<T>, t: [T; 2]) -> Option<[T; 2]> {
    if x.n() != 2 {
        return None;
    }
    let (x1, x2) = (&x.samples()[0], &x.samples()[1]);
    let col = |m: &Matrix<T>, j: usize| [m[(0, j)], m[(1, j)]];
    // det[X₁t | X₂t] = a t₁² + b t₁t₂ + c t₂².
    let a = det2(col(x1, 0), col(x2, 0));
    let b = det2(col(x1, 0), col(x2, 1)) + det2(col(x1, 1), col(x2, 0));
    let c = det2(col(x1, 1), col(x2, 1));
    let disc = b * b - T::lit(4.0) * a * c;
    if disc < T::zero() {
        return None;
    }
    let root = disc.sqrt();
    let big = if b >= T::zero() { -(b + root) } else { root - b };
    // Roots as directions; the pair of forms avoids dividing by a or c.
    let candidates = [[big, T::lit(2.0) * a], [T::lit(2.0) * c, big]];
    candidates
        .into_iter()
        .filter(|v| v[0] != T::zero() || v[1] != T::zero())
        .map(unit)
        .max_by(|u, v| det2(t, *u).abs().partial_cmp(&det2(t, *v).abs()).unwrap_or(std::cmp::Ordering::Equal))
}

/// Probes the objective along a boundary path built from a collinearity
/// witness `t`, returning `(μ, objective)` pairs.
///
/// For two samples with `D > 0` the quadratic `det[X₁t | X₂t]` has a second
/// root `t'`. Taking `T = c·[t, t']` and `S = [s, s']^{-T}` for the image
/// directions `s ∥ X_i t`, `s' ∥ X_i t'` makes every `SᵀX_iT` diagonal, so
/// the objective is constant along the path; `c` is chosen so that
/// `ln|P⊗Q| = 0`. With a single witness (`D = 0`) or more than two samples
/// this falls back to [`orthonormal_probe_2x2`].
pub fn boundary_probe_2x2<T: Scalar>(x: &SampleSet<T>, witness: Option<[T; 2]>, mu_grid: &[T]) -> Result<Vec<(T, T)>> {
    let t = unit(witness.ok_or(Error::MissingWitness)?);
    if x.p() != 2 || x.q() != 2 {
        return Err(Error::DimensionMismatch("boundary probe needs 2x2 samples".into()));
    }
    let separated = T::lit(1e-6);
    let dual = second_witness(x, t).filter(|u| det2(t, *u).abs() > separated).and_then(|u| {
        let s = unit(dominant_image(x, t)?);
        let s2 = unit(dominant_image(x, u)?);
        let ds = det2(s, s2);
        (ds.abs() > separated).then_some((u, s, s2, ds))
    });
    let Some((u, s, s2, ds)) = dual else {
        return orthonormal_probe_2x2(x, Some(t), mu_grid);
    };
    // [s s']^{-T} = (1/ds) [[s'₂, -s₂], [-s'₁, s₁]]ᵀ as columns.
    let row_basis = Matrix::from_rows(&[[s2[1] / ds, -s[1] / ds], [-s2[0] / ds, s[0] / ds]])?;
    let dt = det2(t, u);
    let c = (ds.abs() / dt.abs()).sqrt();
    let col_basis = Matrix::from_rows(&[[c * t[0], c * u[0]], [c * t[1], c * u[1]]])?;
    probe_path(x, &row_basis, &col_basis, mu_grid)
}

/// The same diagonal path in random orthonormal bases (angles drawn from
/// `seed`). Without a witness the trace term grows linearly in μ.
pub fn random_basis_probe_2x2<T: Scalar>(x: &SampleSet<T>, seed: u64, mu_grid: &[T]) -> Result<Vec<(T, T)>> {
    use rand::Rng;
    let mut rng = stream_rng(seed, 0);
    let mut angle = || T::lit(rng.random_range(0.0..std::f64::consts::TAU));
    let (a, b) = (angle(), angle());
    probe_path(x, &rotation([a.cos(), a.sin()]), &rotation([b.cos(), b.sin()]), mu_grid)
}

/// Relative Frobenius error after matching traces:
/// `‖Ê/tr Ê − Θ/tr Θ‖_F / ‖Θ/tr Θ‖_F`.
pub fn shape_error<T: Scalar>(estimate: &SpdMatrix<T>, truth: &SpdMatrix<T>) -> Result<T> {
    if estimate.dim() != truth.dim() {
        return Err(Error::DimensionMismatch(format!("shape error of {} vs {}", estimate.dim(), truth.dim())));
    }
    let e = estimate.matrix().scale(T::one() / estimate.matrix().trace());
    let t = truth.matrix().scale(T::one() / truth.matrix().trace());
    Ok(e.sub(&t).frobenius_norm() / t.frobenius_norm())
}
