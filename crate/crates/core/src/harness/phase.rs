use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DataModel, ExperimentConfig};
use crate::diagnostics::{multistart_uniqueness, threshold_verdict, MultistartOptions, Regime, UniquenessReport, UniquenessVerdict};
use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;
use crate::rng::derive_seed;
use crate::sampling::{sample_elliptical, sample_matrix_normal, MatrixNormalParams, SampleSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialClass {
    Unique,
    NonUnique,
    RankFail,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub class: TrialClass,
    /// Mean sweep count over the starts that produced a result.
    pub mean_iterations: f64,
    pub report: Option<UniquenessReport<f64>>,
    pub error: Option<String>,
}

/// One row of a phase table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub n: usize,
    pub frac_unique: f64,
    pub frac_non_unique: f64,
    pub frac_rank_fail: f64,
    pub frac_inconclusive: f64,
    pub mean_iterations: f64,
    pub verdict_expected: Regime,
}

/// Seed of trial `trial` at sample count `n`.
pub fn trial_seed(base_seed: u64, n: usize, trial: usize) -> u64 {
    derive_seed(base_seed, &[n as u64, trial as u64])
}

/// Synthetic data of trial `trial` at sample count `n`.
pub fn trial_data(cfg: &ExperimentConfig, n: usize, trial: usize) -> Result<SampleSet<f64>> {
    let seed = trial_seed(cfg.base_seed, n, trial);
    match cfg.data_model {
        DataModel::MatrixNormal => sample_matrix_normal(&MatrixNormalParams::standard(cfg.p, cfg.q), n, seed),
        model => sample_elliptical(cfg.p, cfg.q, &SpdMatrix::identity(cfg.p * cfg.q), model.tail(), n, seed),
    }
}

fn is_rank_failure(err: &Error) -> bool {
    matches!(
        err,
        Error::RankDeficientUpdate { .. } | Error::RankDeficient(_) | Error::ZeroSample { .. } | Error::TooFewSamples { .. }
    )
}

/// Generates the data of one trial and classifies its multistart verdict.
pub fn run_trial(cfg: &ExperimentConfig, n: usize, trial: usize, parallel: bool) -> Result<TrialOutcome> {
    let setting = cfg.setting()?;
    let seed = trial_seed(cfg.base_seed, n, trial);
    let x = trial_data(cfg, n, trial)?;
    let opts = MultistartOptions {
        k_starts: cfg.k_starts,
        seed,
        flip_flop: cfg.flip_flop_options(),
        cluster_tol: cfg.tolerances.cluster_tol,
        parallel,
    };
    let outcome = match multistart_uniqueness(&x, setting, &opts) {
        Ok(report) => {
            let iters: Vec<usize> = report.outcomes.iter().filter_map(|o| o.result.as_ref()).map(|r| r.iterations).collect();
            let mean_iterations = iters.iter().sum::<usize>() as f64 / iters.len() as f64;
            let class = match report.verdict {
                UniquenessVerdict::Unique => TrialClass::Unique,
                UniquenessVerdict::NonUnique => TrialClass::NonUnique,
                UniquenessVerdict::Inconclusive => TrialClass::Inconclusive,
            };
            TrialOutcome { n, trial, seed, class, mean_iterations, report: Some(report), error: None }
        }
        Err(e) => {
            let class = if is_rank_failure(&e) { TrialClass::RankFail } else { TrialClass::Inconclusive };
            TrialOutcome { n, trial, seed, class, mean_iterations: 0.0, report: None, error: Some(e.to_string()) }
        }
    };
    Ok(outcome)
}

/// Runs every `(n, trial)` pair and aggregates one row per `n`.
///
/// Trials run on the rayon pool when `parallel` is set; outcomes are
/// collected in `(n, trial)` order, so the rows do not depend on scheduling.
pub fn run_phase(cfg: &ExperimentConfig, parallel: bool) -> Result<(Vec<PhaseRow>, Vec<TrialOutcome>)> {
    cfg.validate()?;
    let setting = cfg.setting()?;
    let jobs: Vec<(usize, usize)> =
        cfg.n_values.iter().flat_map(|&n| (0..cfg.trials).map(move |t| (n, t))).collect();
    let outcomes: Vec<TrialOutcome> = if parallel {
        jobs.par_iter().map(|&(n, t)| run_trial(cfg, n, t, true)).collect::<Result<_>>()?
    } else {
        jobs.iter().map(|&(n, t)| run_trial(cfg, n, t, false)).collect::<Result<_>>()?
    };

    let total = cfg.trials as f64;
    let rows = cfg
        .n_values
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let chunk = &outcomes[k * cfg.trials..(k + 1) * cfg.trials];
            let frac = |c: TrialClass| chunk.iter().filter(|o| o.class == c).count() as f64 / total;
            let ran: Vec<f64> = chunk.iter().filter(|o| o.report.is_some()).map(|o| o.mean_iterations).collect();
            let mean_iterations = if ran.is_empty() { 0.0 } else { ran.iter().sum::<f64>() / ran.len() as f64 };
            Ok(PhaseRow {
                n,
                frac_unique: frac(TrialClass::Unique),
                frac_non_unique: frac(TrialClass::NonUnique),
                frac_rank_fail: frac(TrialClass::RankFail),
                frac_inconclusive: frac(TrialClass::Inconclusive),
                mean_iterations,
                verdict_expected: threshold_verdict(cfg.p, cfg.q, n, setting)?.regime,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, outcomes))
}

/// CSV rendering of phase rows with a header line.
pub fn phase_csv(rows: &[PhaseRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
