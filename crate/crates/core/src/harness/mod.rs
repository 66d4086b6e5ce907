//! Flat-file I/O, experiment configuration and Monte Carlo orchestration.

mod config;
mod io;
mod phase;

pub use config::{DataModel, EstimatorTag, ExperimentConfig, MeanMode, Tolerances};
pub use io::{
    format_sample_set, parse_sample_set, read_sample_set, write_sample_set, EstimateRecord, MatrixRows,
};
pub use phase::{
    phase_csv, run_phase, run_trial, trial_data, trial_seed, PhaseRow, TrialClass, TrialOutcome,
};

use crate::error::Error;
use crate::estimation::Status;

/// Process exit codes used by the `kpcov` binary.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const PARSE_OR_CONFIG: i32 = 2;
    pub const RANK_FAILURE: i32 = 3;
    pub const NOT_CONVERGED: i32 = 4;
    pub const BOUNDARY_DIVERGENCE: i32 = 5;
}

/// Exit code reporting `err`.
pub fn error_exit_code(err: &Error) -> i32 {
    match err {
        Error::RankDeficientUpdate { .. }
        | Error::RankDeficient(_)
        | Error::TooFewSamples { .. }
        | Error::NotPositiveDefinite { .. } => exit_code::RANK_FAILURE,
        _ => exit_code::PARSE_OR_CONFIG,
    }
}

/// Exit code reporting a finished run.
pub fn status_exit_code(status: Status) -> i32 {
    match status {
        Status::Converged => exit_code::SUCCESS,
        Status::MaxIters => exit_code::NOT_CONVERGED,
        Status::DivergedToBoundary => exit_code::BOUNDARY_DIVERGENCE,
    }
}
