use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnostics::Setting;
use crate::error::{Error, Result};
use crate::estimation::FlipFlopOptions;
use crate::sampling::Tail;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorTag {
    Gff,
    Rff,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanMode {
    KnownZero,
    Unknown,
}

/// Generating law for synthetic data. Truth factors are identities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataModel {
    MatrixNormal,
    Race,
    StudentT { nu: f64 },
}

impl DataModel {
    pub fn tail(&self) -> Tail {
        match *self {
            DataModel::MatrixNormal => Tail::Gaussian,
            DataModel::Race => Tail::Race,
            DataModel::StudentT { nu } => Tail::StudentT { nu },
        }
    }
}

impl fmt::Display for EstimatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorTag::Gff => "gff",
            EstimatorTag::Rff => "rff",
        })
    }
}

impl fmt::Display for MeanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeanMode::KnownZero => "known_zero",
            MeanMode::Unknown => "unknown",
        })
    }
}

impl fmt::Display for DataModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataModel::MatrixNormal => f.write_str("matrix_normal"),
            DataModel::Race => f.write_str("race"),
            DataModel::StudentT { nu } => write!(f, "student_t({nu})"),
        }
    }
}

impl FromStr for EstimatorTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gff" => Ok(EstimatorTag::Gff),
            "rff" => Ok(EstimatorTag::Rff),
            other => Err(Error::InvalidArgument(format!("unknown estimator `{other}` (gff|rff)"))),
        }
    }
}

impl FromStr for MeanMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "known_zero" | "known" | "zero" => Ok(MeanMode::KnownZero),
            "unknown" => Ok(MeanMode::Unknown),
            other => Err(Error::InvalidArgument(format!("unknown mean mode `{other}` (known_zero|unknown)"))),
        }
    }
}

impl FromStr for DataModel {
    type Err = Error;

    /// `matrix_normal`, `race`, or `student_t(NU)` / `student-t:NU`.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        match norm.as_str() {
            "matrix_normal" | "gaussian" => Ok(DataModel::MatrixNormal),
            "race" => Ok(DataModel::Race),
            _ => match s.parse::<Tail>()? {
                Tail::StudentT { nu } => Ok(DataModel::StudentT { nu }),
                _ => Err(Error::InvalidArgument(format!("unknown data model `{s}`"))),
            },
        }
    }
}

/// Setting selected by an estimator and mean mode.
pub(crate) fn setting(estimator: EstimatorTag, mean_mode: MeanMode) -> Result<Setting> {
    match (estimator, mean_mode) {
        (EstimatorTag::Gff, MeanMode::Unknown) => Ok(Setting::GaussianUnknownMean),
        (EstimatorTag::Gff, MeanMode::KnownZero) => Ok(Setting::GaussianKnownMean),
        (EstimatorTag::Rff, MeanMode::KnownZero) => Ok(Setting::Robust),
        (EstimatorTag::Rff, MeanMode::Unknown) => {
            Err(Error::Config("rff requires mean_mode = known_zero".into()))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub tol: f64,
    pub cluster_tol: f64,
    pub max_iters: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { tol: 1e-9, cluster_tol: 1e-4, max_iters: 10_000 }
    }
}

/// A phase-diagram experiment, stored as JSON:
///
/// ```json
/// {
///   "p": 2, "q": 3, "n_values": [2, 3, 4, 5, 6], "trials": 100,
///   "estimator": "gff", "mean_mode": "unknown",
///   "data_model": "matrix_normal",
///   "base_seed": 7,
///   "tolerances": { "tol": 1e-9, "cluster_tol": 1e-4, "max_iters": 10000 },
///   "k_starts": 8
/// }
/// ```
///
/// `data_model` is `"matrix_normal"`, `"race"` or `{"student_t": {"nu": 3.0}}`.
/// `tolerances` may be omitted or partial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub p: usize,
    pub q: usize,
    pub n_values: Vec<usize>,
    pub trials: usize,
    pub estimator: EstimatorTag,
    pub mean_mode: MeanMode,
    pub data_model: DataModel,
    pub base_seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub k_starts: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if self.p == 0 || self.q == 0 {
            return bad("p and q must be positive");
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return bad("n_values must be a non-empty list of positive counts");
        }
        if self.trials == 0 {
            return bad("trials must be positive");
        }
        if self.k_starts < 2 {
            return bad("k_starts must be at least 2");
        }
        let t = &self.tolerances;
        if !(t.tol > 0.0 && t.cluster_tol > 0.0) || t.max_iters == 0 {
            return bad("tolerances must be positive");
        }
        self.data_model.tail().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.setting().map(|_| ())
    }

    pub fn setting(&self) -> Result<Setting> {
        setting(self.estimator, self.mean_mode)
    }

    pub fn flip_flop_options(&self) -> FlipFlopOptions {
        FlipFlopOptions::gaussian()
            .with_tol(self.tolerances.tol)
            .with_max_iters(self.tolerances.max_iters)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig {
            p: 2,
            q: 3,
            n_values: vec![2, 4],
            trials: 3,
            estimator: EstimatorTag::Gff,
            mean_mode: MeanMode::Unknown,
            data_model: DataModel::MatrixNormal,
            base_seed: 1,
            tolerances: Tolerances::default(),
            k_starts: 4,
        }
    }

    #[test]
    fn json_round_trip() {
        let mut cfg = base();
        cfg.data_model = DataModel::StudentT { nu: 3.0 };
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn tolerances_default_when_absent() {
        let text = r#"{"p":2,"q":2,"n_values":[5],"trials":2,"estimator":"rff","mean_mode":"known_zero",
            "data_model":"race","base_seed":3,"k_starts":3,"tolerances":{"tol":1e-8}}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.tolerances.tol, 1e-8);
        assert_eq!(cfg.tolerances.max_iters, 10_000);
    }

    #[test]
    fn validation() {
        let mut cfg = base();
        cfg.estimator = EstimatorTag::Rff;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = base();
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = base();
        cfg.n_values = vec![3, 0];
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_json("{\"p\": 2}").is_err());
    }

    #[test]
    fn tags_parse() {
        assert_eq!("student-t:4".parse::<DataModel>().unwrap(), DataModel::StudentT { nu: 4.0 });
        assert_eq!("matrix_normal".parse::<DataModel>().unwrap(), DataModel::MatrixNormal);
        assert_eq!("known-zero".parse::<MeanMode>().unwrap(), MeanMode::KnownZero);
        assert!("tyler".parse::<EstimatorTag>().is_err());
    }
}
