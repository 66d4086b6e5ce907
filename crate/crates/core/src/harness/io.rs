use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{EstimatorTag, MeanMode};
use crate::error::{Error, Result};
use crate::estimation::{EstimationResult, Status};
use crate::linalg::Matrix;
use crate::sampling::SampleSet;
use crate::scalar::Scalar;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Parses the sample-set text format.
///
/// ```text
/// # comment
/// p q n
/// x11 x12 ... x1q      <- sample 1, row 1
/// ...                  <- p rows per sample, n samples
/// ```
///
/// `#` starts a comment anywhere on a line; blank lines are ignored.
pub fn parse_sample_set<T: Scalar>(text: &str) -> Result<SampleSet<T>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| parse_err(0, "empty input: missing `p q n` header"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|tok| tok.parse::<usize>().map_err(|_| parse_err(hline, format!("header entry `{tok}` is not a count"))))
        .collect::<Result<_>>()?;
    let [p, q, n] = dims[..] else {
        return Err(parse_err(hline, format!("header needs exactly `p q n`, got {} fields", dims.len())));
    };
    if p == 0 || q == 0 || n == 0 {
        return Err(parse_err(hline, "p, q and n must be positive"));
    }

    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let mut data = Vec::with_capacity(p * q);
        for r in 0..p {
            let (lno, line) = lines
                .next()
                .ok_or_else(|| parse_err(0, format!("unexpected end of input in sample {} row {}", k + 1, r + 1)))?;
            let before = data.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| parse_err(lno, format!("`{tok}` is not a number")))?;
                if !v.is_finite() {
                    return Err(parse_err(lno, format!("non-finite entry `{tok}`")));
                }
                data.push(T::lit(v));
            }
            if data.len() - before != q {
                return Err(parse_err(lno, format!("expected {q} entries, found {}", data.len() - before)));
            }
        }
        samples.push(Matrix::from_vec(p, q, data)?);
    }
    if let Some((lno, _)) = lines.next() {
        return Err(parse_err(lno, format!("trailing data after {n} samples")));
    }
    SampleSet::new(p, q, samples)
}

pub fn read_sample_set<T: Scalar>(path: &Path) -> Result<SampleSet<T>> {
    parse_sample_set(&std::fs::read_to_string(path)?)
}

/// Formats a sample set; values are written in shortest round-trip form.
pub fn format_sample_set<T: Scalar>(x: &SampleSet<T>) -> String {
    let mut out = format!("{} {} {}\n", x.p(), x.q(), x.n());
    for (k, s) in x.iter().enumerate() {
        let _ = writeln!(out, "# sample {}", k + 1);
        for r in 0..x.p() {
            let row: Vec<String> = s.row(r).iter().map(|v| format!("{}", v.as_f64())).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn write_sample_set<T: Scalar>(path: &Path, x: &SampleSet<T>) -> Result<()> {
    std::fs::write(path, format_sample_set(x))?;
    Ok(())
}

pub type MatrixRows = Vec<Vec<f64>>;

fn rows<T: Scalar>(m: &Matrix<T>) -> MatrixRows {
    (0..m.rows()).map(|r| m.row(r).iter().map(|v| v.as_f64()).collect()).collect()
}

/// Structured result of `kpcov estimate`, serialized as JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub estimator: EstimatorTag,
    pub mean_mode: MeanMode,
    pub p: usize,
    pub q: usize,
    pub n: usize,
    pub status: Status,
    pub iterations: usize,
    pub residual: f64,
    pub objective: f64,
    pub p_factor: MatrixRows,
    pub q_factor: MatrixRows,
    pub mean: MatrixRows,
    pub objective_trace: Vec<f64>,
}

impl EstimateRecord {
    pub fn new<T: Scalar>(estimator: EstimatorTag, mean_mode: MeanMode, n: usize, res: &EstimationResult<T>) -> Self {
        let (p, q) = res.pair.dims();
        Self {
            estimator,
            mean_mode,
            p,
            q,
            n,
            status: res.status,
            iterations: res.iterations,
            residual: res.residual.as_f64(),
            objective: res.final_objective().as_f64(),
            p_factor: rows(res.pair.p_factor().matrix()),
            q_factor: rows(res.pair.q_factor().matrix()),
            mean: rows(&res.mean),
            objective_trace: res.objective_trace.iter().map(|v| v.as_f64()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    /// Long-format CSV: `kind,i,j,value` with kinds `p_factor`, `q_factor`,
    /// `mean` and `objective` (trace index in `i`).
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["kind", "i", "j", "value"])?;
        for (kind, m) in [("p_factor", &self.p_factor), ("q_factor", &self.q_factor), ("mean", &self.mean)] {
            for (i, row) in m.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    w.write_record([kind.to_string(), i.to_string(), j.to_string(), v.to_string()])?;
                }
            }
        }
        for (i, v) in self.objective_trace.iter().enumerate() {
            w.write_record(["objective".to_string(), i.to_string(), "0".to_string(), v.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
