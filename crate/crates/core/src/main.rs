use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use kpcov::diagnostics::{
    discriminant_2x2, random_init, rank_necessary_check, threshold_verdict, zeta_2x2, Setting,
};
use kpcov::gaussian::{default_init, gff_estimate};
use kpcov::harness::{
    error_exit_code, exit_code, format_sample_set, phase_csv, read_sample_set, run_phase, status_exit_code, DataModel,
    EstimateRecord, EstimatorTag, ExperimentConfig, MeanMode,
};
use kpcov::robust::rff_estimate;
use kpcov::sampling::{sample_elliptical, sample_matrix_normal, MatrixNormalParams};
use kpcov::{EstimationResult, Error, FlipFlopOptions, KroneckerPair, Matrix, Normalization, SampleSet, SpdMatrix};

#[derive(Parser)]
#[command(name = "kpcov", version, about = "Kronecker-structured covariance estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Record,
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a Kronecker covariance to a sample-set file.
    Estimate {
        input: PathBuf,
        #[arg(long, default_value = "gff", value_parser = parse::<EstimatorTag>)]
        estimator: EstimatorTag,
        #[arg(long, default_value = "unknown", value_parser = parse::<MeanMode>)]
        mean: MeanMode,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Number of starts; start 0 is the identity pair, the rest random.
        #[arg(long, default_value_t = 1)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Write a synthetic sample-set file (identity truth factors).
    Simulate {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        n: usize,
        /// matrix_normal, race or student_t(NU)
        #[arg(long, default_value = "matrix_normal", value_parser = parse::<DataModel>)]
        model: DataModel,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a phase-diagram experiment described by a JSON config.
    Phase {
        config: PathBuf,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        starts: Option<usize>,
        /// Run trials one at a time.
        #[arg(long)]
        serial: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Report sample-count regimes, rank checks and (2×2, n = 2) the discriminant.
    Diagnose {
        input: PathBuf,
        #[command(flatten)]
        output: Output,
    },
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fit(
    x: &SampleSet<f64>,
    estimator: EstimatorTag,
    mean: MeanMode,
    opts: &FlipFlopOptions,
    starts: usize,
    seed: u64,
) -> Result<EstimationResult<f64>, Error> {
    let run = |init: &KroneckerPair<f64>| match (estimator, mean) {
        (EstimatorTag::Gff, MeanMode::Unknown) => gff_estimate(x, init, None, opts),
        (EstimatorTag::Gff, MeanMode::KnownZero) => gff_estimate(x, init, Some(&Matrix::zeros(x.p(), x.q())), opts),
        (EstimatorTag::Rff, MeanMode::KnownZero) => rff_estimate(x, init, opts),
        (EstimatorTag::Rff, MeanMode::Unknown) => Err(Error::Config("rff requires --mean known_zero".into())),
    };
    let mut best = run(&default_init(x.p(), x.q()))?;
    for k in 1..starts {
        let cand = run(&random_init(x.p(), x.q(), seed, k, Normalization::SpectralP))?;
        let better = match (cand.converged(), best.converged()) {
            (true, false) => true,
            (true, true) => cand.final_objective() < best.final_objective(),
            _ => false,
        };
        if better {
            best = cand;
        }
    }
    Ok(best)
}

#[allow(clippy::too_many_arguments)]
fn estimate(
    input: &Path,
    estimator: EstimatorTag,
    mean: MeanMode,
    tol: f64,
    max_iters: Option<usize>,
    starts: usize,
    seed: u64,
    output: &Output,
) -> Result<i32, Error> {
    let x: SampleSet<f64> = read_sample_set(input)?;
    let mut opts = match estimator {
        EstimatorTag::Gff => FlipFlopOptions::gaussian(),
        EstimatorTag::Rff => FlipFlopOptions::robust(),
    }
    .with_tol(tol);
    if let Some(m) = max_iters {
        opts = opts.with_max_iters(m);
    }
    let res = fit(&x, estimator, mean, &opts, starts.max(1), seed)?;
    let record = EstimateRecord::new(estimator, mean, x.n(), &res);
    let text = match output.format.unwrap_or(Format::Record) {
        Format::Record => record.to_json() + "\n",
        Format::Csv => record.to_csv()?,
    };
    emit(output.out.as_deref(), &text)?;
    let code = status_exit_code(res.status);
    if code != exit_code::SUCCESS {
        eprintln!("kpcov: estimator stopped with status {:?} after {} sweeps", res.status, res.iterations);
    }
    Ok(code)
}

fn simulate(p: usize, q: usize, n: usize, model: DataModel, seed: u64, out: Option<&Path>) -> Result<i32, Error> {
    let x = match model {
        DataModel::MatrixNormal => sample_matrix_normal(&MatrixNormalParams::<f64>::standard(p, q), n, seed)?,
        m => sample_elliptical(p, q, &SpdMatrix::identity(p * q), m.tail(), n, seed)?,
    };
    emit(out, &format_sample_set(&x))?;
    Ok(exit_code::SUCCESS)
}

fn phase(
    config: &Path,
    seed: Option<u64>,
    tol: Option<f64>,
    max_iters: Option<usize>,
    starts: Option<usize>,
    serial: bool,
    output: &Output,
) -> Result<i32, Error> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(t) = tol {
        cfg.tolerances.tol = t;
    }
    if let Some(m) = max_iters {
        cfg.tolerances.max_iters = m;
    }
    if let Some(k) = starts {
        cfg.k_starts = k;
    }
    let (rows, _) = run_phase(&cfg, !serial)?;
    let text = match output.format.unwrap_or(Format::Csv) {
        Format::Csv => phase_csv(&rows)?,
        Format::Record => serde_json::to_string_pretty(&rows)? + "\n",
    };
    emit(output.out.as_deref(), &text)?;
    Ok(exit_code::SUCCESS)
}

fn diagnose(input: &Path, output: &Output) -> Result<i32, Error> {
    let x: SampleSet<f64> = read_sample_set(input)?;
    let (p, q, n) = (x.p(), x.q(), x.n());
    let mut settings = Vec::new();
    for s in Setting::ALL {
        let v = threshold_verdict(p, q, n, s)?;
        settings.push((s, v, rank_necessary_check(&x, s)));
    }
    let two_by_two = if p == 2 && q == 2 && n == 2 {
        Some((discriminant_2x2(&x.samples()[0], &x.samples()[1])?, zeta_2x2(&x)?))
    } else {
        None
    };

    let text = match output.format {
        Some(Format::Record) => {
            let modes: Vec<_> = settings
                .iter()
                .map(|(s, v, rank_ok)| {
                    json!({
                        "setting": s, "regime": v.regime, "lower": v.lower, "upper": v.upper, "rank_check": rank_ok,
                    })
                })
                .collect();
            let mut rec = json!({ "p": p, "q": q, "n": n, "settings": modes });
            if let Some((d, z)) = two_by_two {
                rec["discriminant"] = json!(d);
                rec["zeta"] = json!(z);
            }
            serde_json::to_string_pretty(&rec)? + "\n"
        }
        Some(Format::Csv) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["setting", "regime", "lower", "upper", "rank_check"])?;
            for (s, v, ok) in &settings {
                w.write_record([s.to_string(), v.regime.to_string(), v.lower.to_string(), v.upper.to_string(), ok.to_string()])?;
            }
            String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("utf-8")
        }
        None => {
            let mut s = format!("samples: p={p} q={q} n={n}\n");
            for (setting, v, ok) in &settings {
                s += &format!(
                    "{setting}: {} (no unique minimum below {:.6}, unique above {:.6}); rank check {}\n",
                    v.regime,
                    v.lower,
                    v.upper,
                    if *ok { "passed" } else { "FAILED" }
                );
            }
            if let Some((d, z)) = two_by_two {
                s += &format!("discriminant D = {d}\nzeta = {z}\n");
            }
            s
        }
    };
    emit(output.out.as_deref(), &text)?;
    Ok(exit_code::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit_code::PARSE_OR_CONFIG as u8 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Estimate { input, estimator, mean, tol, max_iters, starts, seed, output } => {
            estimate(input, *estimator, *mean, *tol, *max_iters, *starts, *seed, output)
        }
        Command::Simulate { p, q, n, model, seed, out } => simulate(*p, *q, *n, *model, *seed, out.as_deref()),
        Command::Phase { config, seed, tol, max_iters, starts, serial, output } => {
            phase(config, *seed, *tol, *max_iters, *starts, *serial, output)
        }
        Command::Diagnose { input, output } => diagnose(input, output),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("kpcov: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
