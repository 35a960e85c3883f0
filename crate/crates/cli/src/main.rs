// SPDX-License-Identifier: MIT OR Apache-2.0

mod checks;
mod failure;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use drecusum::detect::{
    detect_multi, detect_single, ensemble_detect, online_detect, DetectOptions, DetectionResult,
    EnsembleConfig, OnlineConfig, WindowMode,
};
use drecusum::dre::{DreConfig, KernelConfig, MlpConfig, Objective};
use drecusum::eval::{generate_with_process, run_experiment, Preset, SyntheticSpec};
use drecusum::io::{read_series_csv, write_ground_truth, write_series_csv};
use drecusum::ratio::RatioSource;
use drecusum::{RandomSource, Scalar, SplitConfig, TimeSeries};

use failure::{Failure, Outcome};

#[derive(Parser)]
#[command(
    name = "drecusum",
    version,
    about = "Change-point detection from cumulative log density ratios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Offline detection on a CSV series.
    Detect(DetectArgs),
    /// Sliding-window detection over a CSV series read as a stream.
    DetectOnline(OnlineArgs),
    /// Write a synthetic series and its ground truth.
    Simulate(SimulateArgs),
    /// Run a batch experiment file and print FAR/MDR.
    Evaluate(EvaluateArgs),
    /// Compare closed-form expected slopes with sampled ones.
    OracleCheck(checks::OracleArgs),
    /// Empirical check of the (alpha, beta)-accuracy bound.
    TheoremCheck(checks::TheoremArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Kernel,
    Mlp,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Kliep,
    Lsif,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    F32,
    F64,
}

#[derive(Args)]
struct ModelFlags {
    #[arg(long, value_enum, default_value = "mlp")]
    model: ModelArg,
    #[arg(long, value_enum, default_value = "kliep")]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "f32")]
    precision: PrecisionArg,
}

impl ModelFlags {
    fn dre(&self) -> DreConfig {
        let objective = match self.objective {
            ObjectiveArg::Kliep => Objective::Kliep,
            ObjectiveArg::Lsif => Objective::Lsif,
        };
        match self.model {
            ModelArg::Kernel => DreConfig::Kernel(KernelConfig {
                objective,
                ..KernelConfig::default()
            }),
            ModelArg::Mlp => DreConfig::Mlp(MlpConfig {
                objective,
                ..MlpConfig::default()
            }),
        }
    }
}

#[derive(Args)]
struct DetectArgs {
    /// Series CSV: no header, one row per time step.
    #[arg(long)]
    input: PathBuf,
    /// Split index, or `auto` for n/2.
    #[arg(long, default_value = "auto")]
    t_split: String,
    /// Keep every change that reappears after re-splitting instead of
    /// requiring a single verified change.
    #[arg(long, conflicts_with = "ensemble")]
    multi: bool,
    /// Comma-separated split points for an ensemble run.
    #[arg(long)]
    ensemble: Option<String>,
    #[command(flatten)]
    model: ModelFlags,
    /// Result JSON; printed to standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CUSUM CSV, one `S` column per split.
    #[arg(long)]
    cusum_out: Option<PathBuf>,
}

#[derive(Args)]
struct OnlineArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    window: usize,
    /// Defaults to half the window.
    #[arg(long)]
    stride: Option<usize>,
    /// Restart windows right after each detected change.
    #[arg(long)]
    adaptive: bool,
    #[command(flatten)]
    model: ModelFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, required_unless_present = "spec", conflicts_with = "spec")]
    preset: Option<String>,
    /// Synthetic spec JSON file.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Variant label for presets with several variants (default: first).
    #[arg(long)]
    variant: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Full report JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Detect(a) => cmd_detect(&a),
        Command::DetectOnline(a) => cmd_detect_online(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::OracleCheck(a) => checks::cmd_oracle_check(&a),
        Command::TheoremCheck(a) => checks::cmd_theorem_check(&a),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => ExitCode::from(3),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn read_series<F: Scalar>(path: &Path) -> Result<TimeSeries<F>, Failure> {
    let file = File::open(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    read_series_csv(BufReader::new(file))
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    match out {
        Some(path) => {
            let mut w = create(path)?;
            writeln!(w, "{text}").map_err(|e| Failure::Runtime(e.to_string()))?;
            w.flush().map_err(|e| Failure::Runtime(e.to_string()))
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn parse_splits(s: &str) -> Result<Vec<usize>, Failure> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Failure::Usage(format!("bad split point `{p}` in --ensemble")))
        })
        .collect()
}

fn cmd_detect(a: &DetectArgs) -> Result<Outcome, Failure> {
    match a.model.precision {
        PrecisionArg::F32 => detect_typed::<f32>(a),
        PrecisionArg::F64 => detect_typed::<f64>(a),
    }
}

fn detect_typed<F: Scalar>(a: &DetectArgs) -> Result<Outcome, Failure> {
    let series = read_series::<F>(&a.input)?;
    let n = series.n();
    let t_split = match a.t_split.as_str() {
        "auto" => n / 2,
        s => s.parse::<usize>().map_err(|_| {
            Failure::Usage(format!("--t-split expects an integer or `auto`, got `{s}`"))
        })?,
    };
    if t_split < 2 || t_split + 1 > n {
        return Err(Failure::Usage(format!(
            "--t-split {t_split} must lie in [2, {}]",
            n.saturating_sub(1)
        )));
    }
    let source = RatioSource::Learned(a.model.dre());
    let opts = DetectOptions::default();
    let rng = RandomSource::new(a.model.seed);
    let result = match &a.ensemble {
        Some(list) => {
            let cfg = EnsembleConfig {
                split_points: Some(parse_splits(list)?),
                ..EnsembleConfig::default()
            };
            ensemble_detect(&series, &cfg, &source, &opts, &rng)?
        }
        None if a.multi => detect_multi(&series, &SplitConfig::new(t_split), &source, &opts, &rng)?,
        None => detect_single(&series, &SplitConfig::new(t_split), &source, &opts, &rng)?,
    };
    if let Some(path) = &a.cusum_out {
        write_cusum_columns(&result, path)?;
    }
    emit_json(&result.report(), a.out.as_deref())?;
    Ok(Outcome::Pass)
}

fn write_cusum_columns(result: &DetectionResult, path: &Path) -> Result<(), Failure> {
    let mut w = create(path)?;
    let io = |e: std::io::Error| Failure::Runtime(e.to_string());
    if let [only] = result.cusum.as_slice() {
        only.write_csv(&mut w)?;
        return w.flush().map_err(io);
    }
    let header: Vec<String> = result
        .t_splits
        .iter()
        .map(|t| format!("S_{t}(t)"))
        .collect();
    writeln!(w, "t,{}", header.join(",")).map_err(io)?;
    let n = result.cusum.first().map_or(0, |c| c.n());
    for t in 1..=n {
        let row: Vec<String> = result.cusum.iter().map(|c| c.at(t).to_string()).collect();
        writeln!(w, "{t},{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn cmd_detect_online(a: &OnlineArgs) -> Result<Outcome, Failure> {
    match a.model.precision {
        PrecisionArg::F32 => online_typed::<f32>(a),
        PrecisionArg::F64 => online_typed::<f64>(a),
    }
}

fn online_typed<F: Scalar>(a: &OnlineArgs) -> Result<Outcome, Failure> {
    let series = read_series::<F>(&a.input)?;
    let cfg = OnlineConfig {
        window_len: a.window,
        stride: a.stride,
        mode: if a.adaptive {
            WindowMode::AdaptiveWindow
        } else {
            WindowMode::FixedWindow
        },
    };
    let source = RatioSource::Learned(a.model.dre());
    let results = online_detect(
        series.rows().map(|r| r.to_owned()),
        &cfg,
        &source,
        &DetectOptions::default(),
        &RandomSource::new(a.model.seed),
    )
    .map_err(|e| match e {
        drecusum::Error::InvalidInput(m) => Failure::Usage(m),
        other => other.into(),
    })?;
    let reports: Vec<_> = results.iter().map(DetectionResult::report).collect();
    emit_json(&reports, a.out.as_deref())?;
    Ok(Outcome::Pass)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<Outcome, Failure> {
    let spec = match (&a.preset, &a.spec) {
        (Some(name), _) => {
            let preset = Preset::parse(name).ok_or_else(|| {
                let known: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
                Failure::Usage(format!(
                    "unknown preset `{name}`; expected one of {}",
                    known.join(", ")
                ))
            })?;
            let variants = preset.variants();
            match &a.variant {
                None => variants[0].spec.clone(),
                Some(label) => variants
                    .iter()
                    .find(|v| &v.label == label)
                    .map(|v| v.spec.clone())
                    .ok_or_else(|| {
                        let known: Vec<&str> = variants.iter().map(|v| v.label.as_str()).collect();
                        Failure::Usage(format!(
                            "unknown variant `{label}`; expected one of {}",
                            known.join(", ")
                        ))
                    })?,
            }
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<SyntheticSpec>(&text)
                .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?
        }
        (None, None) => {
            return Err(Failure::Usage(
                "one of --preset or --spec is required".into(),
            ))
        }
    };
    spec.validate().map_err(|e| Failure::Data(e.to_string()))?;
    let src = RandomSource::new(a.seed);
    let (series, process) = generate_with_process::<f64>(&spec, &src.derive_named("data"))?;
    let mut w = create(&a.out)?;
    write_series_csv(&series, &mut w)?;
    w.flush().map_err(|e| Failure::Runtime(e.to_string()))?;
    if let Some(path) = &a.truth_out {
        let mut w = create(path)?;
        write_ground_truth(&process.ground_truth(), &mut w)?;
        w.flush().map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    Ok(Outcome::Pass)
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<Outcome, Failure> {
    let report = run_experiment(&a.config).map_err(|e| match e {
        drecusum::Error::Io(m) => Failure::Data(format!("{}: {m}", a.config.display())),
        other => other.into(),
    })?;
    print!("{}", report.table());
    if let Some(path) = &a.out {
        emit_json(&report, Some(path))?;
    }
    Ok(Outcome::Pass)
}
