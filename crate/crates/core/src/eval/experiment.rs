// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::{default_delta, far_mdr, match_detections, ConfusionCounts, Metrics};
use super::synthetic::{generate_with_process, Preset, SyntheticSpec, Variant};
use crate::cusum::CusumSeries;
use crate::detect::{
    detect_multi, detect_single, ensemble_detect, online_detect, DetectOptions, DetectionResult,
    EnsembleConfig, OnlineConfig,
};
use crate::dre::DreConfig;
use crate::error::{Error, Result};
use crate::random::RandomSource;
use crate::ratio::RatioSource;
use crate::scalar::Scalar;
use crate::types::{SplitConfig, TimeSeries};

/// Data source for an experiment: a named preset or an explicit spec.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SyntheticSpec>,
    /// Split for an explicit spec (default `⌊n/2⌋`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_split: Option<usize>,
}

impl GeneratorConfig {
    pub fn preset(p: Preset) -> Self {
        Self {
            preset: Some(p),
            spec: None,
            t_split: None,
        }
    }

    pub fn label(&self) -> String {
        match (&self.preset, &self.spec) {
            (Some(p), _) => p.name().to_string(),
            _ => "custom".to_string(),
        }
    }

    pub fn variants(&self) -> Result<Vec<Variant>> {
        match (&self.preset, &self.spec) {
            (Some(p), None) => Ok(p.variants()),
            (None, Some(spec)) => {
                spec.validate()?;
                Ok(vec![Variant {
                    label: "custom".into(),
                    spec: spec.clone(),
                    t_split: self.t_split.unwrap_or(spec.n() / 2),
                }])
            }
            _ => Err(Error::Config {
                path: "generator".into(),
                message: "exactly one of `preset` or `spec` is required".into(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Single,
    Multi,
    Ensemble,
    Online,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioKind {
    /// Learn the ratio with `dre`.
    Learned,
    /// Exact ratio from the generating process.
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub pipeline: Pipeline,
    #[serde(default = "learned")]
    pub ratio: RatioKind,
    #[serde(default)]
    pub dre: DreConfig,
    /// Overrides the variant's split.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_split: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub online: Option<OnlineConfig>,
    #[serde(default)]
    pub options: DetectOptions,
    #[serde(default)]
    pub precision: Precision,
}

fn learned() -> RatioKind {
    RatioKind::Learned
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerConfig {
    #[default]
    FarMdr,
}

/// One generator × detector × scorer combination over a seed list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub generator: GeneratorConfig,
    pub detector: DetectorConfig,
    #[serde(default)]
    pub scorer: ScorerConfig,
    pub seeds: Vec<u64>,
    /// Matching radius; defaults to `max(5, ⌈0.02·n⌉)` per variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<usize>,
    /// Directory for per-trial CUSUM CSVs; none are written when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: 0.0,
                min: 0.0,
                max: 0.0,
            };
        }
        Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub seed: u64,
    pub detections: Vec<usize>,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub far: Summary,
    pub mdr: Summary,
    /// Metrics of the summed counts.
    pub pooled: Metrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantOutcome {
    pub label: String,
    pub n: usize,
    pub t_split: usize,
    pub delta: usize,
    pub truth: Vec<usize>,
    pub trials: Vec<TrialOutcome>,
    pub aggregate: Aggregate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub name: String,
    pub generator: String,
    pub detector: DetectorConfig,
    pub variants: Vec<VariantOutcome>,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiments: Vec<ExperimentOutcome>,
}

impl ExperimentReport {
    /// Plain-text aggregate table.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<28} {:<20} {:>6} {:>7} {:>10} {:>10}",
            "experiment", "variant", "trials", "delta", "FAR(mean)", "MDR(mean)"
        );
        for e in &self.experiments {
            for v in &e.variants {
                let _ = writeln!(
                    s,
                    "{:<28} {:<20} {:>6} {:>7} {:>9.4}% {:>9.2}%",
                    e.name,
                    v.label,
                    v.trials.len(),
                    v.delta,
                    100.0 * v.aggregate.far.mean,
                    100.0 * v.aggregate.mdr.mean
                );
            }
        }
        s
    }
}

/// Parses an experiment file: either one experiment object or
/// `{"experiments": [...]}`. Schema violations name the offending key.
pub fn parse_experiments(json: &str) -> Result<Vec<ExperimentConfig>> {
    let value: serde_json::Value = serde_json::from_str(json).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let config_err = |prefix: &str, e: serde_path_to_error::Error<serde_json::Error>| {
        let inner = e.path().to_string();
        let path = match (prefix.is_empty(), inner.as_str()) {
            (true, p) => p.to_string(),
            (false, ".") => prefix.to_string(),
            (false, p) => format!("{prefix}{}{p}", if p.starts_with('[') { "" } else { "." }),
        };
        Error::Config {
            path,
            message: e.into_inner().to_string(),
        }
    };
    match value {
        serde_json::Value::Object(ref map) if map.contains_key("experiments") => {
            if let Some(k) = map.keys().find(|k| *k != "experiments") {
                return Err(Error::Config {
                    path: k.clone(),
                    message: "unknown top-level key".into(),
                });
            }
            serde_path_to_error::deserialize(&map["experiments"])
                .map_err(|e| config_err("experiments", e))
        }
        other => serde_path_to_error::deserialize(&other)
            .map(|one| vec![one])
            .map_err(|e| config_err("", e)),
    }
}

/// Reads and runs an experiment file.
pub fn run_experiment(path: &Path) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(path)?;
    run_experiments(&parse_experiments(&text)?)
}

pub fn run_experiments(configs: &[ExperimentConfig]) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::default();
    for (i, cfg) in configs.iter().enumerate() {
        report.experiments.push(run_one(cfg, i)?);
    }
    Ok(report)
}

fn run_one(cfg: &ExperimentConfig, position: usize) -> Result<ExperimentOutcome> {
    let name = cfg
        .name
        .clone()
        .unwrap_or_else(|| format!("experiment{}", position + 1));
    let variants = cfg.generator.variants()?;
    if cfg.detector.pipeline == Pipeline::Online && cfg.detector.online.is_none() {
        return Err(Error::Config {
            path: format!("experiments[{position}].detector.online"),
            message: "the online pipeline needs an `online` block".into(),
        });
    }
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut outcomes = Vec::new();
    for v in &variants {
        let n = v.spec.n();
        let delta = cfg.delta.unwrap_or_else(|| default_delta(n));
        let t_split = cfg.detector.t_split.unwrap_or(v.t_split);
        let mut trials = Vec::with_capacity(cfg.seeds.len());
        for &seed in &cfg.seeds {
            let (detections, truth, cusums) = match cfg.detector.precision {
                Precision::F32 => run_trial::<f32>(cfg, v, t_split, seed)?,
                Precision::F64 => run_trial::<f64>(cfg, v, t_split, seed)?,
            };
            if let Some(dir) = &cfg.output_dir {
                for (label, cusum) in cusums {
                    let path = dir.join(format!("{name}_{}_seed{seed}_{label}.csv", v.label));
                    cusum.write_csv(BufWriter::new(File::create(path)?))?;
                }
            }
            let counts = match_detections(
                &detections,
                &crate::types::GroundTruth::new(truth, n)?,
                delta,
                n,
            )?;
            trials.push(TrialOutcome {
                seed,
                detections,
                metrics: far_mdr(&counts),
                counts,
            });
        }
        let fars: Vec<f64> = trials.iter().map(|t| t.metrics.far).collect();
        let mdrs: Vec<f64> = trials.iter().map(|t| t.metrics.mdr).collect();
        let pooled = trials
            .iter()
            .map(|t| t.counts)
            .reduce(ConfusionCounts::merge)
            .map(|c| far_mdr(&c))
            .unwrap_or(Metrics { far: 0.0, mdr: 0.0 });
        outcomes.push(VariantOutcome {
            label: v.label.clone(),
            n,
            t_split,
            delta,
            truth: v.spec.changes().to_vec(),
            aggregate: Aggregate {
                far: Summary::of(&fars),
                mdr: Summary::of(&mdrs),
                pooled,
            },
            trials,
        });
    }
    Ok(ExperimentOutcome {
        name,
        generator: cfg.generator.label(),
        detector: cfg.detector.clone(),
        variants: outcomes,
    })
}

type TrialResult = (Vec<usize>, Vec<usize>, Vec<(String, CusumSeries)>);

fn run_trial<F: Scalar>(
    cfg: &ExperimentConfig,
    v: &Variant,
    t_split: usize,
    seed: u64,
) -> Result<TrialResult> {
    let src = RandomSource::new(seed);
    let (series, process) = generate_with_process::<F>(&v.spec, &src.derive_named("data"))?;
    let source = match cfg.detector.ratio {
        RatioKind::Learned => RatioSource::Learned(cfg.detector.dre.clone()),
        RatioKind::Oracle => RatioSource::Oracle(process.clone()),
    };
    let results = detect_with(
        &cfg.detector,
        &series,
        t_split,
        &source,
        &src.derive_named("detect"),
    )?;
    let mut detections: Vec<usize> = results.iter().flat_map(DetectionResult::indices).collect();
    detections.sort_unstable();
    let cusums = results
        .iter()
        .flat_map(|r| {
            r.t_splits.iter().zip(&r.cusum).map(move |(t, c)| {
                let label = match r.window {
                    Some((from, _)) => format!("window{from}_split{t}"),
                    None => format!("split{t}"),
                };
                (label, c.clone())
            })
        })
        .collect();
    Ok((detections, process.changes().to_vec(), cusums))
}

/// Runs the configured pipeline on one series.
pub fn detect_with<F: Scalar>(
    det: &DetectorConfig,
    series: &TimeSeries<F>,
    t_split: usize,
    source: &RatioSource<F>,
    rng: &RandomSource,
) -> Result<Vec<DetectionResult>> {
    let opts = &det.options;
    Ok(match det.pipeline {
        Pipeline::Single => vec![detect_single(
            series,
            &SplitConfig::new(t_split),
            source,
            opts,
            rng,
        )?],
        Pipeline::Multi => vec![detect_multi(
            series,
            &SplitConfig::new(t_split),
            source,
            opts,
            rng,
        )?],
        Pipeline::Ensemble => {
            let e = det.ensemble.clone().unwrap_or_default();
            vec![ensemble_detect(series, &e, source, opts, rng)?]
        }
        Pipeline::Online => {
            let o = det.online.ok_or_else(|| Error::Config {
                path: "detector.online".into(),
                message: "missing".into(),
            })?;
            online_detect(series.rows().map(|r| r.to_owned()), &o, source, opts, rng)?
        }
    })
}
