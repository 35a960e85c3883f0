// SPDX-License-Identifier: MIT OR Apache-2.0

//! Per-instant log-ratios for a split series, either learned from the data or
//! computed exactly from a known generating process.

use ndarray::Axis;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::cusum::{compute_cusum_with, CusumSeries, CusumSource};
use crate::distributions::{oracle_log_ratio, PiecewiseGaussian};
use crate::dre::{train, DreConfig, TrainReport};
use crate::error::{Error, Result};
use crate::random::RandomSource;
use crate::scalar::Scalar;
use crate::types::{check_split, TimeSeries};

/// How `log ŵ(x_t)` is obtained for a given split.
#[derive(Clone, Debug, PartialEq)]
pub enum RatioSource<F: Scalar> {
    /// Train a ratio model on the two halves.
    Learned(DreConfig),
    /// Exact ratio of the two halves' mixture densities under a known
    /// generating process.
    Oracle(PiecewiseGaussian<F>),
}

/// Scores every row with a model that never saw it. Rows of each side are
/// shuffled into `folds` groups; model `k` trains on all groups but `k` and
/// scores group `k`. The returned report averages the per-fold diagnostics.
fn cross_fit<F: Scalar>(
    config: &DreConfig,
    series: &TimeSeries<F>,
    t_split: usize,
    folds: usize,
    rng: &RandomSource,
) -> Result<(Vec<f64>, Option<TrainReport>)> {
    let n = series.n();
    let mut shuffler = rng.derive_named("folds").rng();
    let mut fold_of = vec![0usize; n];
    for (lo, hi) in [(0, t_split), (t_split, n)] {
        let mut idx: Vec<usize> = (lo..hi).collect();
        idx.shuffle(&mut shuffler);
        for (j, i) in idx.into_iter().enumerate() {
            fold_of[i] = j % folds;
        }
    }
    let data = series.data();
    let mut out = vec![0.0; n];
    let mut reports = Vec::with_capacity(folds);
    for k in 0..folds {
        let pick = |lo: usize, hi: usize| -> Vec<usize> {
            (lo..hi).filter(|&i| fold_of[i] != k).collect()
        };
        let left = data.select(Axis(0), &pick(0, t_split));
        let right = data.select(Axis(0), &pick(t_split, n));
        let (model, report) = train(config, left.view(), right.view(), &rng.derive(k as u64))?;
        let held: Vec<usize> = (0..n).filter(|&i| fold_of[i] == k).collect();
        let w = model.predict_batch(data.select(Axis(0), &held).view())?;
        for (&i, w) in held.iter().zip(w.iter()) {
            out[i] = w.ln().as_f64();
        }
        reports.push(report);
    }
    let m = folds as f64;
    let mut report = reports[0].clone();
    report.final_objective = reports.iter().map(|r| r.final_objective).sum::<f64>() / m;
    report.normalization_residual = reports
        .iter()
        .map(|r| r.normalization_residual)
        .sum::<f64>()
        / m;
    report.iterations_run = reports.iter().map(|r| r.iterations_run).max().unwrap_or(0);
    Ok((out, Some(report)))
}

/// Serializable summary of a [`RatioSource`] for result echoes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RatioSourceEcho {
    Learned { dre: DreConfig },
    Oracle { changes: Vec<usize> },
}

/// Log-ratios and the statistic built from them for one split.
#[derive(Clone, Debug)]
pub struct SplitStatistic {
    pub cusum: CusumSeries,
    pub train_report: Option<TrainReport>,
}

impl<F: Scalar> RatioSource<F> {
    pub fn cusum_source(&self) -> CusumSource {
        match self {
            Self::Learned(_) => CusumSource::EstimatedRatio,
            Self::Oracle(_) => CusumSource::OracleRatio,
        }
    }

    pub fn echo(&self) -> RatioSourceEcho {
        match self {
            Self::Learned(dre) => RatioSourceEcho::Learned { dre: dre.clone() },
            Self::Oracle(p) => RatioSourceEcho::Oracle {
                changes: p.changes().to_vec(),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Learned(c) => c.validate(),
            Self::Oracle(_) => Ok(()),
        }
    }

    /// `log p_left(x_t) − log p_right(x_t)` for every row of `series`, whose
    /// first row sits at global index `origin`. Left covers rows
    /// `1..=t_split`.
    pub fn log_ratios(
        &self,
        series: &TimeSeries<F>,
        origin: usize,
        t_split: usize,
        rng: &RandomSource,
    ) -> Result<(Vec<f64>, Option<TrainReport>)> {
        let n = series.n();
        check_split(n, t_split)?;
        match self {
            Self::Learned(config) => {
                let folds = config.cross_fit_folds();
                if folds == 1 {
                    let (model, report) = train(
                        config,
                        series.range(1, t_split),
                        series.range(t_split + 1, n),
                        rng,
                    )?;
                    let lr = model
                        .log_ratios(series)?
                        .into_iter()
                        .map(Scalar::as_f64)
                        .collect();
                    return Ok((lr, Some(report)));
                }
                cross_fit(config, series, t_split, folds, rng)
            }
            Self::Oracle(process) => {
                if origin == 0 || origin + n - 1 > process.n() {
                    return Err(Error::bounds(format!(
                        "window [{origin}, {}] outside the oracle process of length {}",
                        origin + n - 1,
                        process.n()
                    )));
                }
                if series.d() != process.dim() {
                    return Err(Error::dims(process.dim(), series.d()));
                }
                let (left, right) = process.split_mixtures(origin, origin + n - 1, t_split)?;
                let lr = series
                    .rows()
                    .map(|x| oracle_log_ratio(&left, &right, x).map(Scalar::as_f64))
                    .collect::<Result<Vec<_>>>()?;
                Ok((lr, None))
            }
        }
    }

    /// The clipped statistic for one split.
    pub fn statistic(
        &self,
        series: &TimeSeries<F>,
        origin: usize,
        t_split: usize,
        a_clip: f64,
        rng: &RandomSource,
    ) -> Result<SplitStatistic> {
        let (lr, train_report) = self.log_ratios(series, origin, t_split, rng)?;
        let cusum = compute_cusum_with(&lr, t_split, self.cusum_source(), a_clip)?;
        Ok(SplitStatistic {
            cusum,
            train_report,
        })
    }
}
