// SPDX-License-Identifier: MIT OR Apache-2.0

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::ChangePointEstimate;

/// Default bound `A` applied to each log-ratio before accumulation.
pub const DEFAULT_A_CLIP: f64 = 10.0;

/// Where the log-ratios feeding a statistic came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CusumSource {
    OracleRatio,
    EstimatedRatio,
}

/// Running sum `S(t) = Σ_{j ≤ t} clip(log ŵ(x_j))`, `t = 1..n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CusumSeries {
    values: Vec<f64>,
    source: CusumSource,
    t_split: usize,
    a_clip: f64,
}

impl CusumSeries {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// `S(1), …, S(n)`, stored 0-based.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `S(t)` for 1-based `t`.
    pub fn at(&self, t: usize) -> f64 {
        self.values[t - 1]
    }

    pub fn source(&self) -> CusumSource {
        self.source
    }

    pub fn t_split(&self) -> usize {
        self.t_split
    }

    pub fn a_clip(&self) -> f64 {
        self.a_clip
    }

    /// The clipped log-ratios, recovered as first differences.
    pub fn increments(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.values
            .iter()
            .map(|&s| {
                let r = s - prev;
                prev = s;
                r
            })
            .collect()
    }

    /// Writes `t,S(t)` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,S(t)")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, v)?;
        }
        Ok(())
    }
}

/// Accumulates log-ratios clipped to `±DEFAULT_A_CLIP`.
pub fn compute_cusum(log_ratios: &[f64], t_split: usize) -> Result<CusumSeries> {
    compute_cusum_with(
        log_ratios,
        t_split,
        CusumSource::EstimatedRatio,
        DEFAULT_A_CLIP,
    )
}

pub fn compute_cusum_with(
    log_ratios: &[f64],
    t_split: usize,
    source: CusumSource,
    a_clip: f64,
) -> Result<CusumSeries> {
    if log_ratios.is_empty() {
        return Err(Error::invalid("no log-ratios to accumulate"));
    }
    if !(a_clip > 0.0) {
        return Err(Error::invalid(format!(
            "clip bound must be positive, got {a_clip}"
        )));
    }
    if let Some(t) = log_ratios.iter().position(|r| !r.is_finite()) {
        return Err(Error::invalid(format!(
            "log-ratio at t={} is not finite",
            t + 1
        )));
    }
    let mut acc = 0.0;
    let values = log_ratios
        .iter()
        .map(|&r| {
            acc += r.clamp(-a_clip, a_clip);
            acc
        })
        .collect();
    Ok(CusumSeries {
        values,
        source,
        t_split,
        a_clip,
    })
}

/// Maximizer of `S`, with a flag for peaks at either end of the series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxEstimate {
    pub estimate: ChangePointEstimate,
    /// The maximum sits at `t = 1` or `t = n`: no interior peak.
    pub degenerate: bool,
}

/// Smallest index attaining the maximum of `S`, with local slopes from
/// least-squares fits over `window` points on each side.
pub fn argmax_estimator(series: &CusumSeries, window: usize) -> ArgmaxEstimate {
    let s = series.values();
    let mut best = 0;
    for (i, v) in s.iter().enumerate() {
        if *v > s[best] {
            best = i;
        }
    }
    let index = best + 1;
    let n = s.len();
    let w = window.max(1);
    let before = local_slope(s, best.saturating_sub(w), best);
    let after = local_slope(s, best, (best + w).min(n - 1));
    ArgmaxEstimate {
        estimate: ChangePointEstimate::new(index, before, after),
        degenerate: index == 1 || index == n,
    }
}

/// Least-squares slope of `s[lo..=hi]` against its index; 0 for fewer than
/// two points.
pub(crate) fn local_slope(s: &[f64], lo: usize, hi: usize) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let m = (hi - lo + 1) as f64;
    let xbar = (lo + hi) as f64 / 2.0;
    let ybar = s[lo..=hi].iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, y) in s[lo..=hi].iter().enumerate() {
        let dx = (lo + k) as f64 - xbar;
        sxy += dx * (y - ybar);
        sxx += dx * dx;
    }
    sxy / sxx
}
