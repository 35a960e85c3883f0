// SPDX-License-Identifier: MIT OR Apache-2.0

//! Detection pipelines: single change, multiple changes from one split,
//! multi-split ensembles and sliding-window streams.

mod ensemble;
mod online;
mod pipeline;

use serde::{Deserialize, Serialize};

use crate::cusum::{CusumSeries, SegmentationConfig, DEFAULT_A_CLIP};
use crate::random::RandomSource;
use crate::ratio::RatioSourceEcho;
use crate::types::ChangePointEstimate;

pub use ensemble::{ensemble_detect, EnsembleConfig, EnsembleStrategy};
pub use online::{online_detect, OnlineConfig, OnlineDetector, WindowMode};
pub use pipeline::{detect_multi, detect_single};

/// Settings shared by every pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectOptions {
    pub segmentation: SegmentationConfig,
    /// Log-ratio clip bound `A`.
    pub a_clip: f64,
    /// Radius for matching a candidate across re-splits; defaults to the
    /// segmentation `min_gap`.
    pub vote_tolerance: Option<usize>,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            segmentation: SegmentationConfig::default(),
            a_clip: DEFAULT_A_CLIP,
            vote_tolerance: None,
        }
    }
}

impl DetectOptions {
    pub fn vote_tolerance_for(&self, n: usize) -> usize {
        self.vote_tolerance
            .unwrap_or_else(|| self.segmentation.min_gap_for(n))
    }

    pub fn validate(&self) -> crate::Result<()> {
        self.segmentation.validate()?;
        if !(self.a_clip > 0.0) {
            return Err(crate::Error::invalid("a_clip must be positive"));
        }
        Ok(())
    }
}

/// Which pipeline produced a result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMode {
    Single,
    Multi,
    Ensemble,
    Online,
}

/// Configuration echo attached to every result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub mode: DetectionMode,
    pub ratio: RatioSourceEcho,
    pub options: DetectOptions,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub online: Option<OnlineConfig>,
}

/// Output of a detection pipeline. Indices are 1-based and global; for
/// online windows `t_splits` are local to `window`.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionResult {
    pub change_points: Vec<ChangePointEstimate>,
    /// Strongest candidate when none verified (single-change pipeline only).
    pub diagnostic: Option<ChangePointEstimate>,
    /// One statistic per split, in `t_splits` order.
    pub cusum: Vec<CusumSeries>,
    pub t_splits: Vec<usize>,
    /// Global `[from, to]` of the analysed window, for streaming results.
    pub window: Option<(usize, usize)>,
    pub config_echo: ConfigEcho,
    pub seed: RandomSource,
}

impl DetectionResult {
    pub fn indices(&self) -> Vec<usize> {
        self.change_points.iter().map(|c| c.index).collect()
    }

    pub fn report(&self) -> DetectionReport {
        DetectionReport {
            change_points: self
                .change_points
                .iter()
                .map(|c| ReportedChange {
                    index: c.index,
                    magnitude: c.magnitude,
                    verified: c.verified,
                })
                .collect(),
            diagnostic: self.diagnostic.map(|c| ReportedChange {
                index: c.index,
                magnitude: c.magnitude,
                verified: c.verified,
            }),
            t_splits: self.t_splits.clone(),
            window: self.window,
            seed: self.seed,
            config: self.config_echo.clone(),
        }
    }
}

/// JSON shape of a [`DetectionResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub change_points: Vec<ReportedChange>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostic: Option<ReportedChange>,
    pub t_splits: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub window: Option<(usize, usize)>,
    pub seed: RandomSource,
    pub config: ConfigEcho,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportedChange {
    pub index: usize,
    pub magnitude: f64,
    pub verified: bool,
}
