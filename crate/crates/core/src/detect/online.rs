// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::VecDeque;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::pipeline::{analyse, Rule};
use super::{ConfigEcho, DetectOptions, DetectionMode, DetectionResult};
use crate::error::{Error, Result};
use crate::random::RandomSource;
use crate::ratio::RatioSource;
use crate::scalar::Scalar;
use crate::types::{SplitConfig, TimeSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// Windows advance by `stride` regardless of detections.
    FixedWindow,
    /// After a detection the next window starts right after the latest
    /// detected change.
    AdaptiveWindow,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnlineConfig {
    pub window_len: usize,
    /// Defaults to `window_len / 2`.
    #[serde(default)]
    pub stride: Option<usize>,
    #[serde(default = "default_mode")]
    pub mode: WindowMode,
}

fn default_mode() -> WindowMode {
    WindowMode::FixedWindow
}

impl OnlineConfig {
    pub fn new(window_len: usize) -> Self {
        Self {
            window_len,
            stride: None,
            mode: WindowMode::FixedWindow,
        }
    }

    pub fn stride(&self) -> usize {
        self.stride.unwrap_or(self.window_len / 2)
    }

    fn validate(&self, opts: &DetectOptions) -> Result<()> {
        let gap = opts.segmentation.min_gap_for(self.window_len);
        if self.window_len < 4 * gap || self.window_len < 4 {
            return Err(Error::invalid(format!(
                "window_len {} must be at least 4*min_gap = {}",
                self.window_len,
                4 * gap
            )));
        }
        if self.stride() == 0 {
            return Err(Error::invalid("stride must be at least 1"));
        }
        Ok(())
    }
}

/// Incremental windowed detector. Feed observations with [`push`]; a result
/// is returned whenever a completed window yields changes not already
/// reported.
///
/// [`push`]: OnlineDetector::push
pub struct OnlineDetector<F: Scalar> {
    cfg: OnlineConfig,
    source: RatioSource<F>,
    opts: DetectOptions,
    rng: RandomSource,
    buffer: VecDeque<Array1<F>>,
    /// Global index of `buffer[0]`.
    buffer_origin: usize,
    /// Global index where the next window starts.
    next_origin: usize,
    seen: usize,
    emitted: Vec<usize>,
    dim: Option<usize>,
}

impl<F: Scalar> OnlineDetector<F> {
    pub fn new(
        cfg: OnlineConfig,
        source: RatioSource<F>,
        opts: DetectOptions,
        rng: RandomSource,
    ) -> Result<Self> {
        opts.validate()?;
        source.validate()?;
        cfg.validate(&opts)?;
        Ok(Self {
            cfg,
            source,
            opts,
            rng,
            buffer: VecDeque::new(),
            buffer_origin: 1,
            next_origin: 1,
            seen: 0,
            emitted: Vec::new(),
            dim: None,
        })
    }

    /// Every change index reported so far, in emission order.
    pub fn emitted(&self) -> &[usize] {
        &self.emitted
    }

    pub fn push(&mut self, x: Array1<F>) -> Result<Option<DetectionResult>> {
        match self.dim {
            None => self.dim = Some(x.len()),
            Some(d) if d != x.len() => return Err(Error::dims(d, x.len())),
            _ => {}
        }
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "observation {} has a non-finite value in column {}",
                self.seen + 1,
                j + 1
            )));
        }
        self.seen += 1;
        if self.seen >= self.next_origin {
            self.buffer.push_back(x);
        }
        let len = self.cfg.window_len;
        if self.seen + 1 < self.next_origin + len {
            return Ok(None);
        }
        let result = self.run_window()?;
        // Drop rows the next window no longer needs.
        while self.buffer_origin < self.next_origin && !self.buffer.is_empty() {
            self.buffer.pop_front();
            self.buffer_origin += 1;
        }
        if self.buffer.is_empty() {
            self.buffer_origin = self.next_origin;
        }
        Ok(result)
    }

    fn run_window(&mut self) -> Result<Option<DetectionResult>> {
        let len = self.cfg.window_len;
        let origin = self.next_origin;
        let skip = origin - self.buffer_origin;
        let d = self.dim.expect("set on first push");
        let mut data = Array2::zeros((len, d));
        for (i, row) in self.buffer.iter().skip(skip).take(len).enumerate() {
            data.row_mut(i).assign(row);
        }
        let window = TimeSeries::new(data)?;
        let split = SplitConfig::new(len / 2);
        let a = analyse(
            &window,
            origin,
            &split,
            &self.source,
            &self.opts,
            &self.rng,
            Rule::Reappear,
            &self.emitted,
        )?;
        let tol = self.opts.vote_tolerance_for(len);

        let mut fresh = Vec::new();
        let mut latest = None;
        for mut c in a.changes {
            c.index += origin - 1;
            latest = Some(latest.map_or(c.index, |l: usize| l.max(c.index)));
            if self.emitted.iter().all(|e| e.abs_diff(c.index) > tol) {
                self.emitted.push(c.index);
                fresh.push(c);
            }
        }
        self.next_origin = match (self.cfg.mode, latest) {
            (WindowMode::AdaptiveWindow, Some(l)) => (l + 1).max(origin + 1),
            _ => origin + self.cfg.stride(),
        };
        if fresh.is_empty() {
            return Ok(None);
        }
        Ok(Some(DetectionResult {
            change_points: fresh,
            diagnostic: None,
            cusum: vec![a.cusum],
            t_splits: vec![split.t_split],
            window: Some((origin, origin + len - 1)),
            config_echo: ConfigEcho {
                mode: DetectionMode::Online,
                ratio: self.source.echo(),
                options: self.opts,
                ensemble: None,
                online: Some(self.cfg),
            },
            seed: self.rng,
        }))
    }
}

/// Runs an [`OnlineDetector`] over a finite feed and collects its emissions.
pub fn online_detect<F, I>(
    feed: I,
    cfg: &OnlineConfig,
    source: &RatioSource<F>,
    opts: &DetectOptions,
    rng: &RandomSource,
) -> Result<Vec<DetectionResult>>
where
    F: Scalar,
    I: IntoIterator<Item = Array1<F>>,
{
    let mut det = OnlineDetector::new(*cfg, source.clone(), *opts, *rng)?;
    let mut out = Vec::new();
    for x in feed {
        if let Some(r) = det.push(x)? {
            out.push(r);
        }
    }
    Ok(out)
}
