// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::pipeline::{analyse, Rule};
use super::{ConfigEcho, DetectOptions, DetectionMode, DetectionResult};
use crate::error::{Error, Result};
use crate::random::RandomSource;
use crate::ratio::RatioSource;
use crate::scalar::Scalar;
use crate::types::{check_split, ChangePointEstimate, SplitConfig, TimeSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleStrategy {
    /// Keep clusters supported by at least `vote_threshold` splits.
    MajorityVote,
    /// Keep clusters whose summed slope-change magnitude is at least the
    /// median cluster score.
    WeightedSum,
}

/// Multi-split ensemble settings. Unset fields take their defaults for the
/// series length: splits `{⌊n/4⌋, ⌊n/2⌋, ⌊3n/4⌋}`, tolerance `min_gap`,
/// threshold `⌈r/2⌉`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub split_points: Option<Vec<usize>>,
    pub strategy: EnsembleStrategy,
    pub vote_tolerance: Option<usize>,
    pub vote_threshold: Option<usize>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            split_points: None,
            strategy: EnsembleStrategy::MajorityVote,
            vote_tolerance: None,
            vote_threshold: None,
        }
    }
}

impl EnsembleConfig {
    pub fn splits_for(&self, n: usize) -> Vec<usize> {
        self.split_points
            .clone()
            .unwrap_or_else(|| vec![n / 4, n / 2, 3 * n / 4])
    }

    fn validate(&self, n: usize) -> Result<()> {
        let splits = self.splits_for(n);
        if splits.len() < 2 {
            return Err(Error::invalid("an ensemble needs at least two splits"));
        }
        for &s in &splits {
            check_split(n, s)?;
        }
        if self.vote_threshold == Some(0) {
            return Err(Error::invalid("vote_threshold must be at least 1"));
        }
        Ok(())
    }
}

struct Cluster {
    members: Vec<(usize, ChangePointEstimate)>,
}

impl Cluster {
    fn supporters(&self) -> usize {
        let mut ids: Vec<usize> = self.members.iter().map(|m| m.0).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    fn score(&self) -> f64 {
        self.members.iter().map(|m| m.1.magnitude).sum()
    }

    fn centroid(&self) -> ChangePointEstimate {
        let k = self.members.len() as f64;
        let mean = |f: fn(&ChangePointEstimate) -> f64| {
            self.members.iter().map(|m| f(&m.1)).sum::<f64>() / k
        };
        let index = mean(|e| e.index as f64).round() as usize;
        ChangePointEstimate {
            index,
            slope_before: mean(|e| e.slope_before),
            slope_after: mean(|e| e.slope_after),
            magnitude: mean(|e| e.magnitude),
            verified: true,
        }
    }
}

/// Runs the multi-change pipeline at each split and combines the candidates
/// by clustering them within the vote tolerance.
pub fn ensemble_detect<F: Scalar>(
    series: &TimeSeries<F>,
    cfg: &EnsembleConfig,
    source: &RatioSource<F>,
    opts: &DetectOptions,
    rng: &RandomSource,
) -> Result<DetectionResult> {
    let n = series.n();
    cfg.validate(n)?;
    let splits = cfg.splits_for(n);
    let tol = cfg
        .vote_tolerance
        .unwrap_or_else(|| opts.vote_tolerance_for(n));
    let threshold = cfg.vote_threshold.unwrap_or(splits.len().div_ceil(2));
    let gap = opts.segmentation.min_gap_for(n);

    // Repeated splits share one analysis; each still casts its own vote.
    let mut runs = BTreeMap::new();
    for &s in &splits {
        if let Entry::Vacant(e) = runs.entry(s) {
            e.insert(analyse(
                series,
                1,
                &SplitConfig::new(s),
                source,
                opts,
                rng,
                Rule::Reappear,
                &[],
            )?);
        }
    }

    let mut all: Vec<(usize, ChangePointEstimate)> = splits
        .iter()
        .enumerate()
        .flat_map(|(id, s)| runs[s].changes.iter().map(move |c| (id, *c)))
        .collect();
    all.sort_by_key(|(id, c)| (c.index, *id));
    let mut clusters: Vec<Cluster> = Vec::new();
    for m in all {
        match clusters.last_mut() {
            Some(cl) if m.1.index - cl.members[0].1.index <= tol => cl.members.push(m),
            _ => clusters.push(Cluster { members: vec![m] }),
        }
    }

    let keep: Vec<bool> = match cfg.strategy {
        EnsembleStrategy::MajorityVote => clusters
            .iter()
            .map(|c| c.supporters() >= threshold)
            .collect(),
        EnsembleStrategy::WeightedSum => {
            let mut scores: Vec<f64> = clusters.iter().map(Cluster::score).collect();
            scores.sort_by(f64::total_cmp);
            let median = match scores.len() {
                0 => 0.0,
                k if k % 2 == 1 => scores[k / 2],
                k => 0.5 * (scores[k / 2 - 1] + scores[k / 2]),
            };
            clusters.iter().map(|c| c.score() >= median).collect()
        }
    };

    let mut kept: Vec<(f64, ChangePointEstimate)> = clusters
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(c, _)| (c.score(), c.centroid()))
        .collect();
    // Centroids closer than min_gap collapse onto the stronger cluster.
    kept.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out: Vec<ChangePointEstimate> = Vec::new();
    for (_, c) in kept {
        if out.iter().all(|o| o.index.abs_diff(c.index) >= gap) {
            out.push(c);
        }
    }
    out.sort_by_key(|c| c.index);

    Ok(DetectionResult {
        change_points: out,
        diagnostic: None,
        cusum: splits.iter().map(|s| runs[s].cusum.clone()).collect(),
        t_splits: splits,
        window: None,
        config_echo: ConfigEcho {
            mode: DetectionMode::Ensemble,
            ratio: source.echo(),
            options: *opts,
            ensemble: Some(cfg.clone()),
            online: None,
        },
        seed: *rng,
    })
}
