// SPDX-License-Identifier: MIT OR Apache-2.0

use super::{ConfigEcho, DetectOptions, DetectionMode, DetectionResult};
use crate::cusum::{
    detect_slope_changes, detect_slope_changes_at_split, split_source, verification_split,
    verify_change, CusumSeries, SlopeChange, VerifyContext,
};
use crate::error::Result;
use crate::random::RandomSource;
use crate::ratio::RatioSource;
use crate::scalar::Scalar;
use crate::types::{ChangePointEstimate, SplitConfig, TimeSeries};

/// Train at the split, list slope changes, keep those that survive
/// [`verify_change`]. Returns every verified change (normally at most one);
/// when none verifies, the strongest candidate is attached as `diagnostic`.
pub fn detect_single<F: Scalar>(
    series: &TimeSeries<F>,
    split: &SplitConfig,
    source: &RatioSource<F>,
    opts: &DetectOptions,
    rng: &RandomSource,
) -> Result<DetectionResult> {
    let a = analyse(series, 1, split, source, opts, rng, Rule::Strict, &[])?;
    Ok(a.into_result(DetectionMode::Single, split.t_split, source, opts, rng))
}

/// Every slope change of the statistic at the split that reappears, within
/// the vote tolerance, after re-splitting at it.
pub fn detect_multi<F: Scalar>(
    series: &TimeSeries<F>,
    split: &SplitConfig,
    source: &RatioSource<F>,
    opts: &DetectOptions,
    rng: &RandomSource,
) -> Result<DetectionResult> {
    let a = analyse(series, 1, split, source, opts, rng, Rule::Reappear, &[])?;
    Ok(a.into_result(DetectionMode::Multi, split.t_split, source, opts, rng))
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Rule {
    Strict,
    Reappear,
}

pub(crate) struct Analysis {
    pub changes: Vec<ChangePointEstimate>,
    pub diagnostic: Option<ChangePointEstimate>,
    pub cusum: CusumSeries,
}

impl Analysis {
    fn into_result<F: Scalar>(
        self,
        mode: DetectionMode,
        t_split: usize,
        source: &RatioSource<F>,
        opts: &DetectOptions,
        rng: &RandomSource,
    ) -> DetectionResult {
        DetectionResult {
            change_points: self.changes,
            diagnostic: self.diagnostic,
            cusum: vec![self.cusum],
            t_splits: vec![t_split],
            window: None,
            config_echo: ConfigEcho {
                mode,
                ratio: source.echo(),
                options: *opts,
                ensemble: None,
                online: None,
            },
            seed: *rng,
        }
    }
}

/// Shared body of the single and multi pipelines on a series whose first row
/// is the global index `origin`. Returned indices are local.
#[allow(clippy::too_many_arguments)]
pub(crate) fn analyse<F: Scalar>(
    series: &TimeSeries<F>,
    origin: usize,
    split: &SplitConfig,
    source: &RatioSource<F>,
    opts: &DetectOptions,
    rng: &RandomSource,
    rule: Rule,
    known: &[usize],
) -> Result<Analysis> {
    opts.validate()?;
    source.validate()?;
    let n = series.n();
    split.validate(n)?;
    let seg = &opts.segmentation;
    let gap = seg.min_gap_for(n);
    let tol = opts.vote_tolerance_for(n);
    let t_split = split.t_split;

    let stat = source.statistic(
        series,
        origin,
        t_split,
        opts.a_clip,
        &split_source(rng, origin, t_split),
    )?;
    let mut candidates = detect_slope_changes(&stat.cusum, seg)?;
    candidates.sort_by(|a, b| {
        b.magnitude
            .total_cmp(&a.magnitude)
            .then(a.index.cmp(&b.index))
    });

    let ctx = |candidate: usize| VerifyContext {
        original_split: t_split,
        origin,
        a_clip: opts.a_clip,
        forced_split: nearest(&split.verification_splits, candidate),
    };

    let mut kept: Vec<ChangePointEstimate> = Vec::new();
    let mut resplits: Vec<(usize, Vec<SlopeChange>)> = Vec::new();
    for c in &candidates {
        // Candidates arrive strongest first, so one inside min_gap of a kept
        // change is a weaker duplicate; `known` holds global indices the
        // caller has already reported.
        if kept.iter().any(|k| k.index.abs_diff(c.index) < gap)
            || known
                .iter()
                .any(|&g| g.abs_diff(c.index + origin - 1) <= tol)
        {
            continue;
        }
        let estimate = match rule {
            Rule::Strict => {
                let v = verify_change(series, c.index, source, seg, &ctx(c.index), rng)?;
                v.verified.then_some(ChangePointEstimate {
                    verified: true,
                    ..v.refined
                })
            }
            Rule::Reappear => {
                let cx = ctx(c.index);
                let t = match cx.forced_split {
                    Some(t) => t,
                    None => verification_split(n, c.index, t_split, gap)?,
                };
                if !resplits.iter().any(|(s, _)| *s == t) {
                    let re = source.statistic(
                        series,
                        origin,
                        t,
                        opts.a_clip,
                        &split_source(rng, origin, t),
                    )?;
                    resplits.push((t, detect_slope_changes_at_split(&re.cusum, seg)?));
                }
                let again = &resplits
                    .iter()
                    .find(|(s, _)| *s == t)
                    .expect("just cached")
                    .1;
                again
                    .iter()
                    .any(|b| b.index.abs_diff(c.index) <= tol)
                    .then(|| verified_estimate(c))
            }
        };
        if let Some(e) = estimate {
            if kept.iter().all(|k| k.index.abs_diff(e.index) >= gap) {
                kept.push(e);
            }
        }
    }
    kept.sort_by_key(|e| e.index);
    let diagnostic = if kept.is_empty() && rule == Rule::Strict {
        candidates.first().map(|c| ChangePointEstimate {
            verified: false,
            ..verified_estimate(c)
        })
    } else {
        None
    };
    Ok(Analysis {
        changes: kept,
        diagnostic,
        cusum: stat.cusum,
    })
}

fn verified_estimate(c: &SlopeChange) -> ChangePointEstimate {
    ChangePointEstimate {
        index: c.index,
        slope_before: c.slope_before,
        slope_after: c.slope_after,
        magnitude: c.magnitude,
        verified: true,
    }
}

fn nearest(splits: &[usize], candidate: usize) -> Option<usize> {
    splits
        .iter()
        .copied()
        .min_by_key(|s| (s.abs_diff(candidate), *s))
}
