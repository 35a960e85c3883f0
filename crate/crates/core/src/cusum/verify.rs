// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use super::segment::{detect_slope_changes_at_split, SegmentationConfig, SlopeChange};
use super::series::{argmax_estimator, CusumSeries};
use crate::error::{Error, Result};
use crate::random::RandomSource;
use crate::ratio::RatioSource;
use crate::scalar::Scalar;
use crate::types::{ChangePointEstimate, TimeSeries};

/// Context for re-splitting a candidate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyContext {
    /// The split that produced the candidate.
    pub original_split: usize,
    /// Global index of the series' first row.
    pub origin: usize,
    pub a_clip: f64,
    /// Re-split here instead of at the candidate.
    pub forced_split: Option<usize>,
}

/// Outcome of re-running detection with the split moved to a candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub verified: bool,
    /// Argmax of the re-split statistic.
    pub refined: ChangePointEstimate,
    pub t_split: usize,
    pub breakpoints: Vec<SlopeChange>,
    pub cusum: CusumSeries,
}

/// Where to re-split for `candidate`. A candidate sitting within `gap` of the
/// split that produced it is moved `2·gap` away, since re-splitting in place
/// would reproduce any artifact of that split.
pub fn verification_split(
    n: usize,
    candidate: usize,
    original_split: usize,
    gap: usize,
) -> Result<usize> {
    if candidate < 2 || candidate > n - 1 {
        return Err(Error::bounds(format!(
            "candidate {candidate} not strictly inside [1, {n}]"
        )));
    }
    if candidate.abs_diff(original_split) > gap {
        return Ok(candidate);
    }
    let offset = 2 * gap;
    if candidate + offset < n {
        Ok(candidate + offset)
    } else if candidate > offset + 1 {
        Ok(candidate - offset)
    } else {
        Err(Error::TooShort(format!(
            "no admissible re-split for candidate {candidate} in a series of length {n}"
        )))
    }
}

/// Re-splits at `candidate` (or its offset, see [`verification_split`]) and
/// checks that the new statistic has exactly one slope change, that it sits
/// within `min_gap` of the new argmax, and that the argmax lands within
/// `min_gap` of the candidate.
pub fn verify_change<F: Scalar>(
    series: &TimeSeries<F>,
    candidate: usize,
    source: &RatioSource<F>,
    seg: &SegmentationConfig,
    ctx: &VerifyContext,
    rng: &RandomSource,
) -> Result<Verification> {
    let n = series.n();
    let gap = seg.min_gap_for(n);
    let t_split = match ctx.forced_split {
        Some(t) => t,
        None => verification_split(n, candidate, ctx.original_split, gap)?,
    };
    let stat = source.statistic(
        series,
        ctx.origin,
        t_split,
        ctx.a_clip,
        &split_source(rng, ctx.origin, t_split),
    )?;
    let breakpoints = detect_slope_changes_at_split(&stat.cusum, seg)?;
    let refined = argmax_estimator(&stat.cusum, gap).estimate;
    let verified = breakpoints.len() == 1
        && breakpoints[0].index.abs_diff(refined.index) <= gap
        && refined.index.abs_diff(candidate) <= gap;
    Ok(Verification {
        verified,
        refined,
        t_split,
        breakpoints,
        cusum: stat.cusum,
    })
}

/// Seed for the ratio fit at a given split, keyed by the split's global
/// index so every pipeline reusing a split reuses its model.
pub(crate) fn split_source(rng: &RandomSource, origin: usize, t_split: usize) -> RandomSource {
    rng.derive_named("split")
        .derive((origin + t_split - 1) as u64)
}
