// SPDX-License-Identifier: MIT OR Apache-2.0

//! The cumulative log-ratio statistic, its maximizer, slope-change listing
//! and re-split verification.

mod segment;
mod series;
mod verify;

pub(crate) use segment::detect_slope_changes_at_split;
pub use segment::{detect_slope_changes, SegmentationConfig, SlopeChange};
pub use series::{
    argmax_estimator, compute_cusum, compute_cusum_with, ArgmaxEstimate, CusumSeries, CusumSource,
    DEFAULT_A_CLIP,
};
pub(crate) use verify::split_source;
pub use verify::{verification_split, verify_change, Verification, VerifyContext};
