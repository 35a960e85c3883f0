// SPDX-License-Identifier: MIT OR Apache-2.0

//! Unsupervised change-point detection from the cumulative sum of learned
//! log density ratios.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cusum;
pub mod detect;
pub mod distributions;
pub mod dre;
pub mod error;
pub mod eval;
pub mod io;
pub mod random;
pub mod ratio;
pub mod scalar;
pub mod types;

pub use error::{Error, Result};
pub use random::RandomSource;
pub use scalar::Scalar;
pub use types::{
    split_geometry, ChangePointEstimate, GroundTruth, SplitConfig, SplitGeometry, SplitSide,
    TimeSeries,
};

pub type TimeSeries32 = TimeSeries<f32>;
pub type TimeSeries64 = TimeSeries<f64>;
pub type Gaussian32 = distributions::GaussianSpec<f32>;
pub type Gaussian64 = distributions::GaussianSpec<f64>;
pub type Piecewise32 = distributions::PiecewiseGaussian<f32>;
pub type Piecewise64 = distributions::PiecewiseGaussian<f64>;
pub type RatioModel32 = dre::DensityRatioModel<f32>;
pub type RatioModel64 = dre::DensityRatioModel<f64>;
pub type RatioSource32 = ratio::RatioSource<f32>;
pub type RatioSource64 = ratio::RatioSource<f64>;
