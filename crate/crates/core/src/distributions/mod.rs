// SPDX-License-Identifier: MIT OR Apache-2.0

//! Gaussian and Gaussian-mixture densities with KL divergences and the
//! expected-slope theory for oracle checks.

mod gaussian;
pub mod kl;
mod mixture;
mod piecewise;
pub mod theory;

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::random::Rng;
use crate::scalar::Scalar;

pub use gaussian::GaussianSpec;
pub use kl::{gaussian_kl, kl_monte_carlo, kl_quadrature_1d, Estimate, KlEstimator};
pub use mixture::{GaussianMixture, MixtureSpec};
pub use piecewise::PiecewiseGaussian;
pub use theory::{
    expected_log_ratio, f_weighted_kl, min_slope_c, theorem_alpha, AccuracyBound, Component, Region,
};

/// A density that can be evaluated pointwise.
pub trait Density<F: Scalar> {
    fn dim(&self) -> usize;

    fn log_pdf(&self, x: ArrayView1<'_, F>) -> Result<F>;

    /// Integration span `[lo, hi]` for univariate densities; `None` otherwise.
    fn span_1d(&self) -> Option<(f64, f64)> {
        None
    }
}

/// A density that can also be sampled.
pub trait Sampler<F: Scalar>: Density<F> {
    fn sample(&self, rng: &mut Rng) -> Array1<F>;
}

/// Exact `log p_left(x) − log p_right(x)`.
pub fn oracle_log_ratio<F, L, R>(left: &L, right: &R, x: ArrayView1<'_, F>) -> Result<F>
where
    F: Scalar,
    L: Density<F> + ?Sized,
    R: Density<F> + ?Sized,
{
    if left.dim() != right.dim() {
        return Err(Error::dims(left.dim(), right.dim()));
    }
    Ok(left.log_pdf(x)? - right.log_pdf(x)?)
}

/// Half-width of quadrature spans, in standard deviations.
pub(crate) const SPAN_SIGMAS: f64 = 12.0;

pub(crate) fn union_span(spans: impl Iterator<Item = Option<(f64, f64)>>) -> Option<(f64, f64)> {
    spans.fold(None, |acc, s| match (acc, s?) {
        (None, s) => Some(s),
        (Some((a, b)), (c, d)) => Some((a.min(c), b.max(d))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn oracle_ratio_examples() {
        let a = GaussianSpec::<f64>::univariate(0.0, 1.0).unwrap();
        let b = GaussianSpec::<f64>::univariate(1.0, 1.0).unwrap();
        assert_eq!(oracle_log_ratio(&a, &a, array![0.7].view()).unwrap(), 0.0);
        assert!(oracle_log_ratio(&a, &b, array![0.5].view()).unwrap().abs() < 1e-15);
        assert!((oracle_log_ratio(&a, &b, array![0.0].view()).unwrap() - 0.5).abs() < 1e-15);
        let c = GaussianSpec::<f64>::standard(2).unwrap();
        assert!(oracle_log_ratio(&a, &c, array![0.0].view()).is_err());
    }
}
