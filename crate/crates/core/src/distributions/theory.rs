// SPDX-License-Identifier: MIT OR Apache-2.0

//! Expected CUSUM slopes for a single Gaussian change and the accuracy bound
//! they imply.

use serde::{Deserialize, Serialize};

use super::kl::{Estimate, KlEstimator};
use super::{Density, GaussianSpec, MixtureSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::{SplitGeometry, SplitSide};

/// Which side of the true change the expectation is taken over. The change
/// index itself counts as post-change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    PreChange,
    PostChange,
}

/// Which pure component `f_i` compares the mixture against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    First,
    Second,
}

/// `f_i(γ, λ) = (1/γ)·KL(P(λ)‖P_i) + ((1−γ)/γ)·KL(P_i‖P(λ))` with
/// `P(λ) = λ·P₁ + (1−λ)·P₂`.
///
/// `γ = 1` is accepted: it arises when the split coincides with the change.
pub fn f_weighted_kl<F: Scalar>(
    i: Component,
    gamma: f64,
    lambda: f64,
    p1: &GaussianSpec<F>,
    p2: &GaussianSpec<F>,
    estimator: &KlEstimator,
) -> Result<Estimate> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid(format!("gamma {gamma} outside (0, 1]")));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("lambda {lambda} outside [0, 1]")));
    }
    if p1.dim() != p2.dim() {
        return Err(Error::dims(p1.dim(), p2.dim()));
    }
    if p1 == p2 {
        return Ok(Estimate::exact(0.0));
    }
    let mix = MixtureSpec::new(F::lit(lambda), p1.clone(), p2.clone())?;
    let pi = match i {
        Component::First => p1,
        Component::Second => p2,
    };
    let forward = estimator.keyed("f.mixture_vs_component").kl(&mix, pi)?;
    let weight = (1.0 - gamma) / gamma;
    let reverse = if weight == 0.0 {
        Estimate::exact(0.0)
    } else {
        estimator.keyed("f.component_vs_mixture").kl(pi, &mix)?
    };
    Ok(forward.combine(1.0 / gamma, reverse, weight))
}

/// Expected log-ratio `E[log p_left(x) − log p_right(x)]` for `x` drawn from
/// the regime governing `region`.
///
/// Split left of the change: pre = `KL(P₁‖P(1−α₁))`, post = `−f₁(α₁, 1−α₁)`.
/// Split right of the change: pre = `f₂(α₂, α₂)`, post = `−KL(P₂‖P(α₂))`.
pub fn expected_log_ratio<F: Scalar>(
    geom: &SplitGeometry,
    p1: &GaussianSpec<F>,
    p2: &GaussianSpec<F>,
    region: Region,
    estimator: &KlEstimator,
) -> Result<Estimate> {
    if p1.dim() != p2.dim() {
        return Err(Error::dims(p1.dim(), p2.dim()));
    }
    let alpha = geom.alpha();
    if !(alpha > 0.0) {
        return Err(Error::Degenerate(format!(
            "mixture weight is zero (n={}, t_star={}, t_split={})",
            geom.n, geom.t_star, geom.t_split
        )));
    }
    if p1 == p2 {
        return Ok(Estimate::exact(0.0));
    }
    let est = estimator.keyed(match region {
        Region::PreChange => "slope.pre",
        Region::PostChange => "slope.post",
    });
    match (geom.side, region) {
        (SplitSide::SplitLeftOfChange, Region::PreChange) => {
            let right = MixtureSpec::new(F::lit(1.0 - alpha), p1.clone(), p2.clone())?;
            est.kl(p1, &right)
        }
        (SplitSide::SplitLeftOfChange, Region::PostChange) => {
            f_weighted_kl(Component::First, alpha, 1.0 - alpha, p1, p2, &est).map(|e| -e)
        }
        (SplitSide::SplitRightOfChange, Region::PreChange) => {
            f_weighted_kl(Component::Second, alpha, alpha, p1, p2, &est)
        }
        (SplitSide::SplitRightOfChange, Region::PostChange) => {
            let left = MixtureSpec::new(F::lit(alpha), p1.clone(), p2.clone())?;
            est.kl(p2, &left).map(|e| -e)
        }
    }
}

/// The smaller of the two expected slope magnitudes.
pub fn min_slope_c<F: Scalar>(
    geom: &SplitGeometry,
    p1: &GaussianSpec<F>,
    p2: &GaussianSpec<F>,
    estimator: &KlEstimator,
) -> Result<Estimate> {
    if p1 == p2 {
        return Err(Error::Degenerate(
            "pre- and post-change distributions are identical".into(),
        ));
    }
    let pre = expected_log_ratio(geom, p1, p2, Region::PreChange, estimator)?;
    let post = expected_log_ratio(geom, p1, p2, Region::PostChange, estimator)?;
    let c = if pre.value.abs() <= post.value.abs() {
        Estimate {
            value: pre.value.abs(),
            std_err: pre.std_err,
        }
    } else {
        Estimate {
            value: post.value.abs(),
            std_err: post.std_err,
        }
    };
    if !(c.value > 0.0) {
        return Err(Error::Degenerate("minimum expected slope is zero".into()));
    }
    Ok(c)
}

/// `(α, β)`-accuracy radius for log-ratios bounded by `A` and minimum slope
/// `C`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyBound {
    pub a_bound: f64,
    pub c_min: f64,
    pub beta: f64,
    pub alpha: f64,
}

/// `α = (2A²/C²)·ln(32/(3β))`.
pub fn theorem_alpha(a_bound: f64, c_min: f64, beta: f64) -> Result<AccuracyBound> {
    if !(a_bound > 0.0 && a_bound.is_finite()) {
        return Err(Error::invalid(format!("A must be positive, got {a_bound}")));
    }
    if !(c_min > 0.0 && c_min.is_finite()) {
        return Err(Error::invalid(format!("C must be positive, got {c_min}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid(format!("beta {beta} outside (0, 1)")));
    }
    let alpha = 2.0 * a_bound * a_bound / (c_min * c_min) * (32.0 / (3.0 * beta)).ln();
    Ok(AccuracyBound {
        a_bound,
        c_min,
        beta,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::kl::gaussian_kl;
    use crate::random::RandomSource;
    use crate::types::split_geometry;

    fn n1(mu: f64) -> GaussianSpec<f64> {
        GaussianSpec::univariate(mu, 1.0).unwrap()
    }

    #[test]
    fn theorem_alpha_reference_value() {
        let b = theorem_alpha(2.0, 1.0, 0.1).unwrap();
        // 8·(ln 320 − ln 3) = 8·(5.768320996 − 1.098612289) = 37.357669657
        assert!((b.alpha - 37.357_669_657).abs() < 1e-8, "{}", b.alpha);
    }

    #[test]
    fn theorem_alpha_scaling() {
        let base = theorem_alpha(2.0, 1.0, 0.1).unwrap().alpha;
        assert!((theorem_alpha(4.0, 1.0, 0.1).unwrap().alpha - 4.0 * base).abs() < 1e-9);
        assert!(theorem_alpha(2.0, 2.0, 0.1).unwrap().alpha < base);
        assert!(theorem_alpha(2.0, 1.0, 1.0).is_err());
        assert!(theorem_alpha(0.0, 1.0, 0.5).is_err());
        assert!(theorem_alpha(1.0, -1.0, 0.5).is_err());
    }

    #[test]
    fn f_vanishes_for_identical_or_pure_mixture() {
        let q = KlEstimator::Quadrature1d;
        assert_eq!(
            f_weighted_kl(Component::First, 0.3, 0.7, &n1(0.0), &n1(0.0), &q)
                .unwrap()
                .value,
            0.0
        );
        let v = f_weighted_kl(Component::First, 0.4, 1.0, &n1(0.0), &n1(2.0), &q).unwrap();
        assert!(v.value.abs() < 1e-12);
    }

    #[test]
    fn f_rejects_bad_gamma() {
        let q = KlEstimator::Quadrature1d;
        assert!(f_weighted_kl(Component::First, 0.0, 0.5, &n1(0.0), &n1(1.0), &q).is_err());
        assert!(f_weighted_kl(Component::First, 1.2, 0.5, &n1(0.0), &n1(1.0), &q).is_err());
    }

    #[test]
    fn tie_geometry_reduces_to_plain_kl() {
        let g = split_geometry(100, 50, 50).unwrap();
        let q = KlEstimator::Quadrature1d;
        let (p1, p2) = (n1(0.0), n1(1.5));
        let pre = expected_log_ratio(&g, &p1, &p2, Region::PreChange, &q)
            .unwrap()
            .value;
        let post = expected_log_ratio(&g, &p1, &p2, Region::PostChange, &q)
            .unwrap()
            .value;
        assert!((pre - gaussian_kl(&p1, &p2).unwrap()).abs() < 1e-9);
        assert!((post + gaussian_kl(&p2, &p1).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn min_slope_degenerate_for_identical() {
        let g = split_geometry(500, 150, 250).unwrap();
        let e = KlEstimator::auto(1, RandomSource::new(0));
        assert!(matches!(
            min_slope_c(&g, &n1(0.0), &n1(0.0), &e),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn signs_on_both_sides() {
        let q = KlEstimator::Quadrature1d;
        for t_split in [100, 150, 250, 400] {
            let g = split_geometry(500, 150, t_split).unwrap();
            let pre = expected_log_ratio(&g, &n1(0.0), &n1(1.0), Region::PreChange, &q).unwrap();
            let post = expected_log_ratio(&g, &n1(0.0), &n1(1.0), Region::PostChange, &q).unwrap();
            assert!(pre.value > 0.0 && post.value < 0.0, "t_split {t_split}");
        }
    }
}
