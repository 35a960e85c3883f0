// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use crate::cusum::{argmax_estimator, compute_cusum_with, CusumSource};
use crate::distributions::{
    expected_log_ratio, oracle_log_ratio, Density, Estimate, GaussianMixture, GaussianSpec,
    KlEstimator, MixtureSpec, PiecewiseGaussian, Region, Sampler,
};
use crate::error::{Error, Result};
use crate::random::RandomSource;
use crate::scalar::Scalar;
use crate::types::{split_geometry, SplitGeometry, SplitSide};

/// Sample mean of the exact log-ratio `log p_left(x) − log p_right(x)` for
/// `x` drawn from the regime governing `region`, with the halves' mixture
/// weights taken from `geom`.
pub fn monte_carlo_log_ratio<F: Scalar>(
    geom: &SplitGeometry,
    p1: &GaussianSpec<F>,
    p2: &GaussianSpec<F>,
    region: Region,
    samples: usize,
    rng: &RandomSource,
) -> Result<Estimate> {
    if samples < 2 {
        return Err(Error::invalid("need at least 2 Monte Carlo samples"));
    }
    let alpha = F::lit(geom.alpha());
    let (left, right): (GaussianMixture<F>, GaussianMixture<F>) = match geom.side {
        SplitSide::SplitLeftOfChange => (
            GaussianMixture::single(p1.clone()),
            MixtureSpec::new(F::one() - alpha, p1.clone(), p2.clone())?.into(),
        ),
        SplitSide::SplitRightOfChange => (
            MixtureSpec::new(alpha, p1.clone(), p2.clone())?.into(),
            GaussianMixture::single(p2.clone()),
        ),
    };
    let source = match region {
        Region::PreChange => p1,
        Region::PostChange => p2,
    };
    let mut rng = rng.rng();
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for i in 0..samples {
        let x = source.sample(&mut rng);
        let v = oracle_log_ratio(&left, &right, x.view())?.as_f64();
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (samples - 1) as f64;
    Ok(Estimate {
        value: mean,
        std_err: (var / samples as f64).sqrt(),
    })
}

/// Closed-form and sampled expected slope for one region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeCheck {
    pub closed_form: Estimate,
    pub monte_carlo: Estimate,
    /// Positive before the change, negative after.
    pub sign_ok: bool,
    /// Difference within three combined standard errors.
    pub agrees: bool,
}

impl SlopeCheck {
    pub fn passes(&self) -> bool {
        self.sign_ok && self.agrees
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub t_split: usize,
    pub side: SplitSide,
    pub pre: SlopeCheck,
    pub post: SlopeCheck,
    pub trials: usize,
    /// Trials whose oracle-statistic argmax lands within the tolerance.
    pub argmax_hits: usize,
}

impl OracleRow {
    pub fn argmax_rate(&self) -> f64 {
        if self.trials == 0 {
            return 1.0;
        }
        self.argmax_hits as f64 / self.trials as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSetup<F: Scalar> {
    pub p1: GaussianSpec<F>,
    pub p2: GaussianSpec<F>,
    pub n: usize,
    pub t_star: usize,
    pub t_splits: Vec<usize>,
    pub samples: usize,
    pub trials: usize,
    pub argmax_tolerance: usize,
    pub a_clip: f64,
}

/// Compares the closed-form expected slopes with sampled ones for every
/// split and counts how often the oracle statistic peaks near the change.
pub fn oracle_check<F: Scalar>(
    setup: &OracleSetup<F>,
    rng: &RandomSource,
) -> Result<Vec<OracleRow>> {
    if setup.p1 == setup.p2 {
        return Err(Error::Degenerate(
            "pre- and post-change distributions are identical".into(),
        ));
    }
    let estimator = KlEstimator::auto(setup.p1.dim(), rng.derive_named("oracle.kl"));
    let process =
        PiecewiseGaussian::single(setup.n, setup.t_star, setup.p1.clone(), setup.p2.clone())?;
    let window = (setup.n / 50).max(1);
    let mut rows = Vec::with_capacity(setup.t_splits.len());
    for &t_split in &setup.t_splits {
        let geom = split_geometry(setup.n, setup.t_star, t_split)?;
        let key = rng.derive_named("oracle.split").derive(t_split as u64);
        let check = |region: Region, tag: u64| -> Result<SlopeCheck> {
            let closed_form = expected_log_ratio(&geom, &setup.p1, &setup.p2, region, &estimator)?;
            let monte_carlo = monte_carlo_log_ratio(
                &geom,
                &setup.p1,
                &setup.p2,
                region,
                setup.samples,
                &key.derive(tag),
            )?;
            let sign_ok = match region {
                Region::PreChange => monte_carlo.value > 0.0,
                Region::PostChange => monte_carlo.value < 0.0,
            };
            let se = closed_form.std_err.hypot(monte_carlo.std_err);
            Ok(SlopeCheck {
                closed_form,
                monte_carlo,
                sign_ok,
                agrees: (closed_form.value - monte_carlo.value).abs() <= 3.0 * se,
            })
        };
        let pre = check(Region::PreChange, 0)?;
        let post = check(Region::PostChange, 1)?;

        let (left, right) = process.split_mixtures(1, setup.n, t_split)?;
        let mut hits = 0;
        for trial in 0..setup.trials {
            let series = process.sample(&mut key.derive_named("trial").derive(trial as u64).rng());
            let lr = series
                .rows()
                .map(|x| oracle_log_ratio(&left, &right, x).map(Scalar::as_f64))
                .collect::<Result<Vec<_>>>()?;
            let cusum = compute_cusum_with(&lr, t_split, CusumSource::OracleRatio, setup.a_clip)?;
            let t_hat = argmax_estimator(&cusum, window).estimate.index;
            if t_hat.abs_diff(setup.t_star) <= setup.argmax_tolerance {
                hits += 1;
            }
        }
        rows.push(OracleRow {
            t_split,
            side: geom.side,
            pre,
            post,
            trials: setup.trials,
            argmax_hits: hits,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;

    fn setup(t_splits: Vec<usize>) -> OracleSetup<f64> {
        OracleSetup {
            p1: GaussianSpec::univariate(0.0, 1.0).unwrap(),
            p2: GaussianSpec::univariate(2.5, 1.0).unwrap(),
            n: 200,
            t_star: 60,
            t_splits,
            samples: 20_000,
            trials: 20,
            argmax_tolerance: 10,
            a_clip: 10.0,
        }
    }

    #[test]
    fn closed_form_and_sampled_slopes_agree() {
        let rows = oracle_check(&setup(vec![40, 100, 150]), &RandomSource::new(3)).unwrap();
        for r in &rows {
            assert!(r.pre.passes() && r.post.passes(), "{r:?}");
            assert!(r.argmax_rate() >= 0.9, "{r:?}");
        }
        assert_eq!(rows[0].side, SplitSide::SplitLeftOfChange);
        assert_eq!(rows[1].side, SplitSide::SplitRightOfChange);
    }

    #[test]
    fn identical_distributions_are_degenerate() {
        let mut s = setup(vec![100]);
        s.p2 = s.p1.clone();
        assert!(matches!(
            oracle_check(&s, &RandomSource::new(1)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn split_at_change_has_pure_halves() {
        // Left = P1, right = P2 exactly: pre slope is KL(P1‖P2) = Δμ²/2.
        let p1 = GaussianSpec::<f64>::identity(Array1::zeros(2)).unwrap();
        let p2 = GaussianSpec::identity(Array1::from_elem(2, 1.0)).unwrap();
        let geom = split_geometry(100, 50, 50).unwrap();
        let e = monte_carlo_log_ratio(
            &geom,
            &p1,
            &p2,
            Region::PreChange,
            40_000,
            &RandomSource::new(9),
        )
        .unwrap();
        assert!((e.value - 1.0).abs() < 4.0 * e.std_err, "{e:?}");
    }
}
