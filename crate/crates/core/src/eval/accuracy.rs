// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use crate::cusum::{argmax_estimator, compute_cusum_with, CusumSource};
use crate::distributions::{
    min_slope_c, oracle_log_ratio, theorem_alpha, Density, Estimate, GaussianSpec, KlEstimator,
    PiecewiseGaussian,
};
use crate::error::{Error, Result};
use crate::random::RandomSource;
use crate::scalar::Scalar;
use crate::types::split_geometry;

/// One `(β, α(β), exceedance)` row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub beta: f64,
    pub alpha: f64,
    /// Fraction of trials with `|T̂ − T*| ≥ α`.
    pub exceedance: f64,
}

impl AccuracyRow {
    pub fn passes(&self) -> bool {
        self.exceedance <= self.beta
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub c_min: Estimate,
    pub a_clip: f64,
    pub trials: usize,
    /// `|T̂ − T*|` per trial.
    pub errors: Vec<usize>,
    pub rows: Vec<AccuracyRow>,
}

/// Settings for [`empirical_accuracy`].
#[derive(Clone, Debug, PartialEq)]
pub struct AccuracySetup<F: Scalar> {
    pub p1: GaussianSpec<F>,
    pub p2: GaussianSpec<F>,
    pub n: usize,
    pub t_star: usize,
    pub t_split: usize,
    pub trials: usize,
    pub betas: Vec<f64>,
    pub a_clip: f64,
}

/// Monte Carlo check of the `(α, β)`-accuracy bound for the argmax of the
/// oracle statistic.
pub fn empirical_accuracy<F: Scalar>(
    setup: &AccuracySetup<F>,
    rng: &RandomSource,
) -> Result<AccuracyTable> {
    if setup.trials < 100 {
        return Err(Error::invalid(format!(
            "need at least 100 trials, got {}",
            setup.trials
        )));
    }
    let geom = split_geometry(setup.n, setup.t_star, setup.t_split)?;
    let estimator = KlEstimator::auto(setup.p1.dim(), rng.derive_named("accuracy.c"));
    let c = min_slope_c(&geom, &setup.p1, &setup.p2, &estimator)?;
    let bounds = setup
        .betas
        .iter()
        .map(|&b| theorem_alpha(setup.a_clip, c.value, b))
        .collect::<Result<Vec<_>>>()?;

    let process =
        PiecewiseGaussian::single(setup.n, setup.t_star, setup.p1.clone(), setup.p2.clone())?;
    let (left, right) = process.split_mixtures(1, setup.n, setup.t_split)?;
    let window = (setup.n / 50).max(1);
    let mut errors = Vec::with_capacity(setup.trials);
    for trial in 0..setup.trials {
        let series = process.sample(
            &mut rng
                .derive_named("accuracy.trial")
                .derive(trial as u64)
                .rng(),
        );
        let lr = series
            .rows()
            .map(|x| oracle_log_ratio(&left, &right, x).map(Scalar::as_f64))
            .collect::<Result<Vec<_>>>()?;
        let cusum = compute_cusum_with(&lr, setup.t_split, CusumSource::OracleRatio, setup.a_clip)?;
        let t_hat = argmax_estimator(&cusum, window).estimate.index;
        errors.push(t_hat.abs_diff(setup.t_star));
    }
    let rows = bounds
        .iter()
        .map(|b| AccuracyRow {
            beta: b.beta,
            alpha: b.alpha,
            exceedance: errors.iter().filter(|&&e| e as f64 >= b.alpha).count() as f64
                / setup.trials as f64,
        })
        .collect();
    Ok(AccuracyTable {
        c_min: c,
        a_clip: setup.a_clip,
        trials: setup.trials,
        errors,
        rows,
    })
}
