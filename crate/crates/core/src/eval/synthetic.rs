// SPDX-License-Identifier: MIT OR Apache-2.0

use ndarray::Array1;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::distributions::{GaussianSpec, PiecewiseGaussian};
use crate::error::{Error, Result};
use crate::random::RandomSource;
use crate::scalar::Scalar;
use crate::types::{GroundTruth, TimeSeries};

/// How a segment's mean vector is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MeanSpec {
    /// Each coordinate i.i.d. `Unif[low, high]`.
    Uniform { low: f64, high: f64 },
    /// The previous segment's mean plus `delta` in every coordinate.
    Offset { delta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CovarianceSpec {
    Identity,
    /// `diag(σ²)` with each `σ_j ~ Unif[low, high]`, drawn once and shared by
    /// all segments.
    DiagonalFromSigmaRange {
        low: f64,
        high: f64,
    },
}

/// Piecewise-stationary Gaussian generator. `segment_bounds` lists the change
/// indices followed by `n`; segment `k` starts at `segment_bounds[k-1]`
/// (1-based, the change index belongs to the new segment).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub d: usize,
    pub segment_bounds: Vec<usize>,
    pub means: Vec<MeanSpec>,
    pub covariance: CovarianceSpec,
}

impl SyntheticSpec {
    pub fn n(&self) -> usize {
        self.segment_bounds.last().copied().unwrap_or(0)
    }

    pub fn changes(&self) -> &[usize] {
        &self.segment_bounds[..self.segment_bounds.len().saturating_sub(1)]
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::invalid("d must be at least 1"));
        }
        let n = self.n();
        if n < 2 {
            return Err(Error::invalid("segment_bounds must end with n >= 2"));
        }
        GroundTruth::new(self.changes().to_vec(), n)?;
        if self.changes().last().is_some_and(|&c| c >= n) {
            return Err(Error::invalid("last change must precede n"));
        }
        if self.means.len() != self.segment_bounds.len() {
            return Err(Error::invalid(format!(
                "{} segments need {} mean specs, got {}",
                self.segment_bounds.len(),
                self.segment_bounds.len(),
                self.means.len()
            )));
        }
        for (k, m) in self.means.iter().enumerate() {
            match *m {
                MeanSpec::Uniform { low, high }
                    if !(low <= high && low.is_finite() && high.is_finite()) =>
                {
                    return Err(Error::invalid(format!(
                        "segment {}: invalid mean range",
                        k + 1
                    )));
                }
                MeanSpec::Offset { delta } if k == 0 || !delta.is_finite() => {
                    return Err(Error::invalid(format!(
                        "segment {}: an offset needs a previous segment and a finite delta",
                        k + 1
                    )));
                }
                _ => {}
            }
        }
        if let CovarianceSpec::DiagonalFromSigmaRange { low, high } = self.covariance {
            if !(low > 0.0 && low <= high && high.is_finite()) {
                return Err(Error::invalid("sigma range must satisfy 0 < low <= high"));
            }
        }
        Ok(())
    }

    /// Draws the segment distributions.
    pub fn process<F: Scalar>(&self, rng: &RandomSource) -> Result<PiecewiseGaussian<F>> {
        self.validate()?;
        let mut rng = rng.derive_named("synthetic.parameters").rng();
        let var: Array1<F> = match self.covariance {
            CovarianceSpec::Identity => Array1::from_elem(self.d, F::one()),
            CovarianceSpec::DiagonalFromSigmaRange { low, high } => {
                Array1::from_shape_fn(self.d, |_| {
                    let s = uniform(&mut rng, low, high);
                    F::lit(s * s)
                })
            }
        };
        let mut segments: Vec<GaussianSpec<F>> = Vec::with_capacity(self.means.len());
        for m in &self.means {
            let mean = match *m {
                MeanSpec::Uniform { low, high } => {
                    Array1::from_shape_fn(self.d, |_| F::lit(uniform(&mut rng, low, high)))
                }
                MeanSpec::Offset { delta } => {
                    let prev = segments.last().expect("validated").mean();
                    prev.mapv(|v| v + F::lit(delta))
                }
            };
            segments.push(GaussianSpec::diagonal(mean, var.clone())?);
        }
        PiecewiseGaussian::new(self.n(), self.changes().to_vec(), segments)
    }
}

fn uniform(rng: &mut crate::random::Rng, low: f64, high: f64) -> f64 {
    if low == high {
        low
    } else {
        rng.random_range(low..high)
    }
}

/// Draws segment parameters, then samples the series.
pub fn generate_synthetic<F: Scalar>(
    spec: &SyntheticSpec,
    rng: &RandomSource,
) -> Result<(TimeSeries<F>, GroundTruth)> {
    let (series, process) = generate_with_process(spec, rng)?;
    Ok((series, process.ground_truth()))
}

/// [`generate_synthetic`] that also returns the drawn process, for oracle
/// ratios.
pub fn generate_with_process<F: Scalar>(
    spec: &SyntheticSpec,
    rng: &RandomSource,
) -> Result<(TimeSeries<F>, PiecewiseGaussian<F>)> {
    let process = spec.process(rng)?;
    let series = process.sample(&mut rng.derive_named("synthetic.samples").rng());
    Ok((series, process))
}

/// Named recipes. Each may expand into several variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Fig2b,
    Fig3b,
    Fig5a,
    Fig5b,
    Table1,
}

/// One concrete configuration of a preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub label: String,
    pub spec: SyntheticSpec,
    /// Split used by the recipe.
    pub t_split: usize,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Self::Fig2b,
        Self::Fig3b,
        Self::Fig5a,
        Self::Fig5b,
        Self::Table1,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Fig2b => "fig2b",
            Self::Fig3b => "fig3b",
            Self::Fig5a => "fig5a",
            Self::Fig5b => "fig5b",
            Self::Table1 => "table1",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    /// Every variant of the recipe, in a fixed order.
    pub fn variants(&self) -> Vec<Variant> {
        let u = |low, high| MeanSpec::Uniform { low, high };
        match self {
            Self::Fig2b => vec![Variant {
                label: "fig2b".into(),
                spec: SyntheticSpec {
                    d: 10,
                    segment_bounds: vec![150, 500],
                    means: vec![u(0.0, 0.4), u(0.6, 1.0)],
                    covariance: CovarianceSpec::Identity,
                },
                t_split: 250,
            }],
            Self::Fig3b => vec![Variant {
                label: "fig3b".into(),
                spec: SyntheticSpec {
                    d: 10,
                    segment_bounds: vec![150, 450, 600],
                    means: vec![u(0.0, 0.4), u(0.6, 1.0), u(1.6, 2.0)],
                    covariance: CovarianceSpec::Identity,
                },
                t_split: 300,
            }],
            Self::Fig5a => [20, 50, 100]
                .into_iter()
                .map(|t_star| Variant {
                    label: format!("fig5a_tstar{t_star}"),
                    spec: SyntheticSpec {
                        d: 10,
                        segment_bounds: vec![t_star, 1000],
                        means: vec![u(-1.0, 1.0), u(-2.0, 2.0)],
                        covariance: CovarianceSpec::Identity,
                    },
                    t_split: 500,
                })
                .collect(),
            Self::Fig5b => [0.1, 0.25, 0.5, 1.0]
                .into_iter()
                .map(|delta| Variant {
                    label: format!("fig5b_delta{delta}"),
                    spec: SyntheticSpec {
                        d: 10,
                        segment_bounds: vec![350, 1000],
                        means: vec![u(-1.0, 1.0), MeanSpec::Offset { delta }],
                        covariance: CovarianceSpec::Identity,
                    },
                    t_split: 500,
                })
                .collect(),
            Self::Table1 => vec![Variant {
                label: "table1".into(),
                spec: SyntheticSpec {
                    d: 50,
                    segment_bounds: vec![150, 200, 450, 525, 700, 725, 1200, 2000],
                    means: vec![
                        u(-1.0, 1.0),
                        u(-2.0, 2.0),
                        u(-3.0, 3.0),
                        u(-4.0, 4.0),
                        u(-3.0, 3.0),
                        u(-10.0, 10.0),
                        u(-20.0, 20.0),
                        u(-1.0, 1.0),
                    ],
                    covariance: CovarianceSpec::DiagonalFromSigmaRange {
                        low: 1.0,
                        high: 3.0,
                    },
                },
                t_split: 1000,
            }],
        }
    }
}
