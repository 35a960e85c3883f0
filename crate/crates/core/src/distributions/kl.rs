// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use super::{Density, GaussianSpec, Sampler};
use crate::error::{Error, Result};
use crate::random::RandomSource;
use crate::scalar::Scalar;

/// Default Monte Carlo sample count for KL terms without a closed form.
pub const DEFAULT_MC_SAMPLES: usize = 200_000;

/// A numeric estimate with its Monte Carlo standard error (0 for
/// deterministic routes).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

impl Estimate {
    pub const fn exact(value: f64) -> Self {
        Self {
            value,
            std_err: 0.0,
        }
    }

    /// `a·self + b·other` with independent errors.
    pub fn combine(self, a: f64, other: Self, b: f64) -> Self {
        Self {
            value: a * self.value + b * other.value,
            std_err: ((a * self.std_err).powi(2) + (b * other.std_err).powi(2)).sqrt(),
        }
    }
}

impl std::ops::Neg for Estimate {
    type Output = Self;

    fn neg(self) -> Self {
        Self {
            value: -self.value,
            std_err: self.std_err,
        }
    }
}

/// How KL terms involving mixtures are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum KlEstimator {
    /// Adaptive Simpson quadrature; univariate densities only.
    Quadrature1d,
    MonteCarlo {
        samples: usize,
        source: RandomSource,
    },
}

impl KlEstimator {
    /// Quadrature in one dimension, Monte Carlo with the default sample
    /// count otherwise.
    pub fn auto(d: usize, source: RandomSource) -> Self {
        if d == 1 {
            Self::Quadrature1d
        } else {
            Self::MonteCarlo {
                samples: DEFAULT_MC_SAMPLES,
                source,
            }
        }
    }

    /// Same method with a re-keyed seed, so separate terms draw independent
    /// samples.
    pub(crate) fn keyed(&self, label: &str) -> Self {
        match *self {
            Self::Quadrature1d => Self::Quadrature1d,
            Self::MonteCarlo { samples, source } => Self::MonteCarlo {
                samples,
                source: source.derive_named(label),
            },
        }
    }

    /// `KL(p‖q)` by this method.
    pub fn kl<F, P, Q>(&self, p: &P, q: &Q) -> Result<Estimate>
    where
        F: Scalar,
        P: Sampler<F>,
        Q: Density<F>,
    {
        match *self {
            Self::Quadrature1d => kl_quadrature_1d(p, q).map(Estimate::exact),
            Self::MonteCarlo { samples, source } => kl_monte_carlo(p, q, samples, &source),
        }
    }
}

/// Closed-form `KL(p‖q)` between multivariate normals.
pub fn gaussian_kl<F: Scalar>(p: &GaussianSpec<F>, q: &GaussianSpec<F>) -> Result<F> {
    if p.dim() != q.dim() {
        return Err(Error::dims(p.dim(), q.dim()));
    }
    let d = F::count(p.dim());
    let diff = &q.mean() - &p.mean();
    let z = q.whiten(diff.view());
    let kl = F::lit(0.5) * (q.trace_inv_times(p) + z.dot(&z) - d + q.log_det() - p.log_det());
    Ok(kl.max(F::zero()))
}

/// Monte Carlo `KL(p‖q)`: the sample mean of `log p(x) − log q(x)` over
/// `x ~ p`, with its standard error.
pub fn kl_monte_carlo<F, P, Q>(
    p: &P,
    q: &Q,
    n_samples: usize,
    source: &RandomSource,
) -> Result<Estimate>
where
    F: Scalar,
    P: Sampler<F>,
    Q: Density<F>,
{
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be at least 1"));
    }
    if p.dim() != q.dim() {
        return Err(Error::dims(p.dim(), q.dim()));
    }
    let mut rng = source.rng();
    // Welford accumulation in f64 regardless of F.
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for i in 0..n_samples {
        let x = p.sample(&mut rng);
        let v = (p.log_pdf(x.view())? - q.log_pdf(x.view())?).as_f64();
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let std_err = if n_samples > 1 {
        (m2 / (n_samples - 1) as f64 / n_samples as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(Estimate {
        value: mean,
        std_err,
    })
}

/// `KL(p‖q)` for univariate densities by adaptive quadrature over the union
/// of both supports' ±12σ spans.
pub fn kl_quadrature_1d<F, P, Q>(p: &P, q: &Q) -> Result<f64>
where
    F: Scalar,
    P: Density<F>,
    Q: Density<F>,
{
    let (Some((plo, phi)), Some((qlo, qhi))) = (p.span_1d(), q.span_1d()) else {
        return Err(Error::invalid("quadrature requires univariate densities"));
    };
    let (lo, hi) = (plo.min(qlo), phi.max(qhi));
    let eval = |x: f64| -> f64 {
        let x = ndarray::arr1(&[F::lit(x)]);
        let lp = p.log_pdf(x.view()).expect("univariate").as_f64();
        let lq = q.log_pdf(x.view()).expect("univariate").as_f64();
        let w = lp.exp();
        if w == 0.0 {
            0.0
        } else {
            w * (lp - lq)
        }
    };
    Ok(integrate(eval, lo, hi, 1e-11))
}

/// Adaptive Simpson integration of `f` over `[lo, hi]`, pre-split into
/// panels so narrow peaks are not skipped.
pub fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    const PANELS: usize = 256;
    let h = (hi - lo) / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let a = lo + k as f64 * h;
            let b = if k + 1 == PANELS { hi } else { a + h };
            let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
            let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            simpson(&f, a, b, fa, fm, fb, whole, tol / PANELS as f64, 48)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
