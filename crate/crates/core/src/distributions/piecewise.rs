// SPDX-License-Identifier: MIT OR Apache-2.0

use ndarray::Array2;

use super::{Density, GaussianMixture, GaussianSpec, Sampler};
use crate::error::{Error, Result};
use crate::random::Rng;
use crate::scalar::Scalar;
use crate::types::{GroundTruth, TimeSeries};

/// A length-`n` sequence of independent Gaussian segments. Segment `k + 1`
/// starts at `changes[k]` (1-based), so a change index belongs to the new
/// regime.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseGaussian<F: Scalar> {
    n: usize,
    changes: Vec<usize>,
    segments: Vec<GaussianSpec<F>>,
}

impl<F: Scalar> PiecewiseGaussian<F> {
    pub fn new(n: usize, changes: Vec<usize>, segments: Vec<GaussianSpec<F>>) -> Result<Self> {
        GroundTruth::new(changes.clone(), n)?;
        if segments.len() != changes.len() + 1 {
            return Err(Error::invalid(format!(
                "{} change points need {} segments, got {}",
                changes.len(),
                changes.len() + 1,
                segments.len()
            )));
        }
        let d = segments[0].dim();
        if let Some(s) = segments.iter().find(|s| s.dim() != d) {
            return Err(Error::dims(d, s.dim()));
        }
        Ok(Self {
            n,
            changes,
            segments,
        })
    }

    /// A single change at `t_star` from `p1` to `p2`.
    pub fn single(
        n: usize,
        t_star: usize,
        p1: GaussianSpec<F>,
        p2: GaussianSpec<F>,
    ) -> Result<Self> {
        Self::new(n, vec![t_star], vec![p1, p2])
    }

    /// No change at all.
    pub fn stationary(n: usize, p: GaussianSpec<F>) -> Result<Self> {
        Self::new(n, Vec::new(), vec![p])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.segments[0].dim()
    }

    pub fn changes(&self) -> &[usize] {
        &self.changes
    }

    pub fn segments(&self) -> &[GaussianSpec<F>] {
        &self.segments
    }

    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth::new(self.changes.clone(), self.n).expect("validated at construction")
    }

    /// Segment index governing time `t` (1-based).
    pub fn segment_of(&self, t: usize) -> usize {
        self.changes.partition_point(|&c| c <= t)
    }

    /// Draws one realization, row `t` from the segment governing `t`.
    pub fn sample(&self, rng: &mut Rng) -> TimeSeries<F> {
        let mut data = Array2::zeros((self.n, self.dim()));
        for t in 1..=self.n {
            let x = self.segments[self.segment_of(t)].sample(rng);
            data.row_mut(t - 1).assign(&x);
        }
        TimeSeries::new(data).expect("Gaussian draws are finite and n >= 2")
    }

    /// Mixture governing the global index range `[from, to]`, weighted by how
    /// many instants each segment occupies.
    pub fn range_mixture(&self, from: usize, to: usize) -> Result<GaussianMixture<F>> {
        if from < 1 || to > self.n || from > to {
            return Err(Error::bounds(format!(
                "range [{from}, {to}] outside [1, {}]",
                self.n
            )));
        }
        let mut counts = vec![0usize; self.segments.len()];
        let mut bounds = Vec::with_capacity(self.segments.len() + 1);
        bounds.push(1);
        bounds.extend(self.changes.iter().copied());
        bounds.push(self.n + 1);
        for (k, w) in bounds.windows(2).enumerate() {
            let (a, b) = (w[0].max(from), (w[1] - 1).min(to));
            if a <= b {
                counts[k] = b - a + 1;
            }
        }
        let (weights, comps): (Vec<F>, Vec<GaussianSpec<F>>) = counts
            .iter()
            .zip(&self.segments)
            .filter(|(c, _)| **c > 0)
            .map(|(c, s)| (F::count(*c), s.clone()))
            .unzip();
        if comps.len() == 1 {
            return Ok(GaussianMixture::single(
                comps.into_iter().next().expect("one"),
            ));
        }
        GaussianMixture::new(weights, comps)
    }

    /// `(P_left, P_right)` for a window `[from, to]` split after its local
    /// index `t_split`: left covers local `1..=t_split`, right the rest.
    pub fn split_mixtures(
        &self,
        from: usize,
        to: usize,
        t_split: usize,
    ) -> Result<(GaussianMixture<F>, GaussianMixture<F>)> {
        let len = to.checked_sub(from).map(|l| l + 1).unwrap_or(0);
        crate::types::check_split(len, t_split)?;
        let split = from + t_split - 1;
        Ok((
            self.range_mixture(from, split)?,
            self.range_mixture(split + 1, to)?,
        ))
    }
}
