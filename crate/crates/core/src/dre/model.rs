// SPDX-License-Identifier: MIT OR Apache-2.0

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::{kernel, mlp};
use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Scalar};
use crate::types::TimeSeries;

/// Architecture of a [`DensityRatioModel`] plus its non-trainable state.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind<F: Scalar> {
    KernelBasis { centers: Array2<F>, bandwidth: F },
    FeedForward { hidden: Vec<usize> },
}

impl<F: Scalar> ModelKind<F> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::KernelBasis { .. } => "kernel",
            Self::FeedForward { .. } => "feed_forward",
        }
    }
}

/// A trained estimate `ŵ(x)` of `p_left(x) / p_right(x)`.
///
/// Outputs are clamped to `[clamp_eps, 1 / clamp_eps]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityRatioModel<F: Scalar> {
    kind: ModelKind<F>,
    parameters: Vec<F>,
    input_dim: usize,
    clamp_eps: F,
    shapes: Vec<(usize, usize)>,
}

/// Per-sample outputs and the pieces needed for a backward pass.
pub(crate) struct Evaluation<F: Scalar> {
    /// Clamped ratio estimates.
    pub ratios: Array1<F>,
    /// `∂ŵ/∂logit`, zero where the clamp is active.
    pub slope: Array1<F>,
    cache: Cache<F>,
}

enum Cache<F: Scalar> {
    Kernel(Array2<F>),
    Mlp(mlp::Trace<F>),
}

impl<F: Scalar> DensityRatioModel<F> {
    pub fn kernel(
        centers: Array2<F>,
        bandwidth: F,
        parameters: Vec<F>,
        clamp_eps: F,
    ) -> Result<Self> {
        if !(bandwidth > F::zero()) {
            return Err(Error::invalid("kernel bandwidth must be positive"));
        }
        if parameters.len() != centers.nrows() + 1 {
            return Err(Error::invalid(format!(
                "kernel model with {} centers needs {} parameters, got {}",
                centers.nrows(),
                centers.nrows() + 1,
                parameters.len()
            )));
        }
        let input_dim = centers.ncols();
        Self::build(
            ModelKind::KernelBasis { centers, bandwidth },
            parameters,
            input_dim,
            clamp_eps,
        )
    }

    pub fn feed_forward(
        input_dim: usize,
        hidden: Vec<usize>,
        parameters: Vec<F>,
        clamp_eps: F,
    ) -> Result<Self> {
        if hidden.is_empty() || hidden.contains(&0) {
            return Err(Error::invalid(
                "feed-forward model needs at least one non-empty hidden layer",
            ));
        }
        let expected = mlp::parameter_count(input_dim, &hidden);
        if parameters.len() != expected {
            return Err(Error::invalid(format!(
                "network {input_dim}->{hidden:?}->1 needs {expected} parameters, got {}",
                parameters.len()
            )));
        }
        Self::build(
            ModelKind::FeedForward { hidden },
            parameters,
            input_dim,
            clamp_eps,
        )
    }

    fn build(
        kind: ModelKind<F>,
        parameters: Vec<F>,
        input_dim: usize,
        clamp_eps: F,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid("input dimension must be at least 1"));
        }
        if !(clamp_eps > F::zero() && clamp_eps < F::one()) {
            return Err(Error::invalid("clamp_eps must lie in (0, 1)"));
        }
        if parameters.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("model parameters must be finite"));
        }
        let shapes = match &kind {
            ModelKind::FeedForward { hidden } => mlp::layer_shapes(input_dim, hidden),
            ModelKind::KernelBasis { .. } => Vec::new(),
        };
        Ok(Self {
            kind,
            parameters,
            input_dim,
            clamp_eps,
            shapes,
        })
    }

    pub fn kind(&self) -> &ModelKind<F> {
        &self.kind
    }

    pub fn parameters(&self) -> &[F] {
        &self.parameters
    }

    pub(crate) fn parameters_mut(&mut self) -> &mut [F] {
        &mut self.parameters
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn clamp_eps(&self) -> F {
        self.clamp_eps
    }

    /// Returns a copy with a different parameter vector of the same length.
    pub fn with_parameters(&self, parameters: Vec<F>) -> Result<Self> {
        if parameters.len() != self.parameters.len() {
            return Err(Error::dims(self.parameters.len(), parameters.len()));
        }
        let mut m = self.clone();
        m.parameters = parameters;
        Ok(m)
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.input_dim {
            return Err(Error::dims(self.input_dim, d));
        }
        Ok(())
    }

    /// Softplus outputs before clamping.
    pub fn raw_outputs(&self, x: ArrayView2<'_, F>) -> Result<Array1<F>> {
        self.check_dim(x.ncols())?;
        Ok(match &self.kind {
            ModelKind::KernelBasis { centers, bandwidth } => {
                kernel::raw_outputs(x, centers.view(), *bandwidth, &self.parameters)
            }
            ModelKind::FeedForward { .. } => mlp::raw_outputs(&self.parameters, &self.shapes, x),
        })
    }

    fn clamp(&self, w: F) -> F {
        w.max(self.clamp_eps).min(self.clamp_eps.recip())
    }

    /// Clamped ratio estimates for every row of `x`.
    pub fn predict_batch(&self, x: ArrayView2<'_, F>) -> Result<Array1<F>> {
        Ok(self.raw_outputs(x)?.mapv(|w| self.clamp(w)))
    }

    pub fn predict_ratio(&self, x: ArrayView1<'_, F>) -> Result<F> {
        let row = x.insert_axis(Axis(0));
        Ok(self.predict_batch(row)?[0])
    }

    /// `ln ŵ(x_t)` for every time step of a series.
    pub fn log_ratios(&self, series: &TimeSeries<F>) -> Result<Vec<F>> {
        Ok(self
            .predict_batch(series.data())?
            .iter()
            .map(|w| w.ln())
            .collect())
    }

    pub(crate) fn evaluate(&self, x: ArrayView2<'_, F>) -> Result<Evaluation<F>> {
        self.check_dim(x.ncols())?;
        let (logits, cache) = match &self.kind {
            ModelKind::KernelBasis { centers, bandwidth } => {
                let phi = kernel::design(x, centers.view(), *bandwidth);
                (kernel::logits(&phi, &self.parameters), Cache::Kernel(phi))
            }
            ModelKind::FeedForward { .. } => {
                let trace = mlp::forward(&self.parameters, &self.shapes, x);
                (trace.logits.clone(), Cache::Mlp(trace))
            }
        };
        let lo = self.clamp_eps;
        let hi = self.clamp_eps.recip();
        let raw = logits.mapv(crate::scalar::softplus);
        let ratios = raw.mapv(|w| self.clamp(w));
        let slope = ndarray::Zip::from(&logits).and(&raw).map_collect(|&z, &w| {
            if w < lo || w > hi {
                F::zero()
            } else {
                sigmoid(z)
            }
        });
        Ok(Evaluation {
            ratios,
            slope,
            cache,
        })
    }

    /// Chains `∂J/∂ŵ_i` through an [`Evaluation`] into `∂J/∂θ`.
    pub(crate) fn backward(&self, eval: &Evaluation<F>, d_ratios: ArrayView1<'_, F>) -> Vec<F> {
        let d_logits = &d_ratios * &eval.slope;
        match &eval.cache {
            Cache::Kernel(phi) => kernel::backward(phi, d_logits.view()),
            Cache::Mlp(trace) => {
                mlp::backward(&self.parameters, &self.shapes, trace, d_logits.view())
            }
        }
    }
}
