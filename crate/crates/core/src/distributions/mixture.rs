// SPDX-License-Identifier: MIT OR Apache-2.0

use ndarray::{Array1, ArrayView1};
use rand::Rng as _;

use super::{union_span, Density, GaussianSpec, Sampler};
use crate::error::{Error, Result};
use crate::random::Rng;
use crate::scalar::{log_sum_exp, Scalar};

/// `P(λ) = λ·P₁ + (1 − λ)·P₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSpec<F: Scalar> {
    lambda: F,
    comp1: GaussianSpec<F>,
    comp2: GaussianSpec<F>,
}

impl<F: Scalar> MixtureSpec<F> {
    pub fn new(lambda: F, comp1: GaussianSpec<F>, comp2: GaussianSpec<F>) -> Result<Self> {
        if !(lambda >= F::zero() && lambda <= F::one()) {
            return Err(Error::invalid(format!(
                "mixture weight {lambda} outside [0, 1]"
            )));
        }
        if comp1.dim() != comp2.dim() {
            return Err(Error::dims(comp1.dim(), comp2.dim()));
        }
        Ok(Self {
            lambda,
            comp1,
            comp2,
        })
    }

    pub fn lambda(&self) -> F {
        self.lambda
    }

    pub fn comp1(&self) -> &GaussianSpec<F> {
        &self.comp1
    }

    pub fn comp2(&self) -> &GaussianSpec<F> {
        &self.comp2
    }
}

impl<F: Scalar> Density<F> for MixtureSpec<F> {
    fn dim(&self) -> usize {
        self.comp1.dim()
    }

    fn log_pdf(&self, x: ArrayView1<'_, F>) -> Result<F> {
        // Zero-weight components are skipped, so λ ∈ {0, 1} reproduces the
        // surviving component bit for bit.
        if self.lambda == F::one() {
            return self.comp1.log_pdf(x);
        }
        if self.lambda == F::zero() {
            return self.comp2.log_pdf(x);
        }
        let a = self.lambda.ln() + self.comp1.log_pdf(x)?;
        let b = (F::one() - self.lambda).ln() + self.comp2.log_pdf(x)?;
        Ok(log_sum_exp(&[a, b]))
    }

    fn span_1d(&self) -> Option<(f64, f64)> {
        union_span([self.comp1.span_1d(), self.comp2.span_1d()].into_iter())
    }
}

impl<F: Scalar> Sampler<F> for MixtureSpec<F> {
    fn sample(&self, rng: &mut Rng) -> Array1<F> {
        let u: f64 = rng.random();
        if u < self.lambda.as_f64() {
            self.comp1.sample(rng)
        } else {
            self.comp2.sample(rng)
        }
    }
}

/// Finite Gaussian mixture with arbitrary non-negative weights summing to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture<F: Scalar> {
    log_weights: Vec<F>,
    weights: Vec<F>,
    components: Vec<GaussianSpec<F>>,
}

impl<F: Scalar> GaussianMixture<F> {
    /// Builds a mixture; weights are normalized to sum to one.
    pub fn new(weights: Vec<F>, components: Vec<GaussianSpec<F>>) -> Result<Self> {
        if components.is_empty() || weights.len() != components.len() {
            return Err(Error::invalid("mixture needs one weight per component"));
        }
        let d = components[0].dim();
        if let Some(c) = components.iter().find(|c| c.dim() != d) {
            return Err(Error::dims(d, c.dim()));
        }
        if weights.iter().any(|w| !(*w >= F::zero()) || !w.is_finite()) {
            return Err(Error::invalid(
                "mixture weights must be finite and non-negative",
            ));
        }
        let total: F = weights.iter().copied().sum();
        if !(total > F::zero()) {
            return Err(Error::invalid("mixture weights sum to zero"));
        }
        let weights: Vec<F> = weights.into_iter().map(|w| w / total).collect();
        Ok(Self {
            log_weights: weights.iter().map(|w| w.ln()).collect(),
            weights,
            components,
        })
    }

    pub fn single(component: GaussianSpec<F>) -> Self {
        Self {
            log_weights: vec![F::zero()],
            weights: vec![F::one()],
            components: vec![component],
        }
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn components(&self) -> &[GaussianSpec<F>] {
        &self.components
    }
}

impl<F: Scalar> From<MixtureSpec<F>> for GaussianMixture<F> {
    fn from(m: MixtureSpec<F>) -> Self {
        Self::new(vec![m.lambda, F::one() - m.lambda], vec![m.comp1, m.comp2])
            .expect("validated two-component mixture")
    }
}

impl<F: Scalar> Density<F> for GaussianMixture<F> {
    fn dim(&self) -> usize {
        self.components[0].dim()
    }

    fn log_pdf(&self, x: ArrayView1<'_, F>) -> Result<F> {
        let mut terms = Vec::with_capacity(self.components.len());
        for (lw, c) in self.log_weights.iter().zip(&self.components) {
            if *lw > F::neg_infinity() {
                terms.push(*lw + c.log_pdf(x)?);
            }
        }
        Ok(log_sum_exp(&terms))
    }

    fn span_1d(&self) -> Option<(f64, f64)> {
        union_span(self.components.iter().map(|c| c.span_1d()))
    }
}

impl<F: Scalar> Sampler<F> for GaussianMixture<F> {
    fn sample(&self, rng: &mut Rng) -> Array1<F> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (w, c) in self.weights.iter().zip(&self.components) {
            acc += w.as_f64();
            if u < acc {
                return c.sample(rng);
            }
        }
        let last = self
            .weights
            .iter()
            .rposition(|w| *w > F::zero())
            .expect("some weight positive");
        self.components[last].sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn pair() -> (GaussianSpec<f64>, GaussianSpec<f64>) {
        (
            GaussianSpec::univariate(0.0, 1.0).unwrap(),
            GaussianSpec::univariate(3.0, 2.0).unwrap(),
        )
    }

    #[test]
    fn endpoints_equal_components_exactly() {
        let (a, b) = pair();
        let m1 = MixtureSpec::new(1.0, a.clone(), b.clone()).unwrap();
        let m0 = MixtureSpec::new(0.0, a.clone(), b.clone()).unwrap();
        for x in [-4.0, -0.3, 0.0, 1.7, 9.0] {
            let x = array![x];
            assert_eq!(m1.log_pdf(x.view()).unwrap(), a.log_pdf(x.view()).unwrap());
            assert_eq!(m0.log_pdf(x.view()).unwrap(), b.log_pdf(x.view()).unwrap());
        }
    }

    #[test]
    fn identical_components_collapse() {
        let (a, _) = pair();
        let m = MixtureSpec::new(0.5, a.clone(), a.clone()).unwrap();
        for x in [-2.0, 0.0, 2.5] {
            let x = array![x];
            assert!((m.log_pdf(x.view()).unwrap() - a.log_pdf(x.view()).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_direct_sum_where_no_underflow() {
        let (a, b) = pair();
        let m = MixtureSpec::new(0.3, a.clone(), b.clone()).unwrap();
        let x = array![1.2];
        let direct = (0.3 * a.log_pdf(x.view()).unwrap().exp()
            + 0.7 * b.log_pdf(x.view()).unwrap().exp())
        .ln();
        assert!((m.log_pdf(x.view()).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn far_tail_stays_finite() {
        let (a, b) = pair();
        let m = MixtureSpec::new(1e-300, a, b).unwrap();
        assert!(m.log_pdf(array![-60.0].view()).unwrap().is_finite());
    }

    #[test]
    fn rejects_bad_weight() {
        let (a, b) = pair();
        assert!(MixtureSpec::new(1.5, a.clone(), b.clone()).is_err());
        assert!(MixtureSpec::new(f64::NAN, a, b).is_err());
    }

    #[test]
    fn general_mixture_agrees_with_two_component_spec() {
        let (a, b) = pair();
        let spec = MixtureSpec::new(0.25, a, b).unwrap();
        let general = GaussianMixture::from(spec.clone());
        for x in [-1.0, 0.5, 4.0] {
            let x = array![x];
            let d = spec.log_pdf(x.view()).unwrap() - general.log_pdf(x.view()).unwrap();
            assert!(d.abs() < 1e-14);
        }
    }
}
