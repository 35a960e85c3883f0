// SPDX-License-Identifier: MIT OR Apache-2.0

use ndarray::{Array1, Array2, ArrayView1};
use rand_distr::{Distribution, StandardNormal};

use super::{Density, Sampler};
use crate::error::{Error, Result};
use crate::random::Rng;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
enum Factor<F: Scalar> {
    /// Per-coordinate standard deviations.
    Diagonal(Array1<F>),
    /// Lower-triangular Cholesky factor.
    Full(Array2<F>),
}

/// Multivariate normal with a diagonal or full covariance, factored once.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianSpec<F: Scalar> {
    mean: Array1<F>,
    factor: Factor<F>,
    log_det: F,
}

impl<F: Scalar> GaussianSpec<F> {
    pub fn diagonal(mean: Array1<F>, variances: Array1<F>) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::invalid("Gaussian must have dimension >= 1"));
        }
        if mean.len() != variances.len() {
            return Err(Error::dims(mean.len(), variances.len()));
        }
        if variances
            .iter()
            .any(|&v| !(v > F::zero()) || !v.is_finite())
        {
            return Err(Error::invalid(
                "diagonal covariance entries must be positive and finite",
            ));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("mean must be finite"));
        }
        let log_det = variances.iter().map(|v| v.ln()).sum();
        Ok(Self {
            mean,
            factor: Factor::Diagonal(variances.mapv(F::sqrt)),
            log_det,
        })
    }

    /// `N(mean, I)`.
    pub fn identity(mean: Array1<F>) -> Result<Self> {
        let d = mean.len();
        Self::diagonal(mean, Array1::from_elem(d, F::one()))
    }

    /// `N(0, I_d)`.
    pub fn standard(d: usize) -> Result<Self> {
        Self::identity(Array1::zeros(d))
    }

    /// Univariate `N(mean, sd²)`.
    pub fn univariate(mean: F, sd: F) -> Result<Self> {
        Self::diagonal(Array1::from_elem(1, mean), Array1::from_elem(1, sd * sd))
    }

    pub fn full(mean: Array1<F>, covariance: Array2<F>) -> Result<Self> {
        let d = mean.len();
        if covariance.dim() != (d, d) {
            return Err(Error::dims(d, covariance.nrows()));
        }
        let tol = F::lit(1e-9);
        for i in 0..d {
            for j in 0..i {
                let (a, b) = (covariance[[i, j]], covariance[[j, i]]);
                if (a - b).abs() > tol * (F::one() + a.abs().max(b.abs())) {
                    return Err(Error::invalid("covariance must be symmetric"));
                }
            }
        }
        let l = cholesky(&covariance)?;
        let log_det = F::lit(2.0) * (0..d).map(|i| l[[i, i]].ln()).sum::<F>();
        Ok(Self {
            mean,
            factor: Factor::Full(l),
            log_det,
        })
    }

    pub fn mean(&self) -> ArrayView1<'_, F> {
        self.mean.view()
    }

    /// Dense covariance matrix.
    pub fn covariance(&self) -> Array2<F> {
        match &self.factor {
            Factor::Diagonal(sd) => Array2::from_diag(&sd.mapv(|s| s * s)),
            Factor::Full(l) => l.dot(&l.t()),
        }
    }

    /// Marginal standard deviation of each coordinate.
    pub fn marginal_sd(&self) -> Array1<F> {
        match &self.factor {
            Factor::Diagonal(sd) => sd.clone(),
            Factor::Full(l) => Array1::from_iter(l.rows().into_iter().map(|r| r.dot(&r).sqrt())),
        }
    }

    pub fn log_det(&self) -> F {
        self.log_det
    }

    /// Solves `L z = v` for the covariance factor `L`.
    pub(crate) fn whiten(&self, v: ArrayView1<'_, F>) -> Array1<F> {
        match &self.factor {
            Factor::Diagonal(sd) => &v / sd,
            Factor::Full(l) => forward_substitute(l, v),
        }
    }

    /// Applies the factor: `L z`.
    pub(crate) fn color(&self, z: ArrayView1<'_, F>) -> Array1<F> {
        match &self.factor {
            Factor::Diagonal(sd) => &z * sd,
            Factor::Full(l) => l.dot(&z),
        }
    }

    /// `‖L_self⁻¹ L_other‖_F² = tr(Σ_self⁻¹ Σ_other)`.
    pub(crate) fn trace_inv_times(&self, other: &Self) -> F {
        let d = self.dim();
        let other_cols = match &other.factor {
            Factor::Diagonal(sd) => Array2::from_diag(sd),
            Factor::Full(l) => l.clone(),
        };
        (0..d)
            .map(|j| {
                let w = self.whiten(other_cols.column(j));
                w.dot(&w)
            })
            .sum()
    }

    /// Same factor, shifted mean.
    pub fn with_mean(&self, mean: Array1<F>) -> Result<Self> {
        if mean.len() != self.dim() {
            return Err(Error::dims(self.dim(), mean.len()));
        }
        Ok(Self {
            mean,
            factor: self.factor.clone(),
            log_det: self.log_det,
        })
    }
}

impl<F: Scalar> Density<F> for GaussianSpec<F> {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_pdf(&self, x: ArrayView1<'_, F>) -> Result<F> {
        if x.len() != self.dim() {
            return Err(Error::dims(self.dim(), x.len()));
        }
        let z = self.whiten((&x - &self.mean).view());
        let two_pi = F::lit(std::f64::consts::TAU);
        Ok(-F::lit(0.5) * (F::count(self.dim()) * two_pi.ln() + self.log_det + z.dot(&z)))
    }

    fn span_1d(&self) -> Option<(f64, f64)> {
        (self.dim() == 1).then(|| {
            let (m, s) = (self.mean[0].as_f64(), self.marginal_sd()[0].as_f64());
            (m - super::SPAN_SIGMAS * s, m + super::SPAN_SIGMAS * s)
        })
    }
}

impl<F: Scalar> Sampler<F> for GaussianSpec<F> {
    fn sample(&self, rng: &mut Rng) -> Array1<F> {
        let z = Array1::from_shape_fn(self.dim(), |_| {
            let v: f64 = StandardNormal.sample(rng);
            F::lit(v)
        });
        &self.mean + &self.color(z.view())
    }
}

fn cholesky<F: Scalar>(a: &Array2<F>) -> Result<Array2<F>> {
    let d = a.nrows();
    let mut l = Array2::<F>::zeros((d, d));
    for j in 0..d {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !(diag > F::zero()) {
            return Err(Error::invalid("covariance is not positive definite"));
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in j + 1..d {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    Ok(l)
}

fn forward_substitute<F: Scalar>(l: &Array2<F>, b: ArrayView1<'_, F>) -> Array1<F> {
    let d = b.len();
    let mut z = Array1::<F>::zeros(d);
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * z[k];
        }
        z[i] = s / l[[i, i]];
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::RandomSource;
    use ndarray::array;

    #[test]
    fn standard_normal_at_zero() {
        let g = GaussianSpec::<f64>::standard(1).unwrap();
        let v = g.log_pdf(array![0.0].view()).unwrap();
        assert!((v + 0.5 * std::f64::consts::TAU.ln()).abs() < 1e-14);
        assert!((v + 0.918_938_533_204_672_7).abs() < 1e-12);
    }

    #[test]
    fn symmetric_points_have_equal_density() {
        let g = GaussianSpec::<f64>::standard(1).unwrap();
        assert_eq!(
            g.log_pdf(array![1.0].view()).unwrap(),
            g.log_pdf(array![-1.0].view()).unwrap()
        );
    }

    #[test]
    fn density_at_mean_in_two_dims() {
        let mu = array![0.3, -1.7];
        let g = GaussianSpec::identity(mu.clone()).unwrap();
        let v = g.log_pdf(mu.view()).unwrap();
        assert!((v + std::f64::consts::TAU.ln()).abs() < 1e-14);
    }

    #[test]
    fn full_and_diagonal_agree() {
        let mu: Array1<f64> = array![1.0, 2.0, -0.5];
        let var = array![0.5, 2.0, 1.5];
        let a = GaussianSpec::diagonal(mu.clone(), var.clone()).unwrap();
        let b = GaussianSpec::full(mu, Array2::from_diag(&var)).unwrap();
        let x = array![0.1, 0.2, 0.3];
        assert!((a.log_pdf(x.view()).unwrap() - b.log_pdf(x.view()).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn full_covariance_matches_hand_formula() {
        // Σ = [[2, 1], [1, 2]], |Σ| = 3, Σ⁻¹ = [[2, -1], [-1, 2]] / 3.
        let g = GaussianSpec::full(array![0.0, 0.0], array![[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let x = array![1.0, -1.0];
        let quad = (2.0 + 2.0 + 2.0) / 3.0;
        let expected = -0.5 * (2.0 * std::f64::consts::TAU.ln() + 3.0_f64.ln() + quad);
        assert!((g.log_pdf(x.view()).unwrap() - expected).abs() < 1e-12);
        assert!((g.covariance()[[0, 1]] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_covariances() {
        assert!(GaussianSpec::full(array![0.0, 0.0], array![[1.0, 2.0], [2.0, 1.0]]).is_err());
        assert!(GaussianSpec::full(array![0.0, 0.0], array![[1.0, 0.5], [0.1, 1.0]]).is_err());
        assert!(GaussianSpec::diagonal(array![0.0], array![0.0]).is_err());
        let g = GaussianSpec::<f64>::standard(2).unwrap();
        assert!(matches!(
            g.log_pdf(array![1.0].view()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sample_moments() {
        let g = GaussianSpec::full(array![1.0, -2.0], array![[1.0, 0.6], [0.6, 2.0]]).unwrap();
        let mut rng = RandomSource::new(11).rng();
        let n = 40_000;
        let xs: Vec<Array1<f64>> = (0..n).map(|_| g.sample(&mut rng)).collect();
        let mean0 = xs.iter().map(|x| x[0]).sum::<f64>() / n as f64;
        let cov01 = xs.iter().map(|x| (x[0] - 1.0) * (x[1] + 2.0)).sum::<f64>() / n as f64;
        assert!((mean0 - 1.0).abs() < 0.03);
        assert!((cov01 - 0.6).abs() < 0.05);
    }
}
