// SPDX-License-Identifier: MIT OR Apache-2.0

//! Gaussian-kernel ratio model `ŵ(x) = softplus(θ₀ + Σ_k θ_k exp(-‖x - c_k‖² / 2σ²))`.
//!
//! Parameter layout: `[θ₀, θ₁, …, θ_K]`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{softplus, Scalar};

/// Kernel design matrix `Φ[i, k] = exp(-‖x_i - c_k‖² / 2σ²)`.
pub(crate) fn design<F: Scalar>(
    x: ArrayView2<'_, F>,
    centers: ArrayView2<'_, F>,
    bandwidth: F,
) -> Array2<F> {
    let x_sq: Array1<F> = x.map_axis(Axis(1), |r| r.dot(&r));
    let c_sq: Array1<F> = centers.map_axis(Axis(1), |r| r.dot(&r));
    let mut phi = x.dot(&centers.t());
    let scale = -F::one() / (F::lit(2.0) * bandwidth * bandwidth);
    for ((i, k), v) in phi.indexed_iter_mut() {
        let d2 = (x_sq[i] + c_sq[k] - F::lit(2.0) * *v).max(F::zero());
        *v = (d2 * scale).exp();
    }
    phi
}

pub(crate) fn logits<F: Scalar>(phi: &Array2<F>, params: &[F]) -> Array1<F> {
    let theta = ArrayView1::from(&params[1..]);
    phi.dot(&theta) + params[0]
}

pub(crate) fn raw_outputs<F: Scalar>(
    x: ArrayView2<'_, F>,
    centers: ArrayView2<'_, F>,
    bandwidth: F,
    params: &[F],
) -> Array1<F> {
    logits(&design(x, centers, bandwidth), params).mapv(softplus)
}

pub(crate) fn backward<F: Scalar>(phi: &Array2<F>, d_logits: ArrayView1<'_, F>) -> Vec<F> {
    let mut grad = Vec::with_capacity(phi.ncols() + 1);
    grad.push(d_logits.sum());
    grad.extend(phi.t().dot(&d_logits));
    grad
}

/// Picks `k` distinct rows of `samples` as kernel centers.
pub(crate) fn sample_centers<F: Scalar, R: Rng>(
    samples: ArrayView2<'_, F>,
    k: usize,
    rng: &mut R,
) -> Result<Array2<F>> {
    if k == 0 || k > samples.nrows() {
        return Err(Error::invalid(format!(
            "n_centers={k} must be in [1, {}]",
            samples.nrows()
        )));
    }
    let idx = sample(rng, samples.nrows(), k).into_vec();
    Ok(samples.select(Axis(0), &idx))
}

/// Median pairwise Euclidean distance over at most `MAX_POINTS` rows.
pub fn median_bandwidth<F: Scalar, R: Rng>(samples: ArrayView2<'_, F>, rng: &mut R) -> Result<F> {
    const MAX_POINTS: usize = 500;
    let n = samples.nrows();
    if n < 2 {
        return Err(Error::invalid("median bandwidth needs at least 2 samples"));
    }
    let rows: Vec<usize> = if n > MAX_POINTS {
        let mut idx = sample(rng, n, MAX_POINTS).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..n).collect()
    };
    let mut dists = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for (a, &i) in rows.iter().enumerate() {
        for &j in &rows[a + 1..] {
            let d2: F = samples
                .row(i)
                .iter()
                .zip(samples.row(j))
                .map(|(&u, &v)| (u - v) * (u - v))
                .sum();
            dists.push(d2.sqrt());
        }
    }
    dists.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let m = dists.len();
    let median = if m % 2 == 1 {
        dists[m / 2]
    } else {
        (dists[m / 2 - 1] + dists[m / 2]) / F::lit(2.0)
    };
    if median <= F::zero() {
        return Err(Error::Degenerate(
            "median pairwise distance is zero; samples are identical".into(),
        ));
    }
    Ok(median)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::RandomSource;
    use ndarray::array;

    #[test]
    fn median_of_two_points() {
        let s = array![[0.0_f64], [1.0]];
        let mut rng = RandomSource::new(0).rng();
        assert_eq!(median_bandwidth(s.view(), &mut rng).unwrap(), 1.0);
    }

    #[test]
    fn median_of_three_points() {
        let s = array![[0.0_f64], [1.0], [2.0]];
        let mut rng = RandomSource::new(0).rng();
        assert_eq!(median_bandwidth(s.view(), &mut rng).unwrap(), 1.0);
    }

    #[test]
    fn median_is_homogeneous() {
        let s = array![[0.0_f64, 1.0], [1.5, -2.0], [3.0, 0.5], [-1.0, 4.0]];
        let mut rng = RandomSource::new(0).rng();
        let base = median_bandwidth(s.view(), &mut rng).unwrap();
        let scaled = s.mapv(|v| v * 3.5);
        let got = median_bandwidth(scaled.view(), &mut rng).unwrap();
        assert!((got - 3.5 * base).abs() < 1e-12);
    }

    #[test]
    fn identical_samples_rejected() {
        let s = array![[2.0_f64], [2.0], [2.0]];
        let mut rng = RandomSource::new(0).rng();
        assert!(matches!(
            median_bandwidth(s.view(), &mut rng),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn single_center_is_a_gaussian_bump() {
        let centers = array![[1.0_f64, -1.0]];
        let x = array![[0.0_f64, 0.0], [1.0, -1.0], [2.0, 1.0]];
        let params = [0.25_f64, 1.5];
        let sigma = 0.8;
        let out = raw_outputs(x.view(), centers.view(), sigma, &params);
        for (i, row) in x.rows().into_iter().enumerate() {
            let d2 = (row[0] - 1.0).powi(2) + (row[1] + 1.0).powi(2);
            let z = 0.25 + 1.5 * (-d2 / (2.0 * sigma * sigma)).exp();
            assert!((out[i] - (1.0 + z.exp()).ln()).abs() < 1e-12);
        }
    }
}
