// SPDX-License-Identifier: MIT OR Apache-2.0

//! Empirical KLIEP and LSIF objectives over a pair of minibatches.

use ndarray::{concatenate, s, Array1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::model::DensityRatioModel;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Maximize `mean_left ln ŵ − λ (mean_right ŵ − 1)`.
    Kliep,
    /// Minimize `mean_left ŵ² − 2 mean_right ŵ`.
    Lsif,
}

impl Objective {
    /// KLIEP is ascended, LSIF descended.
    pub fn maximizes(self) -> bool {
        matches!(self, Self::Kliep)
    }
}

/// An objective together with its tuning knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub objective: Objective,
    /// Lagrange weight on the KLIEP normalization constraint.
    pub lagrange: f64,
    /// LSIF only: put `ŵ²` under the right batch and `ŵ` under the left one.
    pub lsif_swap: bool,
}

impl ObjectiveSpec {
    pub fn kliep(lagrange: f64) -> Self {
        Self {
            objective: Objective::Kliep,
            lagrange,
            lsif_swap: false,
        }
    }

    pub fn lsif() -> Self {
        Self {
            objective: Objective::Lsif,
            lagrange: 0.0,
            lsif_swap: false,
        }
    }

    /// Objective value and `∂J/∂ŵ` for each left and right sample.
    pub(crate) fn value_and_slopes<F: Scalar>(
        &self,
        left: &Array1<F>,
        right: &Array1<F>,
    ) -> (F, Array1<F>, Array1<F>) {
        let n1 = F::count(left.len());
        let n2 = F::count(right.len());
        let two = F::lit(2.0);
        match (self.objective, self.lsif_swap) {
            (Objective::Kliep, _) => {
                let lambda = F::lit(self.lagrange);
                let value = left.iter().map(|w| w.ln()).sum::<F>() / n1
                    - lambda * (right.sum() / n2 - F::one());
                let dl = left.mapv(|w| F::one() / (n1 * w));
                let dr = Array1::from_elem(right.len(), -lambda / n2);
                (value, dl, dr)
            }
            (Objective::Lsif, false) => {
                let value = left.iter().map(|&w| w * w).sum::<F>() / n1 - two * right.sum() / n2;
                let dl = left.mapv(|w| two * w / n1);
                let dr = Array1::from_elem(right.len(), -two / n2);
                (value, dl, dr)
            }
            (Objective::Lsif, true) => {
                let value = right.iter().map(|&w| w * w).sum::<F>() / n2 - two * left.sum() / n1;
                let dl = Array1::from_elem(left.len(), -two / n1);
                let dr = right.mapv(|w| two * w / n2);
                (value, dl, dr)
            }
        }
    }
}

fn check_batches<F: Scalar>(left: &ArrayView2<'_, F>, right: &ArrayView2<'_, F>) -> Result<()> {
    if left.nrows() == 0 || right.nrows() == 0 {
        return Err(Error::invalid("objective batches must be non-empty"));
    }
    Ok(())
}

/// Empirical objective value on the given batches.
pub fn objective_value<F: Scalar>(
    model: &DensityRatioModel<F>,
    left: ArrayView2<'_, F>,
    right: ArrayView2<'_, F>,
    spec: &ObjectiveSpec,
) -> Result<F> {
    check_batches(&left, &right)?;
    let wl = model.predict_batch(left)?;
    let wr = model.predict_batch(right)?;
    Ok(spec.value_and_slopes(&wl, &wr).0)
}

pub fn kliep_objective<F: Scalar>(
    model: &DensityRatioModel<F>,
    left: ArrayView2<'_, F>,
    right: ArrayView2<'_, F>,
    lagrange: f64,
) -> Result<F> {
    objective_value(model, left, right, &ObjectiveSpec::kliep(lagrange))
}

pub fn lsif_objective<F: Scalar>(
    model: &DensityRatioModel<F>,
    left: ArrayView2<'_, F>,
    right: ArrayView2<'_, F>,
) -> Result<F> {
    objective_value(model, left, right, &ObjectiveSpec::lsif())
}

/// Objective value and its analytic gradient with respect to the model
/// parameters. Left and right batches share one forward pass.
pub fn objective_gradient<F: Scalar>(
    model: &DensityRatioModel<F>,
    left: ArrayView2<'_, F>,
    right: ArrayView2<'_, F>,
    spec: &ObjectiveSpec,
) -> Result<(F, Vec<F>)> {
    check_batches(&left, &right)?;
    let n1 = left.nrows();
    let stacked =
        concatenate(Axis(0), &[left, right]).map_err(|e| Error::invalid(e.to_string()))?;
    let eval = model.evaluate(stacked.view())?;
    let wl = eval.ratios.slice(s![..n1]).to_owned();
    let wr = eval.ratios.slice(s![n1..]).to_owned();
    let (value, dl, dr) = spec.value_and_slopes(&wl, &wr);
    let d = concatenate(Axis(0), &[dl.view(), dr.view()]).expect("same rank");
    Ok((value, model.backward(&eval, d.view())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    /// Kernel model with every weight zero except the bias, so
    /// `ŵ ≡ softplus(θ₀)`.
    fn constant_model(w: f64) -> DensityRatioModel<f64> {
        let theta0 = (w.exp() - 1.0).ln();
        DensityRatioModel::kernel(array![[0.0, 0.0]], 1.0, vec![theta0, 0.0], 1e-6).unwrap()
    }

    fn batches() -> (ndarray::Array2<f64>, ndarray::Array2<f64>) {
        (
            array![[0.1, 0.2], [1.0, -1.0], [0.5, 0.5]],
            array![[2.0, 0.0], [-0.3, 0.7]],
        )
    }

    #[test]
    fn kliep_of_unit_ratio_is_zero() {
        let (l, r) = batches();
        for lambda in [0.0, 1.0, 3.7] {
            let v = kliep_objective(&constant_model(1.0), l.view(), r.view(), lambda).unwrap();
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn kliep_of_constant_e() {
        let (l, r) = batches();
        let v = kliep_objective(
            &constant_model(std::f64::consts::E),
            l.view(),
            r.view(),
            1.0,
        )
        .unwrap();
        assert!((v - (2.0 - std::f64::consts::E)).abs() < 1e-12);
        assert!((v + 0.718_281_828_459_045).abs() < 1e-12);
    }

    #[test]
    fn lsif_of_constants() {
        let (l, r) = batches();
        assert!(
            (lsif_objective(&constant_model(1.0), l.view(), r.view()).unwrap() + 1.0).abs() < 1e-12
        );
        assert!(
            (lsif_objective(&constant_model(0.5), l.view(), r.view()).unwrap() + 0.75).abs()
                < 1e-12
        );
    }

    #[test]
    fn empty_batch_rejected() {
        let (l, _) = batches();
        let empty = ndarray::Array2::<f64>::zeros((0, 2));
        assert!(lsif_objective(&constant_model(1.0), l.view(), empty.view()).is_err());
    }
}
