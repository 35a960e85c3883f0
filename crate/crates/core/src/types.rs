// SPDX-License-Identifier: MIT OR Apache-2.0

//! Shared domain types: observation matrices, split descriptions, change-point
//! estimates and ground truth.
//!
//! All time indices are 1-based: row 1 of a series is `t = 1`.

use ndarray::{s, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An `n × d` matrix of finite observations, one row per time step.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries<F: Scalar> {
    data: Array2<F>,
}

impl<F: Scalar> TimeSeries<F> {
    pub fn new(data: Array2<F>) -> Result<Self> {
        let (n, d) = data.dim();
        if d == 0 {
            return Err(Error::invalid("time series must have at least one column"));
        }
        if n < 2 {
            return Err(Error::TooShort(format!("need at least 2 rows, got {n}")));
        }
        if let Some(((row, col), v)) = data.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value {v} at t={}, column {}",
                row + 1,
                col + 1
            )));
        }
        Ok(Self { data })
    }

    pub fn from_rows(rows: &[Vec<F>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::invalid(format!(
                "row {} has {} columns, expected {d}",
                i + 1,
                r.len()
            )));
        }
        let flat: Vec<F> = rows.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((rows.len(), d), flat)
            .map_err(|e| Error::invalid(e.to_string()))?;
        Self::new(data)
    }

    /// Univariate convenience constructor.
    pub fn from_values(values: &[F]) -> Result<Self> {
        let data = Array2::from_shape_vec((values.len(), 1), values.to_vec())
            .map_err(|e| Error::invalid(e.to_string()))?;
        Self::new(data)
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn d(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> ArrayView2<'_, F> {
        self.data.view()
    }

    /// Observation at 1-based time `t`.
    pub fn at(&self, t: usize) -> ArrayView1<'_, F> {
        assert!(
            (1..=self.n()).contains(&t),
            "time index {t} outside [1, {}]",
            self.n()
        );
        self.data.row(t - 1)
    }

    /// Rows for the 1-based inclusive range `[from, to]`.
    pub fn range(&self, from: usize, to: usize) -> ArrayView2<'_, F> {
        assert!(from >= 1 && from <= to && to <= self.n());
        self.data.slice(s![from - 1..to, ..])
    }

    /// Copy of the 1-based inclusive range `[from, to]` as its own series.
    pub fn window(&self, from: usize, to: usize) -> Result<Self> {
        if from < 1 || from > to || to > self.n() {
            return Err(Error::bounds(format!(
                "window [{from}, {to}] outside [1, {}]",
                self.n()
            )));
        }
        Self::new(self.range(from, to).to_owned())
    }

    pub fn rows(&self) -> impl Iterator<Item = ArrayView1<'_, F>> {
        self.data.axis_iter(Axis(0))
    }

    /// Converts every entry to another scalar type.
    pub fn cast<G: Scalar>(&self) -> TimeSeries<G> {
        TimeSeries {
            data: self.data.mapv(|v| G::lit(v.as_f64())),
        }
    }
}

/// Where to split a series for ratio learning, plus optional extra splits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub t_split: usize,
    #[serde(default)]
    pub verification_splits: Vec<usize>,
}

impl SplitConfig {
    pub fn new(t_split: usize) -> Self {
        Self {
            t_split,
            verification_splits: Vec::new(),
        }
    }

    /// Split at `⌊n/2⌋`.
    pub fn midpoint(n: usize) -> Self {
        Self::new(n / 2)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_split(n, self.t_split)?;
        for &t in &self.verification_splits {
            check_split(n, t)?;
        }
        Ok(())
    }
}

pub(crate) fn check_split(n: usize, t_split: usize) -> Result<()> {
    if n < 3 || t_split < 2 || t_split > n - 1 {
        return Err(Error::bounds(format!(
            "t_split={t_split} must satisfy 2 <= t_split <= n-1 (n={n})"
        )));
    }
    Ok(())
}

/// Which side of the true change the split falls on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitSide {
    /// `t_split <= t_star`: the left half is pure, the right half a mixture.
    SplitLeftOfChange,
    /// `t_split > t_star`: the left half is a mixture, the right half pure.
    SplitRightOfChange,
}

/// Mixture proportions induced by splitting a single-change series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitGeometry {
    pub n: usize,
    pub t_star: usize,
    pub t_split: usize,
    pub side: SplitSide,
    /// `(n - t_star) / (n - t_split)`, defined when `t_split <= t_star`.
    pub alpha1: Option<f64>,
    /// `t_star / t_split`, defined when `t_split >= t_star`.
    pub alpha2: Option<f64>,
}

impl SplitGeometry {
    /// The proportion that parameterizes the mixture half for this side.
    pub fn alpha(&self) -> f64 {
        match self.side {
            SplitSide::SplitLeftOfChange => self.alpha1.expect("alpha1 defined on the left side"),
            SplitSide::SplitRightOfChange => self.alpha2.expect("alpha2 defined on the right side"),
        }
    }
}

pub fn split_geometry(n: usize, t_star: usize, t_split: usize) -> Result<SplitGeometry> {
    if t_star < 1 || t_star > n {
        return Err(Error::bounds(format!("t_star={t_star} outside [1, {n}]")));
    }
    check_split(n, t_split)?;
    let alpha1 = (t_split <= t_star).then(|| (n - t_star) as f64 / (n - t_split) as f64);
    let alpha2 = (t_split >= t_star).then(|| t_star as f64 / t_split as f64);
    let side = if t_split <= t_star {
        SplitSide::SplitLeftOfChange
    } else {
        SplitSide::SplitRightOfChange
    };
    Ok(SplitGeometry {
        n,
        t_star,
        t_split,
        side,
        alpha1,
        alpha2,
    })
}

/// A located change point together with the local slope evidence for it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangePointEstimate {
    pub index: usize,
    pub slope_before: f64,
    pub slope_after: f64,
    pub magnitude: f64,
    pub verified: bool,
}

impl ChangePointEstimate {
    pub fn new(index: usize, slope_before: f64, slope_after: f64) -> Self {
        Self {
            index,
            slope_before,
            slope_after,
            magnitude: (slope_after - slope_before).abs(),
            verified: false,
        }
    }
}

/// True change locations, strictly increasing, each in `[2, n]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroundTruth {
    change_indices: Vec<usize>,
}

impl GroundTruth {
    pub fn new(change_indices: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(&t) = change_indices.iter().find(|&&t| t < 2 || t > n) {
            return Err(Error::bounds(format!("change index {t} outside [2, {n}]")));
        }
        if change_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("change indices must be strictly increasing"));
        }
        Ok(Self { change_indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.change_indices
    }

    pub fn len(&self) -> usize {
        self.change_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.change_indices.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn geometry_right_of_change() {
        let g = split_geometry(500, 150, 250).unwrap();
        assert_eq!(g.side, SplitSide::SplitRightOfChange);
        assert_eq!(g.alpha2, Some(0.6));
        assert_eq!(g.alpha1, None);
    }

    #[test]
    fn geometry_left_of_change() {
        let g = split_geometry(500, 150, 100).unwrap();
        assert_eq!(g.side, SplitSide::SplitLeftOfChange);
        assert_eq!(g.alpha1, Some(0.875));
        assert_eq!(g.alpha2, None);
    }

    #[test]
    fn geometry_tie_is_left_with_both_alphas() {
        let g = split_geometry(100, 50, 50).unwrap();
        assert_eq!(g.side, SplitSide::SplitLeftOfChange);
        assert_eq!(g.alpha1, Some(1.0));
        assert_eq!(g.alpha2, Some(1.0));
    }

    #[test]
    fn geometry_rejects_out_of_range() {
        assert!(matches!(split_geometry(100, 0, 50), Err(Error::Bounds(_))));
        assert!(matches!(
            split_geometry(100, 101, 50),
            Err(Error::Bounds(_))
        ));
        assert!(matches!(split_geometry(100, 50, 1), Err(Error::Bounds(_))));
        assert!(matches!(
            split_geometry(100, 50, 100),
            Err(Error::Bounds(_))
        ));
    }

    #[test]
    fn series_rejects_non_finite_and_short() {
        assert!(TimeSeries::from_values(&[1.0_f64, f64::NAN]).is_err());
        assert!(TimeSeries::from_values(&[1.0_f64]).is_err());
        let s =
            TimeSeries::from_rows(&[vec![1.0_f64, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!((s.n(), s.d()), (3, 2));
        assert_eq!(s.at(2)[1], 4.0);
        assert_eq!(s.window(2, 3).unwrap().at(1)[0], 3.0);
    }

    #[test]
    fn ground_truth_validation() {
        assert!(GroundTruth::new(vec![2, 5, 9], 10).is_ok());
        assert!(GroundTruth::new(vec![5, 5], 10).is_err());
        assert!(GroundTruth::new(vec![1], 10).is_err());
        assert!(GroundTruth::new(vec![11], 10).is_err());
    }

    proptest! {
        #[test]
        fn alphas_lie_in_unit_interval(n in 3usize..2000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let t_star = 1 + ((n - 1) as f64 * a) as usize;
            let t_split = 2 + ((n - 3) as f64 * b) as usize;
            let g = split_geometry(n, t_star, t_split).unwrap();
            for alpha in [g.alpha1, g.alpha2].into_iter().flatten() {
                prop_assert!(alpha > 0.0 && alpha <= 1.0);
            }
            prop_assert!(g.alpha1.is_some() || g.alpha2.is_some());
            prop_assert_eq!(g, split_geometry(n, t_star, t_split).unwrap());
        }
    }
}
