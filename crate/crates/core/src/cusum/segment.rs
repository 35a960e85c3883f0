// SPDX-License-Identifier: MIT OR Apache-2.0

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::series::CusumSeries;
use crate::error::{Error, Result};

/// Tuning for the slope-change detector. `None` fields scale with the
/// series length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    /// Block length for the noise-variance estimate; default `max(5, ⌊n/100⌋)`.
    pub smoothing_window: Option<usize>,
    /// Minimum segment length and matching radius; default `max(1, ⌊n/50⌋)`.
    pub min_gap: Option<usize>,
    pub penalty_scale: f64,
    /// Breakpoints with a smaller slope change are dropped; 0 leaves the
    /// decision to the penalty alone.
    pub min_magnitude: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            smoothing_window: None,
            min_gap: None,
            penalty_scale: 3.0,
            min_magnitude: 0.0,
        }
    }
}

impl SegmentationConfig {
    pub fn smoothing_window_for(&self, n: usize) -> usize {
        self.smoothing_window.unwrap_or((n / 100).max(5))
    }

    pub fn min_gap_for(&self, n: usize) -> usize {
        self.min_gap.unwrap_or((n / 50).max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.smoothing_window == Some(0) {
            return Err(Error::invalid("smoothing_window must be at least 1"));
        }
        if self.min_gap == Some(0) {
            return Err(Error::invalid("min_gap must be at least 1"));
        }
        if !(self.penalty_scale >= 0.0 && self.penalty_scale.is_finite()) {
            return Err(Error::invalid(
                "penalty_scale must be finite and non-negative",
            ));
        }
        if !(self.min_magnitude >= 0.0) {
            return Err(Error::invalid("min_magnitude must be non-negative"));
        }
        Ok(())
    }
}

/// A vertex of the fitted piecewise-linear statistic: `index` is the last
/// instant of the old slope.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeChange {
    pub index: usize,
    pub slope_before: f64,
    pub slope_after: f64,
    pub magnitude: f64,
}

/// Finds the vertices of a piecewise-linear fit to `S`.
///
/// `S` is piecewise linear exactly when its increments are piecewise
/// constant, so the fit works on the increments: start from blocks of
/// `min_gap`, merge the adjacent pair with the smallest squared-error
/// increase until that increase exceeds `penalty_scale·σ̂²·ln n`, then
/// re-place each boundary optimally between its neighbours. `σ̂²` is the
/// pooled within-block variance of the increments.
///
/// Vertices within `min_gap` of `1`, `n` or the split are kept only while no
/// other vertex is at least as strong.
pub fn detect_slope_changes(
    series: &CusumSeries,
    config: &SegmentationConfig,
) -> Result<Vec<SlopeChange>> {
    fit_vertices(series, config, Some(series.t_split()))
}

/// As [`detect_slope_changes`], but a vertex at the split is treated like
/// any other. Used on re-split statistics, where the candidate is expected
/// to sit at the split.
pub(crate) fn detect_slope_changes_at_split(
    series: &CusumSeries,
    config: &SegmentationConfig,
) -> Result<Vec<SlopeChange>> {
    fit_vertices(series, config, None)
}

fn fit_vertices(
    series: &CusumSeries,
    config: &SegmentationConfig,
    split: Option<usize>,
) -> Result<Vec<SlopeChange>> {
    config.validate()?;
    let n = series.n();
    let gap = config.min_gap_for(n);
    if n < 3 * gap || n < 3 {
        return Err(Error::TooShort(format!(
            "slope detection needs n >= 3*min_gap = {}, got {n}",
            3 * gap
        )));
    }
    let r = series.increments();
    let sums = Prefix::new(&r);
    let sigma2 = pooled_variance(&r, config.smoothing_window_for(n));
    let scale = sums.sq[n] / n as f64;
    let threshold = config.penalty_scale * sigma2 * (n as f64).ln() + 1e-9 * (1.0 + scale);

    let mut bounds: Vec<usize> = (0..n).step_by(gap).collect();
    if n - bounds[bounds.len() - 1] < gap && bounds.len() > 1 {
        bounds.pop();
    }
    bounds.push(n);
    bounds = merge_bottom_up(&sums, bounds, threshold);
    for _ in 0..20 {
        let before = bounds.clone();
        refine(&sums, &mut bounds);
        bounds = merge_bottom_up(&sums, bounds, threshold);
        if bounds == before {
            break;
        }
    }
    enforce_min_len(&sums, &mut bounds, gap);

    let mut changes = Vec::new();
    for k in 1..bounds.len() - 1 {
        // Segment boundaries are 0-based starts; the vertex sits on the last
        // 1-based instant of the left segment.
        let index = bounds[k];
        if index <= 1 || index >= n {
            continue;
        }
        let before = sums.mean(bounds[k - 1], bounds[k]);
        let after = sums.mean(bounds[k], bounds[k + 1]);
        let magnitude = (after - before).abs();
        if magnitude > 0.0 && magnitude >= config.min_magnitude {
            changes.push(SlopeChange {
                index,
                slope_before: before,
                slope_after: after,
                magnitude,
            });
        }
    }
    Ok(filter_edges(changes, n, split, gap))
}

fn filter_edges(
    changes: Vec<SlopeChange>,
    n: usize,
    split: Option<usize>,
    gap: usize,
) -> Vec<SlopeChange> {
    let near =
        |i: usize| i - 1 <= gap || n - i <= gap || split.is_some_and(|t| i.abs_diff(t) <= gap);
    let strongest_interior = changes
        .iter()
        .filter(|c| !near(c.index))
        .map(|c| c.magnitude)
        .fold(f64::NEG_INFINITY, f64::max);
    changes
        .into_iter()
        .filter(|c| !near(c.index) || c.magnitude > strongest_interior)
        .collect()
}

struct Prefix {
    sum: Vec<f64>,
    sq: Vec<f64>,
}

impl Prefix {
    fn new(r: &[f64]) -> Self {
        let mut sum = vec![0.0; r.len() + 1];
        let mut sq = vec![0.0; r.len() + 1];
        for (i, x) in r.iter().enumerate() {
            sum[i + 1] = sum[i] + x;
            sq[i + 1] = sq[i] + x * x;
        }
        Self { sum, sq }
    }

    fn total(&self, a: usize, b: usize) -> f64 {
        self.sum[b] - self.sum[a]
    }

    fn mean(&self, a: usize, b: usize) -> f64 {
        self.total(a, b) / (b - a) as f64
    }

    /// Squared-error increase from fitting `[a, b)` and `[b, c)` with one mean.
    fn merge_cost(&self, a: usize, b: usize, c: usize) -> f64 {
        let (n1, n2) = ((b - a) as f64, (c - b) as f64);
        let d = self.mean(a, b) - self.mean(b, c);
        n1 * n2 / (n1 + n2) * d * d
    }

    /// Between-segment sum of squares of a split of `[a, c)` at `b`.
    fn split_gain(&self, a: usize, b: usize, c: usize) -> f64 {
        let (s1, s2) = (self.total(a, b), self.total(b, c));
        s1 * s1 / (b - a) as f64 + s2 * s2 / (c - b) as f64
    }
}

fn pooled_variance(r: &[f64], block: usize) -> f64 {
    let block = block.max(2);
    let (mut ss, mut dof) = (0.0, 0usize);
    for chunk in r.chunks(block) {
        if chunk.len() < 2 {
            continue;
        }
        let m = chunk.iter().sum::<f64>() / chunk.len() as f64;
        ss += chunk.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
        dof += chunk.len() - 1;
    }
    if dof == 0 {
        0.0
    } else {
        ss / dof as f64
    }
}

#[derive(PartialEq)]
struct Candidate {
    cost: f64,
    left: usize,
    stamp: (u64, u64),
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on cost; ties go to the leftmost pair.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.left.cmp(&self.left))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Greedy pairwise merging over segment boundaries `bounds` (0-based starts
/// plus the final `n`).
fn merge_bottom_up(sums: &Prefix, bounds: Vec<usize>, threshold: f64) -> Vec<usize> {
    let k = bounds.len() - 1;
    if k < 2 {
        return bounds;
    }
    let start: Vec<usize> = bounds[..k].to_vec();
    let mut end: Vec<usize> = bounds[1..].to_vec();
    let mut next: Vec<Option<usize>> = (0..k).map(|i| (i + 1 < k).then_some(i + 1)).collect();
    let mut prev: Vec<Option<usize>> = (0..k).map(|i| i.checked_sub(1)).collect();
    let mut alive = vec![true; k];
    let mut version = vec![0u64; k];
    let mut heap = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<Candidate>,
                l: usize,
                r: usize,
                start: &[usize],
                end: &[usize],
                version: &[u64]| {
        heap.push(Candidate {
            cost: sums.merge_cost(start[l], end[l], end[r]),
            left: l,
            stamp: (version[l], version[r]),
        });
    };
    for i in 0..k - 1 {
        push(&mut heap, i, i + 1, &start, &end, &version);
    }
    while let Some(c) = heap.pop() {
        let l = c.left;
        let Some(r) = next[l] else { continue };
        if !alive[l] || c.stamp != (version[l], version[r]) {
            continue;
        }
        if c.cost > threshold {
            break;
        }
        end[l] = end[r];
        alive[r] = false;
        next[l] = next[r];
        if let Some(nn) = next[r] {
            prev[nn] = Some(l);
        }
        version[l] += 1;
        if let Some(p) = prev[l] {
            push(&mut heap, p, l, &start, &end, &version);
        }
        if let Some(nn) = next[l] {
            push(&mut heap, l, nn, &start, &end, &version);
        }
    }
    let mut out: Vec<usize> = (0..k).filter(|&i| alive[i]).map(|i| start[i]).collect();
    out.push(bounds[k]);
    out
}

/// Moves each interior boundary to the best split between its neighbours.
fn refine(sums: &Prefix, bounds: &mut [usize]) {
    for j in 1..bounds.len() - 1 {
        let (a, c) = (bounds[j - 1], bounds[j + 1]);
        let mut best = bounds[j];
        let mut best_gain = sums.split_gain(a, best, c);
        for b in a + 1..c {
            let g = sums.split_gain(a, b, c);
            if g > best_gain + 1e-12 * best_gain.abs() {
                best = b;
                best_gain = g;
            }
        }
        bounds[j] = best;
    }
}

/// Folds segments shorter than `gap` into the neighbour they differ from
/// least.
fn enforce_min_len(sums: &Prefix, bounds: &mut Vec<usize>, gap: usize) {
    loop {
        let k = bounds.len() - 1;
        if k < 2 {
            return;
        }
        let Some(i) = (0..k).find(|&i| bounds[i + 1] - bounds[i] < gap) else {
            return;
        };
        let left = (i > 0).then(|| sums.merge_cost(bounds[i - 1], bounds[i], bounds[i + 1]));
        let right = (i + 1 < k).then(|| sums.merge_cost(bounds[i], bounds[i + 1], bounds[i + 2]));
        let drop = match (left, right) {
            (Some(l), Some(r)) if l <= r => i,
            (Some(_), None) => i,
            _ => i + 1,
        };
        bounds.remove(drop);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cusum::compute_cusum;

    fn from_increments(r: &[f64], t_split: usize) -> CusumSeries {
        compute_cusum(r, t_split).unwrap()
    }

    fn piecewise(n: usize, breaks: &[usize], slopes: &[f64]) -> Vec<f64> {
        (1..=n)
            .map(|t| slopes[breaks.iter().filter(|&&b| t > b).count()])
            .collect()
    }

    #[test]
    fn noiseless_single_vertex() {
        let r = piecewise(500, &[150], &[1.0, -1.0]);
        let cs = detect_slope_changes(&from_increments(&r, 250), &SegmentationConfig::default())
            .unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].index, 150);
        assert_eq!(cs[0].slope_before, 1.0);
        assert_eq!(cs[0].slope_after, -1.0);
        assert_eq!(cs[0].magnitude, 2.0);
    }

    #[test]
    fn straight_line_has_no_vertex() {
        let cs = detect_slope_changes(
            &from_increments(&[2.0; 500], 250),
            &SegmentationConfig::default(),
        )
        .unwrap();
        assert!(cs.is_empty());
    }

    #[test]
    fn noiseless_off_grid_vertices_are_exact() {
        let r = piecewise(600, &[137, 451], &[0.5, -1.5, 2.0]);
        let cs = detect_slope_changes(&from_increments(&r, 300), &SegmentationConfig::default())
            .unwrap();
        let idx: Vec<usize> = cs.iter().map(|c| c.index).collect();
        assert_eq!(idx, vec![137, 451]);
    }

    #[test]
    fn too_short_rejected() {
        let cfg = SegmentationConfig {
            min_gap: Some(10),
            ..Default::default()
        };
        assert!(matches!(
            detect_slope_changes(&from_increments(&[1.0; 20], 10), &cfg),
            Err(Error::TooShort(_))
        ));
    }

    #[test]
    fn split_vertex_dropped_when_weaker_than_interior() {
        // Strong genuine change at 150 and a weak kink at the split, 250.
        let r = piecewise(500, &[150, 250], &[1.0, -1.0, -1.5]);
        let cs = detect_slope_changes(&from_increments(&r, 250), &SegmentationConfig::default())
            .unwrap();
        assert_eq!(cs.iter().map(|c| c.index).collect::<Vec<_>>(), vec![150]);
    }

    #[test]
    fn split_vertex_kept_alone() {
        let r = piecewise(500, &[250], &[1.0, -1.0]);
        let cs = detect_slope_changes(&from_increments(&r, 250), &SegmentationConfig::default())
            .unwrap();
        assert_eq!(cs.iter().map(|c| c.index).collect::<Vec<_>>(), vec![250]);
    }

    #[test]
    fn noisy_change_found_and_null_is_quiet() {
        use rand::Rng;
        let mut rng = crate::random::RandomSource::new(9).rng();
        let noise: Vec<f64> = (0..500).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r: Vec<f64> = piecewise(500, &[200], &[0.6, -0.6])
            .iter()
            .zip(&noise)
            .map(|(a, b)| a + b)
            .collect();
        let cs = detect_slope_changes(&from_increments(&r, 250), &SegmentationConfig::default())
            .unwrap();
        assert_eq!(cs.len(), 1);
        assert!(cs[0].index.abs_diff(200) <= 10, "{cs:?}");
        let cs = detect_slope_changes(
            &from_increments(&noise, 250),
            &SegmentationConfig::default(),
        )
        .unwrap();
        assert!(cs.is_empty(), "{cs:?}");
    }
}
