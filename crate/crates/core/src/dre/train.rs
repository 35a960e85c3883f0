// SPDX-License-Identifier: MIT OR Apache-2.0

//! Minibatch training of ratio models.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernel::{median_bandwidth, sample_centers};
use super::mlp;
use super::model::DensityRatioModel;
use super::objective::{objective_gradient, objective_value, Objective, ObjectiveSpec};
use crate::error::{Error, Result};
use crate::random::RandomSource;
use crate::scalar::Scalar;

/// Fraction of each side kept out of gradient steps for diagnostics.
const HOLDOUT_FRACTION: f64 = 0.1;

/// Parameter update rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    /// Plain gradient steps with a constant learning rate.
    Sgd,
    /// Adam with bias correction.
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
}

impl Optimizer {
    pub const fn adam() -> Self {
        Self::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Held-out monitoring: every `check_every` iterations the objective is
/// evaluated on the held-out rows, and training stops after `patience`
/// checks without improvement. The best checked parameters are kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EarlyStopping {
    pub check_every: usize,
    pub patience: usize,
}

impl Default for EarlyStopping {
    fn default() -> Self {
        Self {
            check_every: 10,
            patience: 5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Fixed(f64),
    MedianHeuristic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelConfig {
    pub n_centers: usize,
    pub bandwidth: Bandwidth,
    pub objective: Objective,
    pub lagrange: f64,
    pub lsif_swap: bool,
    pub learning_rate: f64,
    pub iterations: usize,
    pub batch_left: usize,
    pub batch_right: usize,
    pub optimizer: Optimizer,
    pub clamp_eps: f64,
    /// `None` runs every iteration.
    pub early_stopping: Option<EarlyStopping>,
    /// Number of disjoint folds used when scoring a series: each row's
    /// ratio comes from a model trained without that row. `1` trains once
    /// on everything.
    pub cross_fit_folds: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            n_centers: 100,
            bandwidth: Bandwidth::MedianHeuristic,
            objective: Objective::Kliep,
            lagrange: 1.0,
            lsif_swap: false,
            learning_rate: 0.05,
            iterations: 500,
            batch_left: 64,
            batch_right: 64,
            optimizer: Optimizer::adam(),
            clamp_eps: 1e-6,
            early_stopping: Some(EarlyStopping::default()),
            cross_fit_folds: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden_widths: Vec<usize>,
    pub objective: Objective,
    pub lagrange: f64,
    pub lsif_swap: bool,
    pub learning_rate: f64,
    pub iterations: usize,
    pub batch_left: usize,
    pub batch_right: usize,
    pub optimizer: Optimizer,
    pub clamp_eps: f64,
    /// `None` runs every iteration.
    pub early_stopping: Option<EarlyStopping>,
    /// Number of disjoint folds used when scoring a series: each row's
    /// ratio comes from a model trained without that row. `1` trains once
    /// on everything.
    pub cross_fit_folds: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_widths: vec![256, 512, 128],
            objective: Objective::Kliep,
            lagrange: 1.0,
            lsif_swap: false,
            learning_rate: 1e-3,
            iterations: 500,
            batch_left: 64,
            batch_right: 64,
            optimizer: Optimizer::adam(),
            clamp_eps: 1e-6,
            early_stopping: Some(EarlyStopping::default()),
            cross_fit_folds: 2,
        }
    }
}

/// Either trainable estimator family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum DreConfig {
    Kernel(KernelConfig),
    Mlp(MlpConfig),
}

impl Default for DreConfig {
    fn default() -> Self {
        Self::Mlp(MlpConfig::default())
    }
}

struct Common {
    spec: ObjectiveSpec,
    learning_rate: f64,
    iterations: usize,
    batch_left: usize,
    batch_right: usize,
    optimizer: Optimizer,
    early_stopping: Option<EarlyStopping>,
    cross_fit_folds: usize,
}

impl DreConfig {
    fn common(&self) -> Common {
        match self {
            Self::Kernel(c) => Common {
                spec: ObjectiveSpec {
                    objective: c.objective,
                    lagrange: c.lagrange,
                    lsif_swap: c.lsif_swap,
                },
                learning_rate: c.learning_rate,
                iterations: c.iterations,
                batch_left: c.batch_left,
                batch_right: c.batch_right,
                optimizer: c.optimizer,
                early_stopping: c.early_stopping,
                cross_fit_folds: c.cross_fit_folds,
            },
            Self::Mlp(c) => Common {
                spec: ObjectiveSpec {
                    objective: c.objective,
                    lagrange: c.lagrange,
                    lsif_swap: c.lsif_swap,
                },
                learning_rate: c.learning_rate,
                iterations: c.iterations,
                batch_left: c.batch_left,
                batch_right: c.batch_right,
                optimizer: c.optimizer,
                early_stopping: c.early_stopping,
                cross_fit_folds: c.cross_fit_folds,
            },
        }
    }

    pub fn objective_spec(&self) -> ObjectiveSpec {
        self.common().spec
    }

    pub fn cross_fit_folds(&self) -> usize {
        self.common().cross_fit_folds
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.common();
        if !(c.learning_rate > 0.0 && c.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if c.batch_left == 0 || c.batch_right == 0 {
            return Err(Error::invalid("batch sizes must be at least 1"));
        }
        if c.cross_fit_folds == 0 {
            return Err(Error::invalid("cross_fit_folds must be at least 1"));
        }
        if let Some(es) = c.early_stopping {
            if es.check_every == 0 || es.patience == 0 {
                return Err(Error::invalid(
                    "early_stopping check_every and patience must be at least 1",
                ));
            }
        }
        if c.spec.lagrange < 0.0 {
            return Err(Error::invalid("lagrange weight must be non-negative"));
        }
        match self {
            Self::Kernel(k) => {
                if k.n_centers == 0 {
                    return Err(Error::invalid("n_centers must be at least 1"));
                }
                if let Bandwidth::Fixed(b) = k.bandwidth {
                    if !(b > 0.0) {
                        return Err(Error::invalid("fixed bandwidth must be positive"));
                    }
                }
                check_eps(k.clamp_eps)
            }
            Self::Mlp(m) => {
                if m.hidden_widths.is_empty() || m.hidden_widths.contains(&0) {
                    return Err(Error::invalid(
                        "hidden_widths needs at least one non-zero layer",
                    ));
                }
                check_eps(m.clamp_eps)
            }
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid("clamp_eps must lie in (0, 1)"));
    }
    Ok(())
}

/// Diagnostics from a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Objective on the held-out batches (training batches when nothing is held out).
    pub final_objective: f64,
    pub iterations_run: usize,
    /// `|mean ŵ − 1|` over held-out right-side samples.
    pub normalization_residual: f64,
    /// Minibatch objective value at each iteration, before the update.
    pub objective_trace: Vec<f64>,
}

/// Train/held-out partition of one side.
struct Side<F: Scalar> {
    train: Array2<F>,
    held: Array2<F>,
}

fn partition<F: Scalar, R: Rng>(x: ArrayView2<'_, F>, rng: &mut R) -> Side<F> {
    let n = x.nrows();
    let n_held = (n as f64 * HOLDOUT_FRACTION).floor() as usize;
    let n_held = n_held.min(n.saturating_sub(2));
    let held_idx = {
        let mut v = sample(rng, n, n_held).into_vec();
        v.sort_unstable();
        v
    };
    let mut is_held = vec![false; n];
    for &i in &held_idx {
        is_held[i] = true;
    }
    let train_idx: Vec<usize> = (0..n).filter(|&i| !is_held[i]).collect();
    Side {
        train: x.select(Axis(0), &train_idx),
        held: x.select(Axis(0), &held_idx),
    }
}

fn draw_batch<F: Scalar, R: Rng>(x: &Array2<F>, size: usize, rng: &mut R) -> Array2<F> {
    let size = size.min(x.nrows());
    let idx = sample(rng, x.nrows(), size).into_vec();
    x.select(Axis(0), &idx)
}

fn initial_model<F: Scalar, R: Rng>(
    config: &DreConfig,
    left: &Array2<F>,
    right: &Array2<F>,
    d: usize,
    rng: &mut R,
) -> Result<DensityRatioModel<F>> {
    match config {
        DreConfig::Kernel(k) => {
            let bandwidth = match k.bandwidth {
                Bandwidth::Fixed(b) => F::lit(b),
                Bandwidth::MedianHeuristic => {
                    let pooled = ndarray::concatenate(Axis(0), &[left.view(), right.view()])
                        .map_err(|e| Error::invalid(e.to_string()))?;
                    median_bandwidth(pooled.view(), rng)?
                }
            };
            let centers = sample_centers(left.view(), k.n_centers.min(left.nrows()), rng)?;
            let params = vec![F::zero(); centers.nrows() + 1];
            DensityRatioModel::kernel(centers, bandwidth, params, F::lit(k.clamp_eps))
        }
        DreConfig::Mlp(m) => {
            let params = mlp::init_parameters(d, &m.hidden_widths, rng);
            DensityRatioModel::feed_forward(d, m.hidden_widths.clone(), params, F::lit(m.clamp_eps))
        }
    }
}

enum State<F> {
    Sgd,
    Adam { m: Vec<F>, v: Vec<F>, t: i32 },
}

/// Fits a ratio model to `left ~ P_left` and `right ~ P_right`.
///
/// Deterministic given `rng`. Batches larger than the available training
/// rows are shrunk to fit; each side needs at least two rows.
pub fn train<F: Scalar>(
    config: &DreConfig,
    left: ArrayView2<'_, F>,
    right: ArrayView2<'_, F>,
    rng: &RandomSource,
) -> Result<(DensityRatioModel<F>, TrainReport)> {
    config.validate()?;
    if left.ncols() != right.ncols() {
        return Err(Error::dims(left.ncols(), right.ncols()));
    }
    if left.nrows() < 2 || right.nrows() < 2 {
        return Err(Error::TooShort(format!(
            "training needs at least 2 samples per side, got {} and {}",
            left.nrows(),
            right.nrows()
        )));
    }
    let c = config.common();
    let mut rng = rng.rng();
    let l = partition(left, &mut rng);
    let r = partition(right, &mut rng);
    let mut model = initial_model(config, &l.train, &r.train, left.ncols(), &mut rng)?;

    let lr = F::lit(c.learning_rate);
    let sign = if c.spec.objective.maximizes() {
        F::one()
    } else {
        -F::one()
    };
    let mut state = match c.optimizer {
        Optimizer::Sgd => State::Sgd,
        Optimizer::Adam { .. } => State::Adam {
            m: vec![F::zero(); model.parameters().len()],
            v: vec![F::zero(); model.parameters().len()],
            t: 0,
        },
    };
    let mut trace = Vec::with_capacity(c.iterations);
    let monitor = c
        .early_stopping
        .filter(|_| l.held.nrows() > 0 && r.held.nrows() > 0);
    let held_score = |m: &DensityRatioModel<F>| -> Result<f64> {
        Ok(sign.as_f64() * objective_value(m, l.held.view(), r.held.view(), &c.spec)?.as_f64())
    };
    let mut best = match monitor {
        Some(_) => Some((held_score(&model)?, model.parameters().to_vec())),
        None => None,
    };
    let mut stale = 0;
    let mut iterations_run = 0;

    for iteration in 0..c.iterations {
        let bl = draw_batch(&l.train, c.batch_left, &mut rng);
        let br = draw_batch(&r.train, c.batch_right, &mut rng);
        let (value, grad) = objective_gradient(&model, bl.view(), br.view(), &c.spec)?;
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Training {
                iteration,
                reason: "non-finite objective or gradient; lower the learning rate".into(),
            });
        }
        trace.push(value.as_f64());
        match (&mut state, c.optimizer) {
            (State::Sgd, _) => {
                for (p, g) in model.parameters_mut().iter_mut().zip(&grad) {
                    *p += sign * lr * *g;
                }
            }
            (
                State::Adam { m, v, t },
                Optimizer::Adam {
                    beta1,
                    beta2,
                    epsilon,
                },
            ) => {
                *t += 1;
                let (b1, b2) = (F::lit(beta1), F::lit(beta2));
                let c1 = F::one() - b1.powi(*t);
                let c2 = F::one() - b2.powi(*t);
                let eps = F::lit(epsilon);
                for (((p, g), mi), vi) in model
                    .parameters_mut()
                    .iter_mut()
                    .zip(&grad)
                    .zip(m.iter_mut())
                    .zip(v.iter_mut())
                {
                    *mi = b1 * *mi + (F::one() - b1) * *g;
                    *vi = b2 * *vi + (F::one() - b2) * *g * *g;
                    let step = (*mi / c1) / ((*vi / c2).sqrt() + eps);
                    *p += sign * lr * step;
                }
            }
            (State::Adam { .. }, Optimizer::Sgd) => unreachable!("state follows optimizer"),
        }
        if model.parameters().iter().any(|p| !p.is_finite()) {
            return Err(Error::Training {
                iteration,
                reason: "parameters became non-finite; lower the learning rate".into(),
            });
        }
        iterations_run = iteration + 1;
        if let (Some(es), Some((best_score, best_params))) = (monitor, best.as_mut()) {
            if iterations_run % es.check_every == 0 {
                let score = held_score(&model)?;
                if score > *best_score {
                    *best_score = score;
                    best_params.copy_from_slice(model.parameters());
                    stale = 0;
                } else {
                    stale += 1;
                    if stale >= es.patience {
                        break;
                    }
                }
            }
        }
    }
    if let Some((best_score, best_params)) = best {
        if held_score(&model)? < best_score {
            model.parameters_mut().copy_from_slice(&best_params);
        }
    }

    let (eval_left, eval_right) = if l.held.nrows() > 0 && r.held.nrows() > 0 {
        (l.held.view(), r.held.view())
    } else {
        (l.train.view(), r.train.view())
    };
    let final_objective = objective_value(&model, eval_left, eval_right, &c.spec)?.as_f64();
    let mean_right = model
        .predict_batch(eval_right)?
        .mean()
        .expect("non-empty")
        .as_f64();
    let report = TrainReport {
        final_objective,
        iterations_run,
        normalization_residual: (mean_right - 1.0).abs(),
        objective_trace: trace,
    };
    Ok((model, report))
}
