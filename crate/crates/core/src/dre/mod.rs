// SPDX-License-Identifier: MIT OR Apache-2.0

//! Trainable density-ratio estimators.

mod kernel;
mod mlp;
mod model;
mod objective;
mod persist;
mod train;

pub use kernel::median_bandwidth;
pub use model::{DensityRatioModel, ModelKind};
pub use objective::{
    kliep_objective, lsif_objective, objective_gradient, objective_value, Objective, ObjectiveSpec,
};
pub use persist::{load_model, save_model, ModelFile};
pub use train::{
    train, Bandwidth, DreConfig, EarlyStopping, KernelConfig, MlpConfig, Optimizer, TrainReport,
};

/// Fresh, untrained network with the standard initialization.
pub fn init_feed_forward<F: crate::Scalar>(
    input_dim: usize,
    hidden: &[usize],
    clamp_eps: f64,
    rng: &crate::RandomSource,
) -> crate::Result<DensityRatioModel<F>> {
    let params = mlp::init_parameters(input_dim, hidden, &mut rng.rng());
    DensityRatioModel::feed_forward(input_dim, hidden.to_vec(), params, F::lit(clamp_eps))
}
