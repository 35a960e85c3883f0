// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use common::{draw, uniform_matrix, worst_formula_error, worst_gradient_error};
use drecusum::distributions::GaussianSpec;
use drecusum::dre::{
    init_feed_forward, train, DensityRatioModel, DreConfig, KernelConfig, MlpConfig, Optimizer,
};
use drecusum::RandomSource;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn gradients_match_central_differences() {
    let worst = worst_gradient_error(0..3);
    assert!(worst <= 1e-4, "{worst}");
}

#[test]
fn objectives_match_duplicate_formulas() {
    let worst = worst_formula_error(0..4);
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn single_center_kernel_is_a_scaled_bump() {
    // θ₀ = 0, θ₁ = 2, σ = 0.5, c = (1, -1): ŵ(x) = softplus(2·exp(-‖x-c‖²/0.5)).
    let m =
        DensityRatioModel::kernel(ndarray::array![[1.0, -1.0]], 0.5, vec![0.0, 2.0], 1e-6).unwrap();
    for x in [[1.0, -1.0], [0.0, 0.0], [1.5, -0.5], [4.0, 2.0]] {
        let d2 = (x[0] - 1.0f64).powi(2) + (x[1] + 1.0f64).powi(2);
        let expected = (2.0 * (-d2 / 0.5).exp()).exp().ln_1p();
        let got = m.predict_ratio(ndarray::arr1(&x).view()).unwrap();
        assert!((got - expected).abs() < 1e-14, "{x:?}");
    }
}

fn identity_config() -> DreConfig {
    DreConfig::Mlp(MlpConfig::default())
}

#[test]
fn identity_task_learns_a_flat_ratio() {
    let g = GaussianSpec::<f32>::identity(Array1::zeros(10)).unwrap();
    let mut rng = RandomSource::new(11).rng();
    let left = draw(1000, &g, &mut rng);
    let right = draw(1000, &g, &mut rng);
    let (model, report) = train(
        &identity_config(),
        left.view(),
        right.view(),
        &RandomSource::new(12),
    )
    .unwrap();
    let test = draw(1000, &g, &mut rng);
    let mean_abs = model
        .predict_batch(test.view())
        .unwrap()
        .iter()
        .map(|w| (*w as f64).ln().abs())
        .sum::<f64>()
        / 1000.0;
    assert!(mean_abs < 0.2, "mean |log w| = {mean_abs}");
    assert!(report.normalization_residual < 0.15, "{report:?}");
    assert!(report.iterations_run <= 500);
    assert_eq!(report.objective_trace.len(), report.iterations_run);
}

#[test]
fn full_batch_kliep_ascent_is_monotone_on_identity_task() {
    let g = GaussianSpec::<f64>::identity(Array1::zeros(3)).unwrap();
    let mut rng = RandomSource::new(5).rng();
    let left = draw(200, &g, &mut rng);
    let right = draw(200, &g, &mut rng);
    let cfg = DreConfig::Mlp(MlpConfig {
        hidden_widths: vec![32, 16],
        batch_left: 1000,
        batch_right: 1000,
        iterations: 200,
        optimizer: Optimizer::Sgd,
        ..MlpConfig::default()
    });
    let (_, report) = train(&cfg, left.view(), right.view(), &RandomSource::new(6)).unwrap();
    let tr = &report.objective_trace;
    let up = tr.windows(2).filter(|w| w[1] >= w[0] - 1e-12).count();
    assert!(
        up as f64 >= 0.9 * (tr.len() - 1) as f64,
        "{up} of {}",
        tr.len() - 1
    );
}

#[test]
fn learned_log_ratio_has_the_right_sign() {
    let mut rng = RandomSource::new(21).rng();
    let mu = Array1::from_shape_fn(10, |_| rng.random_range(0.6f32..1.0));
    let p = GaussianSpec::<f32>::identity(Array1::zeros(10)).unwrap();
    let q = GaussianSpec::<f32>::identity(mu).unwrap();
    let (left, right) = (draw(250, &p, &mut rng), draw(250, &q, &mut rng));
    let (model, report) = train(
        &identity_config(),
        left.view(),
        right.view(),
        &RandomSource::new(22),
    )
    .unwrap();
    let mean_log = |x: &Array2<f32>| {
        model
            .predict_batch(x.view())
            .unwrap()
            .iter()
            .map(|w| (*w as f64).ln())
            .sum::<f64>()
            / x.nrows() as f64
    };
    assert!(mean_log(&draw(500, &p, &mut rng)) > 0.0);
    assert!(mean_log(&draw(500, &q, &mut rng)) < 0.0);
    assert!(report.iterations_run <= 500);
}

#[test]
fn ratio_at_the_symmetric_point_is_near_one() {
    let mut rng = RandomSource::new(31).rng();
    let p = GaussianSpec::<f32>::univariate(0.0, 1.0).unwrap();
    let q = GaussianSpec::<f32>::univariate(1.0, 1.0).unwrap();
    let (left, right) = (draw(500, &p, &mut rng), draw(500, &q, &mut rng));
    let (model, report) = train(
        &identity_config(),
        left.view(),
        right.view(),
        &RandomSource::new(32),
    )
    .unwrap();
    let w = model
        .predict_ratio(ndarray::arr1(&[0.5f32]).view())
        .unwrap();
    assert!((w - 1.0).abs() <= 0.35, "w(0.5) = {w}");
    assert!(report.normalization_residual < 0.15, "{report:?}");
}

#[test]
fn training_is_bitwise_deterministic() {
    let mut rng = RandomSource::new(41).rng();
    let left = uniform_matrix(60, 2, 1.0, &mut rng);
    let right = uniform_matrix(60, 2, 1.0, &mut rng) + 0.5;
    for cfg in [
        DreConfig::Mlp(MlpConfig {
            hidden_widths: vec![16, 8],
            iterations: 50,
            ..MlpConfig::default()
        }),
        DreConfig::Kernel(KernelConfig {
            n_centers: 20,
            iterations: 50,
            ..KernelConfig::default()
        }),
    ] {
        let (a, ra) = train(&cfg, left.view(), right.view(), &RandomSource::new(7)).unwrap();
        let (b, rb) = train(&cfg, left.view(), right.view(), &RandomSource::new(7)).unwrap();
        assert_eq!(a.parameters(), b.parameters());
        assert_eq!(ra, rb);
        let (c, _) = train(&cfg, left.view(), right.view(), &RandomSource::new(8)).unwrap();
        assert_ne!(a.parameters(), c.parameters());
    }
}

#[test]
fn kernel_model_separates_shifted_gaussians() {
    let mut rng = RandomSource::new(51).rng();
    let p = GaussianSpec::<f64>::univariate(0.0, 1.0).unwrap();
    let q = GaussianSpec::<f64>::univariate(2.0, 1.0).unwrap();
    let (left, right) = (draw(400, &p, &mut rng), draw(400, &q, &mut rng));
    let (model, _) = train(
        &DreConfig::Kernel(KernelConfig::default()),
        left.view(),
        right.view(),
        &RandomSource::new(52),
    )
    .unwrap();
    let at = |x: f64| {
        model
            .predict_ratio(ndarray::arr1(&[x]).view())
            .unwrap()
            .ln()
    };
    assert!(at(-1.0) > 0.0);
    assert!(at(3.0) < 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn predictions_are_positive_and_clamped(
        seed in any::<u64>(),
        x in prop::collection::vec(-1e3f64..1e3, 3),
        scale in 0.1f64..50.0,
    ) {
        let m = init_feed_forward::<f64>(3, &[8, 4], 1e-6, &RandomSource::new(seed)).unwrap();
        let mut p = m.parameters().to_vec();
        for v in &mut p {
            *v *= scale;
        }
        let m = m.with_parameters(p).unwrap();
        let w = m.predict_ratio(ndarray::arr1(&x).view()).unwrap();
        prop_assert!(w > 0.0);
        prop_assert!((1e-6..=1e6).contains(&w));
    }
}
