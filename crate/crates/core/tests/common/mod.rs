// SPDX-License-Identifier: MIT OR Apache-2.0

#![allow(dead_code)]

use drecusum::distributions::{GaussianSpec, Sampler};
use drecusum::dre::{
    kliep_objective, lsif_objective, objective_gradient, objective_value, DensityRatioModel,
    ObjectiveSpec,
};
use drecusum::RandomSource;
use ndarray::{Array2, ArrayView1};
use rand::Rng;

pub fn uniform_matrix(rows: usize, cols: usize, scale: f64, rng: &mut impl Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-scale..scale))
}

pub fn draw<F: drecusum::Scalar>(
    n: usize,
    g: &GaussianSpec<F>,
    rng: &mut drecusum::random::Rng,
) -> Array2<F> {
    let mut out = Array2::zeros((n, g.mean().len()));
    for mut row in out.rows_mut() {
        row.assign(&g.sample(rng));
    }
    out
}

pub fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else {
        z.exp().ln_1p()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Hand-written forward pass over the documented parameter layout.
pub fn mlp_by_hand(params: &[f64], d: usize, hidden: &[usize], x: ArrayView1<f64>) -> f64 {
    let mut a: Vec<f64> = x.to_vec();
    let mut dims = vec![d];
    dims.extend_from_slice(hidden);
    dims.push(1);
    let mut off = 0;
    for (l, w) in dims.windows(2).enumerate() {
        let (fi, fo) = (w[0], w[1]);
        let mut z = vec![0.0; fo];
        for (j, zj) in z.iter_mut().enumerate() {
            let mut acc = params[off + fi * fo + j];
            for (i, ai) in a.iter().enumerate() {
                acc += ai * params[off + i * fo + j];
            }
            *zj = if l + 2 == dims.len() {
                softplus(acc)
            } else {
                sigmoid(acc)
            };
        }
        off += fi * fo + fo;
        a = z;
    }
    a[0].clamp(1e-6, 1e6)
}

pub fn kernel_by_hand(params: &[f64], centers: &Array2<f64>, bw: f64, x: ArrayView1<f64>) -> f64 {
    let mut z = params[0];
    for (k, c) in centers.rows().into_iter().enumerate() {
        let d2: f64 = c.iter().zip(x.iter()).map(|(a, b)| (a - b).powi(2)).sum();
        z += params[k + 1] * (-d2 / (2.0 * bw * bw)).exp();
    }
    softplus(z).clamp(1e-6, 1e6)
}

pub fn kliep_by_hand(left: &[f64], right: &[f64], lambda: f64) -> f64 {
    let a: f64 = left.iter().map(|w| w.ln()).sum::<f64>() / left.len() as f64;
    let b: f64 = right.iter().sum::<f64>() / right.len() as f64;
    a - lambda * (b - 1.0)
}

pub fn lsif_by_hand(left: &[f64], right: &[f64]) -> f64 {
    let a: f64 = left.iter().map(|w| w * w).sum::<f64>() / left.len() as f64;
    let b: f64 = right.iter().sum::<f64>() / right.len() as f64;
    a - 2.0 * b
}

pub type ByHand = Box<dyn Fn(&[f64], ArrayView1<f64>) -> f64>;

pub struct Case {
    pub model: DensityRatioModel<f64>,
    pub by_hand: ByHand,
    pub left: Array2<f64>,
    pub right: Array2<f64>,
}

pub fn small_cases(seed: u64) -> Vec<Case> {
    let mut rng = RandomSource::new(seed).rng();
    let mut cases = Vec::new();
    for (d, hidden) in [(1usize, vec![5usize, 3]), (2, vec![4, 3]), (3, vec![6])] {
        let n = drecusum::dre::init_feed_forward::<f64>(d, &hidden, 1e-6, &RandomSource::new(seed))
            .unwrap()
            .parameters()
            .len();
        assert!(n <= 50);
        let params: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = DensityRatioModel::feed_forward(d, hidden.clone(), params, 1e-6).unwrap();
        let h = hidden.clone();
        cases.push(Case {
            model,
            by_hand: Box::new(move |p, x| mlp_by_hand(p, d, &h, x)),
            left: uniform_matrix(7, d, 2.0, &mut rng),
            right: uniform_matrix(5, d, 2.0, &mut rng),
        });
    }
    for d in [1usize, 3] {
        let centers = uniform_matrix(6, d, 1.5, &mut rng);
        let params: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bw = 0.8;
        let model = DensityRatioModel::kernel(centers.clone(), bw, params, 1e-6).unwrap();
        cases.push(Case {
            model,
            by_hand: Box::new(move |p, x| kernel_by_hand(p, &centers, bw, x)),
            left: uniform_matrix(7, d, 2.0, &mut rng),
            right: uniform_matrix(5, d, 2.0, &mut rng),
        });
    }
    cases
}

pub fn specs() -> Vec<ObjectiveSpec> {
    let mut swapped = ObjectiveSpec::lsif();
    swapped.lsif_swap = true;
    vec![
        ObjectiveSpec::kliep(1.0),
        ObjectiveSpec::kliep(0.3),
        ObjectiveSpec::lsif(),
        swapped,
    ]
}

/// Worst relative gap between analytic gradients and central differences
/// over every parameter of every small case.
pub fn worst_gradient_error(seeds: std::ops::Range<u64>) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in seeds {
        for case in small_cases(seed) {
            for spec in specs() {
                let (_, grad) =
                    objective_gradient(&case.model, case.left.view(), case.right.view(), &spec)
                        .unwrap();
                let base = case.model.parameters().to_vec();
                for (j, g) in grad.iter().enumerate() {
                    let h = 1e-6;
                    let eval = |delta: f64| {
                        let mut p = base.clone();
                        p[j] += delta;
                        let m = case.model.with_parameters(p).unwrap();
                        objective_value(&m, case.left.view(), case.right.view(), &spec).unwrap()
                    };
                    let fd = (eval(h) - eval(-h)) / (2.0 * h);
                    worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-3));
                }
            }
        }
    }
    worst
}

/// Largest gap between the library objectives and the hand-written ones.
pub fn worst_formula_error(seeds: std::ops::Range<u64>) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in seeds {
        for case in small_cases(seed) {
            let p = case.model.parameters();
            let by_hand = |x: &Array2<f64>| -> Vec<f64> {
                x.rows().into_iter().map(|r| (case.by_hand)(p, r)).collect()
            };
            let (wl, wr) = (by_hand(&case.left), by_hand(&case.right));
            let (l, r) = (case.left.view(), case.right.view());
            for lambda in [0.0, 1.0, 2.5] {
                let got = kliep_objective(&case.model, l, r, lambda).unwrap();
                worst = worst.max((got - kliep_by_hand(&wl, &wr, lambda)).abs());
            }
            let got = lsif_objective(&case.model, l, r).unwrap();
            worst = worst.max((got - lsif_by_hand(&wl, &wr)).abs());
            let mut swapped = ObjectiveSpec::lsif();
            swapped.lsif_swap = true;
            let got = objective_value(&case.model, l, r, &swapped).unwrap();
            worst = worst.max((got - lsif_by_hand(&wr, &wl)).abs());
        }
    }
    worst
}
