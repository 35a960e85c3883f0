// SPDX-License-Identifier: MIT OR Apache-2.0

//! Dense feed-forward ratio network: sigmoid hidden layers, softplus output.
//!
//! Parameters live in one flat vector, laid out layer by layer as the
//! row-major `fan_in × fan_out` weight matrix followed by the bias vector.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use rand::Rng;

use crate::scalar::{sigmoid, softplus, Scalar};

/// `(fan_in, fan_out)` for each layer, output layer last.
pub(crate) fn layer_shapes(input_dim: usize, hidden: &[usize]) -> Vec<(usize, usize)> {
    let mut dims = Vec::with_capacity(hidden.len() + 2);
    dims.push(input_dim);
    dims.extend_from_slice(hidden);
    dims.push(1);
    dims.windows(2).map(|w| (w[0], w[1])).collect()
}

pub(crate) fn parameter_count(input_dim: usize, hidden: &[usize]) -> usize {
    layer_shapes(input_dim, hidden)
        .iter()
        .map(|&(i, o)| i * o + o)
        .sum()
}

/// Xavier-uniform weights, zero biases, and an output bias that makes the
/// untrained network emit roughly 1.
pub(crate) fn init_parameters<F: Scalar, R: Rng>(
    input_dim: usize,
    hidden: &[usize],
    rng: &mut R,
) -> Vec<F> {
    let shapes = layer_shapes(input_dim, hidden);
    let mut params = Vec::with_capacity(parameter_count(input_dim, hidden));
    for (layer, &(fan_in, fan_out)) in shapes.iter().enumerate() {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for _ in 0..fan_in * fan_out {
            params.push(F::lit(rng.random_range(-limit..limit)));
        }
        let bias = if layer + 1 == shapes.len() {
            // softplus(b) = 1
            F::lit((std::f64::consts::E - 1.0).ln())
        } else {
            F::zero()
        };
        params.extend(std::iter::repeat_n(bias, fan_out));
    }
    params
}

struct Layer<'a, F> {
    w: ArrayView2<'a, F>,
    b: ArrayView1<'a, F>,
}

fn layers<'a, F: Scalar>(params: &'a [F], shapes: &[(usize, usize)]) -> Vec<Layer<'a, F>> {
    let mut out = Vec::with_capacity(shapes.len());
    let mut rest = params;
    for &(i, o) in shapes {
        let (w, tail) = rest.split_at(i * o);
        let (b, tail) = tail.split_at(o);
        out.push(Layer {
            w: ArrayView2::from_shape((i, o), w).expect("weight block"),
            b: ArrayView1::from(b),
        });
        rest = tail;
    }
    debug_assert!(rest.is_empty());
    out
}

/// Activations retained from a forward pass for backpropagation.
pub(crate) struct Trace<F> {
    /// Input followed by each hidden activation.
    activations: Vec<Array2<F>>,
    /// Pre-softplus output logits.
    pub logits: Array1<F>,
}

pub(crate) fn forward<F: Scalar>(
    params: &[F],
    shapes: &[(usize, usize)],
    x: ArrayView2<'_, F>,
) -> Trace<F> {
    let ls = layers(params, shapes);
    let mut activations = Vec::with_capacity(ls.len());
    activations.push(x.to_owned());
    for layer in &ls[..ls.len() - 1] {
        let mut z = activations.last().expect("input").dot(&layer.w);
        z += &layer.b;
        z.mapv_inplace(sigmoid);
        activations.push(z);
    }
    let out = ls.last().expect("output layer");
    let mut logits = activations
        .last()
        .expect("hidden")
        .dot(&out.w)
        .index_axis_move(Axis(1), 0);
    logits += out.b[0];
    Trace {
        activations,
        logits,
    }
}

/// Softplus outputs without clamping.
pub(crate) fn raw_outputs<F: Scalar>(
    params: &[F],
    shapes: &[(usize, usize)],
    x: ArrayView2<'_, F>,
) -> Array1<F> {
    forward(params, shapes, x).logits.mapv(softplus)
}

/// Accumulates `Σ_i upstream_i · ∂logit_i/∂θ` into a flat gradient vector.
pub(crate) fn backward<F: Scalar>(
    params: &[F],
    shapes: &[(usize, usize)],
    trace: &Trace<F>,
    d_logits: ArrayView1<'_, F>,
) -> Vec<F> {
    let ls = layers(params, shapes);
    let mut grad = vec![F::zero(); params.len()];
    let offsets: Vec<usize> = shapes
        .iter()
        .scan(0, |acc, &(i, o)| {
            let start = *acc;
            *acc += i * o + o;
            Some(start)
        })
        .collect();

    let mut delta: Array2<F> = d_logits.to_owned().insert_axis(Axis(1));
    for l in (0..ls.len()).rev() {
        let (fan_in, fan_out) = shapes[l];
        let input = &trace.activations[l];
        let start = offsets[l];
        let (gw, gb) =
            grad[start..start + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
        let mut gw = ArrayViewMut2::from_shape((fan_in, fan_out), gw).expect("grad block");
        gw.assign(&input.t().dot(&delta));
        ArrayViewMut1::from(gb).assign(&delta.sum_axis(Axis(0)));
        if l > 0 {
            let mut next = delta.dot(&ls[l].w.t());
            next.zip_mut_with(input, |g, &h| *g = *g * h * (F::one() - h));
            delta = next;
        }
    }
    grad
}
