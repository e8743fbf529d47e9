//! Dense layers over a flat shared parameter vector, Swish hidden
//! activations, and hand-derived backpropagation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Real;

use super::gauss::sigmoid;

/// One dense layer viewed into the flat parameter vector: weights are
/// row-major `[out_dim, in_dim]` at `w_off`, biases at `b_off`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w_off: usize,
    pub b_off: usize,
}

/// Dense stack: Swish on every hidden layer, linear output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Forward activations kept for the backward pass: per layer the input and
/// the pre-activation.
#[derive(Debug, Clone)]
pub struct MlpCache<R> {
    inputs: Vec<Vec<R>>,
    pre: Vec<Vec<R>>,
}

fn swish<R: Real>(x: R) -> R {
    x * sigmoid(x)
}

fn swish_grad<R: Real>(x: R) -> R {
    let s = sigmoid(x);
    s * (R::one() + x * (R::one() - s))
}

impl Mlp {
    /// Reserve parameter space for the given layer dims, appending to the
    /// running offset. `dims` lists in/out sizes, e.g. `[784, 64, 32]`.
    pub fn reserve(dims: &[usize], offset: &mut usize) -> Self {
        assert!(dims.len() >= 2, "an MLP needs at least one layer");
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let (in_dim, out_dim) = (w[0], w[1]);
            let w_off = *offset;
            let b_off = w_off + in_dim * out_dim;
            *offset = b_off + out_dim;
            layers.push(Layer { in_dim, out_dim, w_off, b_off });
        }
        Self { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.in_dim * l.out_dim + l.out_dim).sum()
    }

    /// Scaled uniform fan-in init for weights, zero biases.
    pub fn init<R: Real>(&self, params: &mut [R], rng: &mut ChaCha8Rng) {
        for l in &self.layers {
            let scale = (1.0 / l.in_dim as f64).sqrt();
            for w in params[l.w_off..l.w_off + l.in_dim * l.out_dim].iter_mut() {
                *w = R::c(rng.gen_range(-scale..scale));
            }
            for b in params[l.b_off..l.b_off + l.out_dim].iter_mut() {
                *b = R::zero();
            }
        }
    }

    pub fn forward<R: Real>(&self, params: &[R], input: &[R]) -> (Vec<R>, MlpCache<R>) {
        debug_assert_eq!(input.len(), self.in_dim());
        let mut cache = MlpCache { inputs: Vec::with_capacity(self.layers.len()), pre: Vec::with_capacity(self.layers.len()) };
        let mut x = input.to_vec();
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let mut pre = vec![R::zero(); l.out_dim];
            for o in 0..l.out_dim {
                let row = &params[l.w_off + o * l.in_dim..l.w_off + (o + 1) * l.in_dim];
                let mut acc = params[l.b_off + o];
                for (w, xi) in row.iter().zip(&x) {
                    acc += *w * *xi;
                }
                pre[o] = acc;
            }
            cache.inputs.push(x);
            x = if li == last { pre.clone() } else { pre.iter().map(|&p| swish(p)).collect() };
            cache.pre.push(pre);
        }
        (x, cache)
    }

    /// Accumulate parameter gradients and return the gradient wrt the input.
    pub fn backward<R: Real>(
        &self,
        params: &[R],
        cache: &MlpCache<R>,
        d_out: &[R],
        grads: &mut [R],
    ) -> Vec<R> {
        let last = self.layers.len() - 1;
        let mut d = d_out.to_vec();
        for (li, l) in self.layers.iter().enumerate().rev() {
            // activation gradient (output layer is linear)
            let d_pre: Vec<R> = if li == last {
                d
            } else {
                cache.pre[li].iter().zip(&d).map(|(&p, &g)| g * swish_grad(p)).collect()
            };
            let x = &cache.inputs[li];
            let mut d_in = vec![R::zero(); l.in_dim];
            for o in 0..l.out_dim {
                let g = d_pre[o];
                grads[l.b_off + o] += g;
                let w_row = l.w_off + o * l.in_dim;
                for i in 0..l.in_dim {
                    grads[w_row + i] += g * x[i];
                    d_in[i] += g * params[w_row + i];
                }
            }
            d = d_in;
        }
        d
    }
}
