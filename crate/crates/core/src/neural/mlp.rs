//! Fully connected stacks over a flat parameter vector.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => libm::tanh(x),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative written in terms of the activation output `y`.
    pub fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Layer sizes and activations; layer `l` maps `sizes[l]` to `sizes[l + 1]`
/// as `act(W x + b)` with `W` stored row-major (`out x in`), then `b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpShape {
    pub sizes: Vec<usize>,
    pub acts: Vec<Activation>,
}

/// Intermediate values of one forward pass.
#[derive(Clone, Debug)]
pub struct MlpCache {
    /// Layer inputs (`inputs[0]` is the network input).
    inputs: Vec<Vec<f64>>,
    /// Activation outputs before any dropout mask.
    outputs: Vec<Vec<f64>>,
    mask: Option<(usize, Vec<f64>)>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.outputs.last().expect("at least one layer")
    }
}

impl MlpShape {
    pub fn new(sizes: &[usize], acts: &[Activation]) -> Result<Self> {
        if sizes.len() < 2 || acts.len() + 1 != sizes.len() || sizes.contains(&0) {
            return Err(Error::Shape(format!(
                "{} sizes with {} activations",
                sizes.len(),
                acts.len()
            )));
        }
        Ok(MlpShape {
            sizes: sizes.to_vec(),
            acts: acts.to_vec(),
        })
    }

    /// Hidden layers of `hidden` with `act`, then a linear output.
    pub fn hidden(input: usize, hidden: &[usize], act: Activation, output: usize) -> Result<Self> {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        let mut acts = vec![act; hidden.len()];
        acts.push(Activation::Identity);
        Self::new(&sizes, &acts)
    }

    pub fn input(&self) -> usize {
        self.sizes[0]
    }

    pub fn output(&self) -> usize {
        *self.sizes.last().expect("nonempty")
    }

    pub fn layers(&self) -> usize {
        self.acts.len()
    }

    pub fn num_params(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn offset(&self, layer: usize) -> usize {
        self.sizes[..layer + 1].windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Uniform Glorot initialization scaled by a gain per layer; biases 0.
    pub fn init(&self, gains: &[f64], rng: &mut Rng) -> Vec<f64> {
        let mut p = vec![0.0; self.num_params()];
        for l in 0..self.layers() {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let g = gains.get(l).copied().unwrap_or(1.0);
            let lim = g * libm::sqrt(6.0 / (i + o) as f64);
            let off = self.offset(l);
            for w in &mut p[off..off + i * o] {
                *w = rng.random_range(-lim..=lim);
            }
        }
        p
    }

    fn check(&self, params: &[f64], x: &[f64]) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::Shape(format!(
                "{} parameters, expected {}",
                params.len(),
                self.num_params()
            )));
        }
        if x.len() != self.input() {
            return Err(Error::Shape(format!("input of {} values, expected {}", x.len(), self.input())));
        }
        Ok(())
    }

    pub fn forward(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check(params, x)?;
        let mut h = x.to_vec();
        for l in 0..self.layers() {
            h = self.layer(params, l, &h);
        }
        Ok(h)
    }

    fn layer(&self, params: &[f64], l: usize, x: &[f64]) -> Vec<f64> {
        let (i, o) = (self.sizes[l], self.sizes[l + 1]);
        let off = self.offset(l);
        let w = &params[off..off + i * o];
        let b = &params[off + i * o..off + i * o + o];
        let act = self.acts[l];
        // Zero inputs add nothing, so one-hot inputs only touch one column.
        let nz: Vec<usize> = (0..i).filter(|&c| x[c] != 0.0).collect();
        (0..o)
            .map(|r| {
                let mut z = b[r];
                let row = &w[r * i..(r + 1) * i];
                if nz.len() * 2 < i {
                    for &c in &nz {
                        z += row[c] * x[c];
                    }
                } else {
                    for (wv, xv) in row.iter().zip(x) {
                        z += wv * xv;
                    }
                }
                act.apply(z)
            })
            .collect()
    }

    /// Forward pass keeping what backpropagation needs; `mask` multiplies
    /// the output of one hidden layer (dropout).
    pub fn forward_cached(&self, params: &[f64], x: &[f64], mask: Option<(usize, Vec<f64>)>) -> Result<MlpCache> {
        self.check(params, x)?;
        if let Some((l, m)) = &mask {
            if *l + 1 >= self.layers() || m.len() != self.sizes[l + 1] {
                return Err(Error::Shape("dropout mask does not fit a hidden layer".into()));
            }
        }
        let mut inputs = Vec::with_capacity(self.layers());
        let mut outputs = Vec::with_capacity(self.layers());
        let mut h = x.to_vec();
        for l in 0..self.layers() {
            let y = self.layer(params, l, &h);
            inputs.push(h);
            h = match &mask {
                Some((ml, m)) if *ml == l => y.iter().zip(m).map(|(a, b)| a * b).collect(),
                _ => y.clone(),
            };
            outputs.push(y);
        }
        Ok(MlpCache { inputs, outputs, mask })
    }

    /// Adds the parameter gradient of `dout . output` to `grad` and returns
    /// the input gradient.
    pub fn backward(&self, params: &[f64], cache: &MlpCache, dout: &[f64], grad: &mut [f64]) -> Vec<f64> {
        self.backward_impl(params, cache, dout, grad, true)
    }

    /// [`MlpShape::backward`] without the input gradient.
    pub fn backward_params(&self, params: &[f64], cache: &MlpCache, dout: &[f64], grad: &mut [f64]) {
        self.backward_impl(params, cache, dout, grad, false);
    }

    fn backward_impl(&self, params: &[f64], cache: &MlpCache, dout: &[f64], grad: &mut [f64], input_grad: bool) -> Vec<f64> {
        let mut d = dout.to_vec();
        for l in (0..self.layers()).rev() {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            if let Some((ml, m)) = &cache.mask {
                if *ml == l {
                    for (dv, mv) in d.iter_mut().zip(m) {
                        *dv *= mv;
                    }
                }
            }
            let act = self.acts[l];
            for (dv, &y) in d.iter_mut().zip(&cache.outputs[l]) {
                *dv *= act.grad_from_output(y);
            }
            let off = self.offset(l);
            let x = &cache.inputs[l];
            let want_dx = input_grad || l > 0;
            let mut dx = vec![0.0; if want_dx { i } else { 0 }];
            let nz: Vec<usize> = (0..i).filter(|&c| x[c] != 0.0).collect();
            for r in 0..o {
                let dz = d[r];
                if dz == 0.0 {
                    continue;
                }
                let row = off + r * i;
                for &c in &nz {
                    grad[row + c] += dz * x[c];
                }
                if want_dx {
                    for c in 0..i {
                        dx[c] += dz * params[row + c];
                    }
                }
                grad[off + i * o + r] += dz;
            }
            d = dx;
        }
        d
    }
}

/// A shape with its own parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub shape: MlpShape,
    pub params: Vec<f64>,
}

impl Mlp {
    pub fn new(shape: MlpShape, gains: &[f64], rng: &mut Rng) -> Self {
        let params = shape.init(gains, rng);
        Mlp { shape, params }
    }

    pub fn zeros(shape: MlpShape) -> Self {
        let params = vec![0.0; shape.num_params()];
        Mlp { shape, params }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.shape.forward(&self.params, x)
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<MlpCache> {
        self.shape.forward_cached(&self.params, x, None)
    }

    pub fn backward(&self, cache: &MlpCache, dout: &[f64], grad: &mut [f64]) -> Vec<f64> {
        self.shape.backward(&self.params, cache, dout, grad)
    }

    pub fn backward_params(&self, cache: &MlpCache, dout: &[f64], grad: &mut [f64]) {
        self.shape.backward_params(&self.params, cache, dout, grad)
    }
}

/// Numerically stable log-softmax.
pub fn log_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for &v in z {
        s += libm::exp(v - m);
    }
    let lse = m + libm::log(s);
    z.iter().map(|&v| v - lse).collect()
}
