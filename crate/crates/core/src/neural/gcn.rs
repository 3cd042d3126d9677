//! Graph-convolutional good/poor classifier.
//!
//! Several independent convolution layers read the same node features. Each
//! propagates `tanh(P X W + b)` with `P = D^-1/2 (A + I) D^1/2`, where `D`
//! is the degree matrix of `A + I`, and is pooled by node mean and node max.
//! The pooled vectors are concatenated and fed to a dense head ending in a
//! two-way log-softmax; dropout follows the first head layer in training.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::mlp::{log_softmax, Activation, MlpCache, MlpShape};
use crate::rng::Rng;
use crate::topology::Topology;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcnConfig {
    pub in_dim: usize,
    pub hidden: usize,
    pub stacks: usize,
    pub head: Vec<usize>,
    pub dropout: f64,
}

impl Default for GcnConfig {
    fn default() -> Self {
        GcnConfig {
            in_dim: 30,
            hidden: 64,
            stacks: 3,
            head: vec![64, 64],
            dropout: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcnClassifier {
    pub config: GcnConfig,
    pub head: MlpShape,
    /// Convolution weights and biases of every stack, then the head.
    pub params: Vec<f64>,
}

/// Propagation operator of `adj` with self loops.
pub fn propagation(adj: &Topology) -> Matrix {
    let n = adj.n();
    let deg: Vec<f64> = (0..n).map(|v| adj.degree(v) as f64 + 1.0).collect();
    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        p.set(i, i, 1.0);
        for j in adj.neighbors(i) {
            p.set(i, j, libm::sqrt(deg[j]) / libm::sqrt(deg[i]));
        }
    }
    p
}

/// Values kept from a forward pass.
pub struct GcnCache {
    px: Matrix,
    /// Conv outputs per stack (`n x hidden`).
    h: Vec<Matrix>,
    /// Node index of each max-pooled entry, per stack.
    argmax: Vec<Vec<usize>>,
    head: MlpCache,
    pub log_probs: Vec<f64>,
}

impl GcnClassifier {
    pub fn new(config: GcnConfig, rng: &mut Rng) -> Result<Self> {
        if config.stacks == 0 || config.hidden == 0 || config.in_dim == 0 {
            return Err(Error::Config("classifier dimensions must be positive".into()));
        }
        if !(0.0..1.0).contains(&config.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", config.dropout)));
        }
        let head = MlpShape::hidden(2 * config.hidden * config.stacks, &config.head, Activation::Tanh, 2)?;
        let conv = config.stacks * (config.in_dim * config.hidden + config.hidden);
        let mut params = vec![0.0; conv + head.num_params()];
        let lim = libm::sqrt(6.0 / (config.in_dim + config.hidden) as f64);
        for s in 0..config.stacks {
            let off = s * (config.in_dim * config.hidden + config.hidden);
            for w in &mut params[off..off + config.in_dim * config.hidden] {
                *w = rng.random_range(-lim..=lim);
            }
        }
        let gains = vec![1.0; head.layers()];
        let hp = head.init(&gains, rng);
        params[conv..].copy_from_slice(&hp);
        Ok(GcnClassifier { config, head, params })
    }

    fn conv_len(&self) -> usize {
        self.config.stacks * (self.config.in_dim * self.config.hidden + self.config.hidden)
    }

    fn stack_offset(&self, s: usize) -> usize {
        s * (self.config.in_dim * self.config.hidden + self.config.hidden)
    }

    /// Dropout mask for one training pass.
    pub fn sample_mask(&self, rng: &mut Rng) -> Option<(usize, Vec<f64>)> {
        if self.config.dropout == 0.0 || self.config.head.is_empty() {
            return None;
        }
        let keep = 1.0 - self.config.dropout;
        let m = (0..self.config.head[0])
            .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        Some((0, m))
    }

    pub fn forward(&self, x: &Matrix, adj: &Topology, mask: Option<(usize, Vec<f64>)>) -> Result<GcnCache> {
        let (n, d, hd) = (x.rows(), self.config.in_dim, self.config.hidden);
        if x.cols() != d || adj.n() != n || n == 0 {
            return Err(Error::Shape(format!(
                "{}x{} features for {} nodes, expected {d} columns",
                x.rows(),
                x.cols(),
                adj.n()
            )));
        }
        let px = propagation(adj).matmul(x)?;
        let mut h = Vec::with_capacity(self.config.stacks);
        let mut argmax = Vec::with_capacity(self.config.stacks);
        let mut pooled = Vec::with_capacity(2 * hd * self.config.stacks);
        for s in 0..self.config.stacks {
            let off = self.stack_offset(s);
            let w = Matrix::from_vec(d, hd, self.params[off..off + d * hd].to_vec())?;
            let b = &self.params[off + d * hd..off + d * hd + hd];
            let mut z = px.matmul(&w)?;
            for r in 0..n {
                for (zv, bv) in z.row_mut(r).iter_mut().zip(b) {
                    *zv = libm::tanh(*zv + bv);
                }
            }
            let mut mean = vec![0.0; hd];
            let mut mx = vec![f64::NEG_INFINITY; hd];
            let mut am = vec![0usize; hd];
            for r in 0..n {
                for (c, &v) in z.row(r).iter().enumerate() {
                    mean[c] += v;
                    if v > mx[c] {
                        mx[c] = v;
                        am[c] = r;
                    }
                }
            }
            for m in &mut mean {
                *m /= n as f64;
            }
            pooled.extend_from_slice(&mean);
            pooled.extend_from_slice(&mx);
            h.push(z);
            argmax.push(am);
        }
        let head = self.head.forward_cached(&self.params[self.conv_len()..], &pooled, mask)?;
        let log_probs = log_softmax(head.output());
        Ok(GcnCache {
            px,
            h,
            argmax,
            head,
            log_probs,
        })
    }

    /// Log-probabilities of (poor, good) without dropout.
    pub fn log_probs(&self, x: &Matrix, adj: &Topology) -> Result<Vec<f64>> {
        Ok(self.forward(x, adj, None)?.log_probs)
    }

    pub fn predict(&self, x: &Matrix, adj: &Topology) -> Result<usize> {
        let lp = self.log_probs(x, adj)?;
        Ok((lp[1] > lp[0]) as usize)
    }

    /// Adds the gradient of `-log p(label)` to `grad`; returns the loss.
    pub fn backward(&self, cache: &GcnCache, label: usize, grad: &mut [f64]) -> f64 {
        let (d, hd) = (self.config.in_dim, self.config.hidden);
        let dlogits: Vec<f64> = (0..2)
            .map(|k| libm::exp(cache.log_probs[k]) - (k == label) as u8 as f64)
            .collect();
        let conv = self.conv_len();
        let (gc, gh) = grad.split_at_mut(conv);
        let dpooled = self.head.backward(&self.params[conv..], &cache.head, &dlogits, gh);
        for s in 0..self.config.stacks {
            let h = &cache.h[s];
            let n = h.rows();
            let dp = &dpooled[2 * hd * s..2 * hd * (s + 1)];
            let mut dz = Matrix::zeros(n, hd);
            for r in 0..n {
                for c in 0..hd {
                    let mut g = dp[c] / n as f64;
                    if cache.argmax[s][c] == r {
                        g += dp[hd + c];
                    }
                    let y = h.get(r, c);
                    dz.set(r, c, g * (1.0 - y * y));
                }
            }
            let dw = cache.px.t_matmul(&dz).expect("shapes agree");
            let off = self.stack_offset(s);
            for (g, v) in gc[off..off + d * hd].iter_mut().zip(dw.data()) {
                *g += v;
            }
            for r in 0..n {
                for (g, v) in gc[off + d * hd..off + d * hd + hd].iter_mut().zip(dz.row(r)) {
                    *g += v;
                }
            }
        }
        -cache.log_probs[label]
    }
}
