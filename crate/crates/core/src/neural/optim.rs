//! First-order optimizers over flat parameter vectors.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len(), "optimizer state size");
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, self.t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, self.t as f64);
        for k in 0..params.len() {
            let g = grads[k];
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g;
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g;
            let mh = self.m[k] / c1;
            let vh = self.v[k] / c2;
            params[k] -= self.lr * mh / (libm::sqrt(vh) + self.eps);
        }
    }
}

/// RMSprop with the squared-gradient average seeded at zero and `eps`
/// added outside the square root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmsProp {
    pub lr: f64,
    pub alpha: f64,
    pub eps: f64,
    sq: Vec<f64>,
}

impl RmsProp {
    pub fn new(n: usize, lr: f64) -> Self {
        RmsProp {
            lr,
            alpha: 0.99,
            eps: 1e-5,
            sq: vec![0.0; n],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.sq.len(), "optimizer state size");
        for k in 0..params.len() {
            let g = grads[k];
            self.sq[k] = self.alpha * self.sq[k] + (1.0 - self.alpha) * g * g;
            params[k] -= self.lr * g / (libm::sqrt(self.sq[k]) + self.eps);
        }
    }
}

/// Rescales `grads` to Euclidean norm at most `max`; returns the norm seen.
pub fn clip_grad_norm(grads: &mut [f64], max: f64) -> f64 {
    let mut s = 0.0;
    for &g in grads.iter() {
        s += g * g;
    }
    let norm = libm::sqrt(s);
    if norm > max && norm > 0.0 {
        let k = max / norm;
        for g in grads.iter_mut() {
            *g *= k;
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_params() {
        let mut p = vec![1.0, -2.0];
        let mut a = Adam::new(2, 0.005);
        for _ in 0..10 {
            a.step(&mut p, &[0.0, 0.0]);
        }
        assert_eq!(p, vec![1.0, -2.0]);
        let mut r = RmsProp::new(2, 7e-4);
        r.step(&mut p, &[0.0, 0.0]);
        assert_eq!(p, vec![1.0, -2.0]);
    }

    #[test]
    fn constant_gradient_steps_at_lr() {
        let mut p = vec![0.0, 0.0];
        let mut a = Adam::new(2, 0.01);
        let mut prev = p.clone();
        for _ in 0..2000 {
            prev.copy_from_slice(&p);
            a.step(&mut p, &[3.0, -0.5]);
        }
        assert!(libm::fabs((prev[0] - p[0]) - 0.01) < 1e-6);
        assert!(libm::fabs((p[1] - prev[1]) - 0.01) < 1e-6);
    }

    #[test]
    fn quadratic_bowl_converges() {
        let c = [0.7, -0.3, 0.15];
        let mut p = vec![0.0; 3];
        let mut a = Adam::new(3, 0.005);
        for _ in 0..500 {
            let g: Vec<f64> = p.iter().zip(&c).map(|(x, c)| 2.0 * (x - c)).collect();
            a.step(&mut p, &g);
        }
        let loss: f64 = p.iter().zip(&c).map(|(x, c)| (x - c) * (x - c)).sum();
        assert!(loss < 1e-6, "loss {loss}");
    }

    #[test]
    fn clipping() {
        let mut g = vec![3.0, 4.0];
        assert_eq!(clip_grad_norm(&mut g, 1.0), 5.0);
        assert!(libm::fabs(g[0] - 0.6) < 1e-15 && libm::fabs(g[1] - 0.8) < 1e-15);
        let mut h = vec![0.1];
        clip_grad_norm(&mut h, 1.0);
        assert_eq!(h, vec![0.1]);
    }
}
