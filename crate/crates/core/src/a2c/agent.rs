//! Actor-critic agent with separate policy and value stacks.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::env::Action;
use crate::neural::{log_softmax, Activation, Mlp, MlpShape, RmsProp};
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct A2cConfig {
    pub total_timesteps: usize,
    pub n_steps: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub learning_rate: f64,
    pub ent_coef: f64,
    pub vf_coef: f64,
    pub max_grad_norm: f64,
    pub hidden: Vec<usize>,
    /// Episode length.
    pub horizon: usize,
    pub seed: u64,
}

impl Default for A2cConfig {
    fn default() -> Self {
        A2cConfig {
            total_timesteps: 100_000,
            n_steps: 8,
            gamma: 0.99,
            gae_lambda: 1.0,
            learning_rate: 7e-4,
            ent_coef: 0.01,
            vf_coef: 0.5,
            max_grad_norm: 0.5,
            hidden: vec![64, 64],
            horizon: 8,
            seed: 0,
        }
    }
}

impl A2cConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 || self.horizon == 0 || self.hidden.is_empty() {
            return Err(Error::Config("rollout length, horizon and hidden layers must be nonzero".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::Config("discount and GAE lambda must lie in [0, 1]".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Output distribution of the policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Head {
    /// One categorical choice among `n` flat actions.
    Categorical,
    /// Independent toggle bits.
    Bernoulli,
}

/// Diagnostics of one update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Losses {
    pub entropy_loss: f64,
    pub value_loss: f64,
    pub policy_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub head: Head,
    pub policy: Mlp,
    pub value: Mlp,
    opt_policy: RmsProp,
    opt_value: RmsProp,
}

/// Stored transitions between two updates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Rollout {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
    /// Episode ended after this step.
    pub dones: Vec<bool>,
    pub values: Vec<f64>,
    /// Value of the observation following the last step.
    pub last_value: f64,
}

/// Generalized advantage estimates and value targets. A step marked done
/// does not bootstrap.
pub fn compute_gae(rewards: &[f64], values: &[f64], dones: &[bool], last_value: f64, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let next = if t + 1 < n { values[t + 1] } else { last_value };
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next * live - values[t];
        acc = delta + gamma * lambda * live * acc;
        adv[t] = acc;
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, ret)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `log(sigmoid(z))` without overflow.
fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -libm::log1p(libm::exp(-z))
    } else {
        z - libm::log1p(libm::exp(z))
    }
}

impl Agent {
    pub fn new(obs_dim: usize, action_dim: usize, head: Head, cfg: &A2cConfig, rng: &mut Rng) -> Result<Self> {
        cfg.validate()?;
        let ps = MlpShape::hidden(obs_dim, &cfg.hidden, Activation::Tanh, action_dim)?;
        let vs = MlpShape::hidden(obs_dim, &cfg.hidden, Activation::Tanh, 1)?;
        let mut pg = vec![libm::sqrt(2.0); cfg.hidden.len()];
        pg.push(0.01);
        let mut vg = vec![libm::sqrt(2.0); cfg.hidden.len()];
        vg.push(1.0);
        let policy = Mlp::new(ps, &pg, rng);
        let value = Mlp::new(vs, &vg, rng);
        let opt_policy = RmsProp::new(policy.params.len(), cfg.learning_rate);
        let opt_value = RmsProp::new(value.params.len(), cfg.learning_rate);
        Ok(Agent {
            head,
            policy,
            value,
            opt_policy,
            opt_value,
        })
    }

    pub fn value_of(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.value.forward(obs)?[0])
    }

    pub fn logits(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.policy.forward(obs)
    }

    /// Action probabilities (categorical) or per-bit on probabilities.
    pub fn probabilities(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let z = self.logits(obs)?;
        Ok(match self.head {
            Head::Categorical => log_softmax(&z).into_iter().map(libm::exp).collect(),
            Head::Bernoulli => z.into_iter().map(sigmoid).collect(),
        })
    }

    pub fn sample(&self, obs: &[f64], rng: &mut Rng) -> Result<Action> {
        let p = self.probabilities(obs)?;
        Ok(match self.head {
            Head::Categorical => {
                let u: f64 = rng.random();
                let mut c = 0.0;
                let mut pick = p.len() - 1;
                for (k, &pk) in p.iter().enumerate() {
                    c += pk;
                    if u < c {
                        pick = k;
                        break;
                    }
                }
                Action::Index(pick)
            }
            Head::Bernoulli => Action::Toggle(p.iter().map(|&pk| rng.random::<f64>() < pk).collect()),
        })
    }

    /// Most likely action.
    pub fn greedy(&self, obs: &[f64]) -> Result<Action> {
        let z = self.logits(obs)?;
        Ok(match self.head {
            Head::Categorical => {
                let mut best = 0;
                for k in 1..z.len() {
                    if z[k] > z[best] {
                        best = k;
                    }
                }
                Action::Index(best)
            }
            Head::Bernoulli => Action::Toggle(z.iter().map(|&v| v > 0.0).collect()),
        })
    }

    /// `log pi(a | obs)` and the policy entropy from logits.
    pub fn log_prob_entropy(&self, z: &[f64], action: &Action) -> Result<(f64, f64)> {
        match (self.head, action) {
            (Head::Categorical, Action::Index(a)) if *a < z.len() => {
                let lp = log_softmax(z);
                let h = -lp.iter().map(|&l| libm::exp(l) * l).sum::<f64>();
                Ok((lp[*a], h))
            }
            (Head::Bernoulli, Action::Toggle(bits)) if bits.len() == z.len() => {
                let mut lp = 0.0;
                let mut h = 0.0;
                for (&zk, &b) in z.iter().zip(bits) {
                    let (l1, l0) = (log_sigmoid(zk), log_sigmoid(-zk));
                    lp += if b { l1 } else { l0 };
                    h -= libm::exp(l1) * l1 + libm::exp(l0) * l0;
                }
                Ok((lp, h))
            }
            _ => Err(Error::InvalidArgument("action does not fit the policy head".into())),
        }
    }

    /// Gradient with respect to the logits of
    /// `-adv * log pi(a) - ent_coef * H`.
    fn logit_grad(&self, z: &[f64], action: &Action, adv: f64, ent_coef: f64) -> Vec<f64> {
        match (self.head, action) {
            (Head::Categorical, Action::Index(a)) => {
                let lp = log_softmax(z);
                let h = -lp.iter().map(|&l| libm::exp(l) * l).sum::<f64>();
                lp.iter()
                    .enumerate()
                    .map(|(k, &l)| {
                        let p = libm::exp(l);
                        let onehot = (k == *a) as u8 as f64;
                        -adv * (onehot - p) + ent_coef * p * (l + h)
                    })
                    .collect()
            }
            (Head::Bernoulli, Action::Toggle(bits)) => z
                .iter()
                .zip(bits)
                .map(|(&zk, &b)| {
                    let s = sigmoid(zk);
                    -adv * (b as u8 as f64 - s) + ent_coef * zk * s * (1.0 - s)
                })
                .collect(),
            _ => unreachable!("checked by log_prob_entropy"),
        }
    }

    /// Gradients of the A2C loss over a rollout (policy, value) and the
    /// three diagnostics, without applying them.
    pub fn gradients(&self, rollout: &Rollout, cfg: &A2cConfig) -> Result<(Vec<f64>, Vec<f64>, Losses)> {
        let n = rollout.rewards.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty rollout".into()));
        }
        let (adv, ret) = compute_gae(&rollout.rewards, &rollout.values, &rollout.dones, rollout.last_value, cfg.gamma, cfg.gae_lambda);
        let mut gp = vec![0.0; self.policy.params.len()];
        let mut gv = vec![0.0; self.value.params.len()];
        let inv = 1.0 / n as f64;
        let (mut pl, mut el, mut vl) = (0.0, 0.0, 0.0);
        for t in 0..n {
            let obs = &rollout.observations[t];
            let pc = self.policy.forward_cached(obs)?;
            let z = pc.output().to_vec();
            let (lp, h) = self.log_prob_entropy(&z, &rollout.actions[t])?;
            pl -= adv[t] * lp * inv;
            el -= h * inv;
            let dz: Vec<f64> = self
                .logit_grad(&z, &rollout.actions[t], adv[t], cfg.ent_coef)
                .into_iter()
                .map(|g| g * inv)
                .collect();
            self.policy.backward_params(&pc, &dz, &mut gp);
            let vc = self.value.forward_cached(obs)?;
            let v = vc.output()[0];
            let err = ret[t] - v;
            vl += err * err * inv;
            self.value.backward_params(&vc, &[-2.0 * cfg.vf_coef * err * inv], &mut gv);
        }
        Ok((
            gp,
            gv,
            Losses {
                entropy_loss: el,
                value_loss: vl,
                policy_loss: pl,
            },
        ))
    }

    /// One RMSprop step on the rollout loss with joint gradient clipping.
    pub fn update(&mut self, rollout: &Rollout, cfg: &A2cConfig) -> Result<Losses> {
        let (mut gp, mut gv, losses) = self.gradients(rollout, cfg)?;
        let mut sq = 0.0;
        for g in gp.iter().chain(gv.iter()) {
            sq += g * g;
        }
        let norm = libm::sqrt(sq);
        if norm > cfg.max_grad_norm {
            let k = cfg.max_grad_norm / norm;
            gp.iter_mut().chain(gv.iter_mut()).for_each(|g| *g *= k);
        }
        self.opt_policy.step(&mut self.policy.params, &gp);
        self.opt_value.step(&mut self.value.params, &gv);
        Ok(losses)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::mlp::tests::fd_check;
    use crate::rng;

    #[test]
    fn gae_degenerate_cases() {
        let (a, r) = compute_gae(&[2.0], &[0.5], &[true], 9.0, 1.0, 1.0);
        assert_eq!(a, vec![1.5]);
        assert_eq!(r, vec![2.0]);
        // Lambda one: discounted return minus baseline.
        let rw = [1.0, 0.0, 2.0];
        let v = [0.3, -0.1, 0.4];
        let g = 0.9;
        let (a, _) = compute_gae(&rw, &v, &[false, false, false], 0.7, g, 1.0);
        let mc = |t: usize| -> f64 {
            let mut s = 0.0;
            for k in t..3 {
                s += libm::pow(g, (k - t) as f64) * rw[k];
            }
            s + libm::pow(g, (3 - t) as f64) * 0.7
        };
        for t in 0..3 {
            assert!(libm::fabs(a[t] - (mc(t) - v[t])) < 1e-12);
        }
        // An episode boundary stops the sum.
        let (a, _) = compute_gae(&rw, &v, &[false, true, false], 0.7, g, 1.0);
        assert!(libm::fabs(a[0] - (1.0 + g * 0.0 - 0.3)) < 1e-12);
    }

    #[test]
    fn uniform_entropy_is_log_k() {
        let cfg = A2cConfig::default();
        let agent = Agent::new(3, 7, Head::Categorical, &cfg, &mut rng::seeded(0)).unwrap();
        let (_, h) = agent.log_prob_entropy(&[0.0; 7], &Action::Index(2)).unwrap();
        assert!(libm::fabs(h - libm::log(7.0)) < 1e-12);
        let b = Agent::new(3, 4, Head::Bernoulli, &cfg, &mut rng::seeded(0)).unwrap();
        let (lp, h) = b.log_prob_entropy(&[0.0; 4], &Action::Toggle(vec![true; 4])).unwrap();
        assert!(libm::fabs(h - 4.0 * libm::log(2.0)) < 1e-12);
        assert!(libm::fabs(lp + 4.0 * libm::log(2.0)) < 1e-12);
    }

    /// Expected policy gradient over a two-state, two-action bandit
    /// against differences of the exact expected reward.
    #[test]
    fn policy_gradient_is_exact_in_expectation() {
        let cfg = A2cConfig {
            ent_coef: 0.0,
            hidden: vec![4],
            ..Default::default()
        };
        for head in [Head::Categorical, Head::Bernoulli] {
            let mut agent = Agent::new(2, 2, head, &cfg, &mut rng::seeded(3)).unwrap();
            let mut init = rng::seeded(8);
            agent.policy.params = agent.policy.shape.init(&[1.0, 1.0], &mut init);
            let states = [[1.0, 0.0], [0.0, 1.0]];
            let actions: Vec<Action> = match head {
                Head::Categorical => vec![Action::Index(0), Action::Index(1)],
                Head::Bernoulli => vec![
                    Action::Toggle(vec![false, false]),
                    Action::Toggle(vec![false, true]),
                    Action::Toggle(vec![true, false]),
                    Action::Toggle(vec![true, true]),
                ],
            };
            let reward = |s: usize, a: usize| [[1.0, -0.5, 0.2, 0.7], [0.3, 2.0, -1.0, 0.1]][s][a];
            let shape = agent.policy.shape.clone();
            let exact = |p: &[f64]| -> f64 {
                let mut a2 = agent.clone();
                a2.policy.params = p.to_vec();
                let mut j = 0.0;
                for (s, obs) in states.iter().enumerate() {
                    let z = shape.forward(p, obs).unwrap();
                    for (k, a) in actions.iter().enumerate() {
                        let (lp, _) = a2.log_prob_entropy(&z, a).unwrap();
                        j += 0.5 * libm::exp(lp) * reward(s, k);
                    }
                }
                j
            };
            let mut g = vec![0.0; agent.policy.params.len()];
            for (s, obs) in states.iter().enumerate() {
                let pc = agent.policy.forward_cached(obs).unwrap();
                let z = pc.output().to_vec();
                for (k, a) in actions.iter().enumerate() {
                    let (lp, _) = agent.log_prob_entropy(&z, a).unwrap();
                    let w = 0.5 * libm::exp(lp);
                    // A state baseline leaves the expectation unchanged.
                    let dz: Vec<f64> = agent
                        .logit_grad(&z, a, reward(s, k) - 0.4, 0.0)
                        .into_iter()
                        .map(|v| -w * v)
                        .collect();
                    agent.policy.backward(&pc, &dz, &mut g);
                }
            }
            assert!(fd_check(&agent.policy.params, &g, exact) < 1e-4);
            let z = agent.logits(&states[0]).unwrap();
            assert!(agent.log_prob_entropy(&z, &Action::Index(5)).is_err());
        }
    }

    #[test]
    fn entropy_gradient_matches_differences() {
        let cfg = A2cConfig::default();
        for head in [Head::Categorical, Head::Bernoulli] {
            let agent = Agent::new(2, 3, head, &cfg, &mut rng::seeded(1)).unwrap();
            let z = [0.3, -1.2, 0.8];
            let a = match head {
                Head::Categorical => Action::Index(1),
                Head::Bernoulli => Action::Toggle(vec![true, false, true]),
            };
            let g = agent.logit_grad(&z, &a, 0.7, 0.05);
            let err = fd_check(&z, &g, |zz| {
                let (lp, h) = agent.log_prob_entropy(zz, &a).unwrap();
                -0.7 * lp - 0.05 * h
            });
            assert!(err < 1e-4);
        }
    }

    #[test]
    fn update_reduces_value_error() {
        // RMSprop starts with an empty square average, so the first steps
        // move every weight by about 10x the learning rate.
        let cfg = A2cConfig::default();
        let mut agent = Agent::new(2, 2, Head::Categorical, &cfg, &mut rng::seeded(2)).unwrap();
        let rollout = Rollout {
            observations: vec![vec![1.0, 0.0]; 4],
            actions: vec![Action::Index(0); 4],
            rewards: vec![1.0; 4],
            dones: vec![true; 4],
            values: vec![0.0; 4],
            last_value: 0.0,
        };
        let before = agent.gradients(&rollout, &cfg).unwrap().2.value_loss;
        let mut r = rollout.clone();
        for _ in 0..500 {
            r.values = vec![agent.value_of(&[1.0, 0.0]).unwrap(); 4];
            agent.update(&r, &cfg).unwrap();
        }
        let v = agent.value_of(&[1.0, 0.0]).unwrap();
        assert!(libm::fabs(v - 1.0) < 0.1, "value {v}, initial loss {before}");
        let p = agent.probabilities(&[1.0, 0.0]).unwrap();
        assert!(p[0] > 0.5, "{p:?} {:?}", agent.probabilities(&[0.0, 1.0]).unwrap());
    }
}
