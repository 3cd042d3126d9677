//! Training loop alternating agent updates, classifier training and the
//! reward-source switch, plus the best-of-`b` evaluation protocol.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::agent::{A2cConfig, Agent, Head, Rollout};
use super::env::{Action, RewardSource, TopoEnv};
use crate::action_space::ActionSpaceSpec;
use crate::baselines::{fingerprint, SearchResult, TraceEntry};
use crate::neural::{gnn_test, gnn_train, GcnClassifier, GcnConfig, GnnTrainConfig, GraphSample};
use crate::rng::{self, Rng};
use crate::topology::{Instance, Topology};
use crate::{Error, Result};

/// A verifier-scored transition `next = T(state, action)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: Topology,
    pub action: Action,
    pub next: Topology,
    pub reward: f64,
}

/// First-in first-out store of scored transitions.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            capacity: capacity.max(1),
            items: VecDeque::new(),
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub step: usize,
    pub entropy_loss: f64,
    pub value_loss: f64,
    pub policy_loss: f64,
}

/// Sampling state carried across training calls.
#[derive(Clone, Debug)]
pub struct Learner {
    pub agent: Agent,
    pub config: A2cConfig,
    rng: Rng,
    obs: Vec<f64>,
    pub steps: usize,
    pub losses: Vec<LossRecord>,
}

impl Learner {
    pub fn new(env: &mut TopoEnv, config: A2cConfig) -> Result<Self> {
        config.validate()?;
        let head = if env.is_compressed() {
            Head::Categorical
        } else {
            Head::Bernoulli
        };
        let mut init = rng::stream(config.seed, 1);
        let agent = Agent::new(env.obs_dim(), env.action_dim(), head, &config, &mut init)?;
        let obs = env.reset()?;
        Ok(Learner {
            agent,
            rng: rng::stream(config.seed, 2),
            obs,
            steps: 0,
            losses: Vec::new(),
            config,
        })
    }

    /// Runs `steps` environment steps, updating every `n_steps`; `on_step`
    /// sees every transition with its verifier objective when scored.
    pub fn learn(
        &mut self,
        env: &mut TopoEnv,
        steps: usize,
        mut on_step: impl FnMut(&Topology, &Action, &Topology, Option<f64>),
    ) -> Result<()> {
        let mut done_steps = 0;
        while done_steps < steps {
            let mut r = Rollout::default();
            for _ in 0..self.config.n_steps.min(steps - done_steps) {
                let a = self.agent.sample(&self.obs, &mut self.rng)?;
                let v = self.agent.value_of(&self.obs)?;
                let before = env.state().clone();
                let s = env.step(&a)?;
                on_step(&before, &a, &s.topology, s.objective);
                r.observations.push(core::mem::take(&mut self.obs));
                r.actions.push(a);
                r.rewards.push(s.reward);
                r.dones.push(s.done);
                r.values.push(v);
                self.obs = if s.done { env.reset()? } else { s.observation };
                done_steps += 1;
                self.steps += 1;
            }
            r.last_value = self.agent.value_of(&self.obs)?;
            let l = self.agent.update(&r, &self.config)?;
            self.losses.push(LossRecord {
                step: self.steps,
                entropy_loss: l.entropy_loss,
                value_loss: l.value_loss,
                policy_loss: l.policy_loss,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct A2cGsConfig {
    pub a2c: A2cConfig,
    /// Outer epochs `m`; the timestep budget is split evenly among them.
    pub epochs: usize,
    /// Train the classifier and allow switching the reward source.
    pub use_gnn: bool,
    pub gnn: GcnConfig,
    /// Classifier training per epoch.
    pub gnn_train: GnnTrainConfig,
    /// Good-graph threshold `q`.
    pub q: f64,
    /// Policy samples scored for testing the classifier each epoch.
    pub test_samples: usize,
    pub buffer_capacity: usize,
    /// Test accuracy that moves rewards to the classifier.
    pub switch_accuracy: f64,
    /// Most recent buffer entries used for classifier training.
    pub gnn_train_window: usize,
}

impl Default for A2cGsConfig {
    fn default() -> Self {
        A2cGsConfig {
            a2c: A2cConfig::default(),
            epochs: 10,
            use_gnn: false,
            gnn: GcnConfig::default(),
            gnn_train: GnnTrainConfig {
                epochs: 10,
                ..Default::default()
            },
            q: 0.8,
            test_samples: 100,
            buffer_capacity: 100_000,
            switch_accuracy: 0.95,
            gnn_train_window: 4096,
        }
    }
}

impl A2cGsConfig {
    pub fn validate(&self) -> Result<()> {
        self.a2c.validate()?;
        if self.epochs == 0 || self.a2c.total_timesteps < self.epochs {
            return Err(Error::Config("need at least one timestep per epoch".into()));
        }
        if self.use_gnn && (self.test_samples == 0 || self.gnn_train_window == 0) {
            return Err(Error::Config("classifier testing needs samples".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    pub epoch: usize,
    /// Reward source used while training this epoch.
    pub source: RewardSource,
    pub steps: usize,
    pub buffer_len: usize,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    /// Source chosen for the next epoch.
    pub next_source: RewardSource,
}

#[derive(Clone, Debug)]
pub struct A2cGsOutput {
    pub learner: Learner,
    pub classifier: Option<GcnClassifier>,
    /// Best verifier-scored topology seen anywhere in the run.
    pub result: SearchResult,
    pub epochs: Vec<EpochTrace>,
    pub buffer: ReplayBuffer,
}

struct Best {
    topo: Option<Topology>,
    objective: f64,
    evaluations: u64,
    trace: Vec<TraceEntry>,
}

impl Best {
    fn see(&mut self, t: &Topology, f: f64) {
        self.evaluations += 1;
        if self.topo.is_none() || f > self.objective {
            self.topo = Some(t.clone());
            self.objective = f;
            self.trace.push(TraceEntry {
                fingerprint: fingerprint(t),
                objective: f,
            });
        }
    }
}

fn samples(env: &TopoEnv, items: &[&Transition]) -> Vec<GraphSample> {
    items
        .iter()
        .map(|t| GraphSample {
            features: env.features().clone(),
            adjacency: t.next.clone(),
            objective: t.reward,
        })
        .collect()
}

/// The outer loop: per epoch, train the agent under the current reward
/// source (collecting verifier-scored transitions), train the classifier on
/// the buffer, test it on fresh verifier-scored policy samples that join the
/// buffer afterwards, and move rewards to the classifier iff its accuracy
/// reaches the switch level.
pub fn run_a2c_gs(instance: &Instance, spec: &ActionSpaceSpec, cfg: &A2cGsConfig) -> Result<A2cGsOutput> {
    cfg.validate()?;
    let seed = cfg.a2c.seed;
    let mut env = TopoEnv::new(instance.clone(), spec.clone(), cfg.a2c.horizon, seed)?;
    let mut probe = TopoEnv::new(instance.clone(), spec.clone(), cfg.a2c.horizon, seed ^ 0x5eed)?;
    let mut learner = Learner::new(&mut env, cfg.a2c.clone())?;
    let mut classifier = if cfg.use_gnn {
        Some(GcnClassifier::new(cfg.gnn.clone(), &mut rng::stream(seed, 3))?)
    } else {
        None
    };
    let mut sample_rng = rng::stream(seed, 4);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut best = Best {
        topo: None,
        objective: f64::NEG_INFINITY,
        evaluations: 0,
        trace: Vec::new(),
    };
    let mut source = RewardSource::Verifier;
    let mut traces = Vec::with_capacity(cfg.epochs);
    let per_epoch = cfg.a2c.total_timesteps / cfg.epochs;
    for epoch in 0..cfg.epochs {
        let steps = if epoch + 1 == cfg.epochs {
            cfg.a2c.total_timesteps - per_epoch * (cfg.epochs - 1)
        } else {
            per_epoch
        };
        learner.learn(&mut env, steps, |s, a, next, obj| {
            if let Some(f) = obj {
                best.see(next, f);
                buffer.push(Transition {
                    state: s.clone(),
                    action: a.clone(),
                    next: next.clone(),
                    reward: f,
                });
            }
        })?;
        let mut train_accuracy = None;
        let mut test_accuracy = None;
        let mut next_source = RewardSource::Verifier;
        if let Some(clf) = classifier.as_mut() {
            if !buffer.is_empty() {
                let recent: Vec<&Transition> = buffer.iter().skip(buffer.len().saturating_sub(cfg.gnn_train_window)).collect();
                let data = samples(&env, &recent);
                let mut tc = cfg.gnn_train.clone();
                tc.seed = tc.seed.wrapping_add(epoch as u64);
                train_accuracy = Some(gnn_train(clf, &data, cfg.q, &tc)?.train_accuracy);
            }
            let mut fresh = Vec::with_capacity(cfg.test_samples);
            let mut obs = probe.reset()?;
            for _ in 0..cfg.test_samples {
                let a = learner.agent.sample(&obs, &mut sample_rng)?;
                let before = probe.state().clone();
                let s = probe.step(&a)?;
                let f = s.objective.expect("probe scores with the verifier");
                best.see(&s.topology, f);
                fresh.push(Transition {
                    state: before,
                    action: a,
                    next: s.topology,
                    reward: f,
                });
                obs = if s.done { probe.reset()? } else { s.observation };
            }
            let refs: Vec<&Transition> = fresh.iter().collect();
            let acc = gnn_test(clf, &samples(&env, &refs), cfg.q)?;
            test_accuracy = Some(acc);
            for t in fresh {
                buffer.push(t);
            }
            if acc >= cfg.switch_accuracy {
                next_source = RewardSource::Gnn;
            }
        }
        traces.push(EpochTrace {
            epoch,
            source,
            steps,
            buffer_len: buffer.len(),
            train_accuracy,
            test_accuracy,
            next_source,
        });
        if next_source != source {
            env.set_source(next_source, classifier.clone())?;
        } else if next_source == RewardSource::Gnn {
            // Keep rewarding with the newest classifier.
            env.set_source(RewardSource::Gnn, classifier.clone())?;
        }
        source = next_source;
    }
    // Final re-scoring of the trained policy keeps the result verifier-backed.
    let mut final_env = TopoEnv::new(instance.clone(), spec.clone(), cfg.a2c.horizon, seed ^ 0xf1a1)?;
    let mut obs = final_env.reset()?;
    for _ in 0..cfg.a2c.horizon {
        let a = learner.agent.greedy(&obs)?;
        let s = final_env.step(&a)?;
        best.see(&s.topology, s.objective.expect("verifier env"));
        if s.done {
            break;
        }
        obs = s.observation;
    }
    let topo = best.topo.expect("at least one scored step");
    let result = SearchResult {
        best_index: spec.locate(instance, instance.x0(), &topo),
        best_topology: topo,
        best_objective: best.objective,
        ties: Vec::new(),
        evaluations: best.evaluations,
        trace: best.trace,
    };
    Ok(A2cGsOutput {
        learner,
        classifier,
        result,
        epochs: traces,
        buffer,
    })
}

/// Summary of the best-of-`b` protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub mean: f64,
    pub std: f64,
    /// Best score of every trial.
    pub scores: Vec<f64>,
    /// `(bin lower edge, count)` ascending.
    pub histogram: Vec<(f64, usize)>,
    /// First topology reaching the top score, when recorded.
    pub best: Option<(Topology, f64)>,
}

impl EvalStats {
    pub fn from_scores(scores: Vec<f64>, bin: f64) -> Self {
        let n = scores.len().max(1) as f64;
        let mut mean = 0.0;
        for &s in &scores {
            mean += s;
        }
        mean /= n;
        let mut var = 0.0;
        for &s in &scores {
            var += (s - mean) * (s - mean);
        }
        let std = libm::sqrt(var / n);
        let mut bins: BTreeMap<i64, usize> = BTreeMap::new();
        for &s in &scores {
            *bins.entry(libm::floor(s / bin) as i64).or_insert(0) += 1;
        }
        let histogram = bins.into_iter().map(|(k, c)| (k as f64 * bin, c)).collect();
        EvalStats {
            mean,
            std,
            scores,
            histogram,
            best: None,
        }
    }

    /// Fraction of trials whose best score equals `target` exactly.
    pub fn hit_rate(&self, target: f64) -> f64 {
        let hits = self.scores.iter().filter(|&&s| s == target).count();
        hits as f64 / self.scores.len().max(1) as f64
    }
}

/// Histogram bin width of [`evaluate_policy`].
pub const HISTOGRAM_BIN: f64 = 0.01;

/// Per trial: reset to a random start, take `best_of` steps with actions
/// from `choose`, and keep the best verifier score.
pub fn evaluate_with(
    env: &TopoEnv,
    trials: usize,
    best_of: usize,
    seed: u64,
    mut choose: impl FnMut(&[f64], &TopoEnv, &mut Rng) -> Result<Action>,
) -> Result<EvalStats> {
    if trials == 0 || best_of == 0 {
        return Err(Error::InvalidArgument("trials and best-of must be positive".into()));
    }
    let mut e = TopoEnv::new(env.instance().clone(), env.spec().clone(), best_of, seed)?;
    let mut r = rng::stream(seed, 5);
    let mut scores = Vec::with_capacity(trials);
    let mut best: Option<(Topology, f64)> = None;
    for _ in 0..trials {
        let mut obs = e.reset()?;
        let mut top = f64::NEG_INFINITY;
        for _ in 0..best_of {
            let a = choose(&obs, &e, &mut r)?;
            let s = e.step(&a)?;
            let f = s.objective.expect("verifier env");
            top = top.max(f);
            if best.as_ref().is_none_or(|b| f > b.1) {
                best = Some((s.topology, f));
            }
            obs = s.observation;
        }
        scores.push(top);
    }
    let mut stats = EvalStats::from_scores(scores, HISTOGRAM_BIN);
    stats.best = best;
    Ok(stats)
}

/// Best-of-`b` evaluation with stochastic actions from the agent.
pub fn evaluate_policy(agent: &Agent, env: &TopoEnv, trials: usize, best_of: usize, seed: u64) -> Result<EvalStats> {
    evaluate_with(env, trials, best_of, seed, |obs, _, r| agent.sample(obs, r))
}

/// Best-of-`b` evaluation with uniformly random actions of the space.
pub fn evaluate_random(env: &TopoEnv, trials: usize, best_of: usize, seed: u64) -> Result<EvalStats> {
    evaluate_with(env, trials, best_of, seed, |_, e, r| {
        Ok(if e.is_compressed() {
            Action::Index(r.random_range(0..e.action_dim()))
        } else {
            Action::Toggle((0..e.action_dim()).map(|_| r.random::<bool>()).collect())
        })
    })
}
