//! The topology environment.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::action_space::ActionSpaceSpec;
use crate::evaluator::verify;
use crate::neural::{node_features, GcnClassifier, Matrix};
use crate::rng::{self, Rng};
use crate::topology::{Instance, Topology};
use crate::{Error, Result};

/// Where step rewards come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RewardSource {
    Verifier,
    Gnn,
}

/// An action in either space: a toggle bit per free edge, or a flat
/// compressed index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Toggle(Vec<bool>),
    Index(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// The topology reached.
    pub topology: Topology,
    /// Verifier objective, when the verifier scored this step.
    pub objective: Option<f64>,
}

/// Largest number of verdicts kept for full-space topologies.
const CACHE_CAP: usize = 1 << 18;

#[derive(Clone, Debug)]
pub struct TopoEnv {
    instance: Instance,
    spec: ActionSpaceSpec,
    horizon: usize,
    state: Topology,
    last_index: Option<usize>,
    steps: usize,
    rng: Rng,
    source: RewardSource,
    classifier: Option<GcnClassifier>,
    features: Arc<Matrix>,
    index_cache: BTreeMap<usize, (Topology, Option<f64>)>,
    topo_cache: BTreeMap<Vec<u64>, f64>,
}

impl TopoEnv {
    pub fn new(instance: Instance, spec: ActionSpaceSpec, horizon: usize, seed: u64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("episode horizon must be positive".into()));
        }
        if let ActionSpaceSpec::Compressed(_) = &spec {
            if spec.flat_size() == 0 || spec.flat_size() > 1 << 20 {
                return Err(Error::SpaceTooLarge(format!(
                    "{} compressed actions for a categorical policy",
                    spec.flat_size()
                )));
            }
        }
        let features = Arc::new(node_features(&instance));
        let state = instance.x0().clone();
        Ok(TopoEnv {
            instance,
            spec,
            horizon,
            state,
            last_index: None,
            steps: 0,
            rng: rng::seeded(seed),
            source: RewardSource::Verifier,
            classifier: None,
            features,
            index_cache: BTreeMap::new(),
            topo_cache: BTreeMap::new(),
        })
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn spec(&self) -> &ActionSpaceSpec {
        &self.spec
    }

    pub fn state(&self) -> &Topology {
        &self.state
    }

    /// Replaces the current topology without touching the step count.
    pub fn set_state(&mut self, t: Topology) -> Result<()> {
        if t.n() != self.instance.n() {
            return Err(Error::Shape(format!("{} nodes for {}", t.n(), self.instance.n())));
        }
        self.state = t;
        Ok(())
    }

    pub fn features(&self) -> &Arc<Matrix> {
        &self.features
    }

    pub fn source(&self) -> RewardSource {
        self.source
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Switches the reward source; the classifier is required for `Gnn`.
    pub fn set_source(&mut self, source: RewardSource, classifier: Option<GcnClassifier>) -> Result<()> {
        if source == RewardSource::Gnn && classifier.is_none() {
            return Err(Error::Config("classifier rewards need a classifier".into()));
        }
        self.source = source;
        self.classifier = classifier;
        Ok(())
    }

    /// Policy input width.
    pub fn obs_dim(&self) -> usize {
        match &self.spec {
            ActionSpaceSpec::Full(f) => f.edges.len(),
            ActionSpaceSpec::Compressed(_) => self.spec.flat_size() as usize,
        }
    }

    /// Number of policy outputs: one logit per free edge or per action.
    pub fn action_dim(&self) -> usize {
        self.obs_dim()
    }

    pub fn is_compressed(&self) -> bool {
        self.spec.is_compressed()
    }

    pub fn observation(&self) -> Vec<f64> {
        match &self.spec {
            ActionSpaceSpec::Full(f) => f
                .edges
                .iter()
                .map(|&(i, j)| self.state.has_edge(i, j) as u8 as f64)
                .collect(),
            ActionSpaceSpec::Compressed(_) => {
                let mut o = vec![0.0; self.obs_dim()];
                if let Some(i) = self.last_index {
                    o[i] = 1.0;
                }
                o
            }
        }
    }

    /// Starts an episode from a uniformly drawn topology of the space.
    pub fn reset(&mut self) -> Result<Vec<f64>> {
        self.steps = 0;
        match &self.spec {
            ActionSpaceSpec::Full(f) => {
                let mut t = self.instance.x0().clone();
                for &(i, j) in &f.edges {
                    if self.rng.random::<bool>() {
                        t.add_edge(i, j)?;
                    } else {
                        t.remove_edge(i, j)?;
                    }
                }
                self.state = t;
            }
            ActionSpaceSpec::Compressed(_) => {
                let i = self.rng.random_range(0..self.spec.flat_size() as usize);
                self.state = self.decode_index(i)?;
                self.last_index = Some(i);
            }
        }
        Ok(self.observation())
    }

    fn decode_index(&mut self, i: usize) -> Result<Topology> {
        if let Some((t, _)) = self.index_cache.get(&i) {
            return Ok(t.clone());
        }
        if i as u128 >= self.spec.flat_size() {
            return Err(Error::ActionOutOfRange {
                index: i as u128,
                size: self.spec.flat_size(),
            });
        }
        let t = self.spec.topology(&self.instance, self.instance.x0(), i as u128)?;
        self.index_cache.insert(i, (t.clone(), None));
        Ok(t)
    }

    fn score_index(&mut self, i: usize) -> Result<(Topology, f64)> {
        let t = self.decode_index(i)?;
        let entry = self.index_cache.get_mut(&i).expect("just decoded");
        let f = match entry.1 {
            Some(f) => f,
            None => {
                let f = verify(&self.instance, &t).objective();
                entry.1 = Some(f);
                f
            }
        };
        Ok((t, f))
    }

    /// Verifier objective of any topology, memoized.
    pub fn score(&mut self, t: &Topology) -> f64 {
        let key: Vec<u64> = (0..t.n()).map(|v| t.row(v)).collect();
        if let Some(&f) = self.topo_cache.get(&key) {
            return f;
        }
        let f = verify(&self.instance, t).objective();
        if self.topo_cache.len() < CACHE_CAP {
            self.topo_cache.insert(key, f);
        }
        f
    }

    /// Topology and verifier objective reached from the current state.
    pub fn peek(&mut self, action: &Action) -> Result<(Topology, f64)> {
        match (action, &self.spec) {
            (Action::Toggle(_), ActionSpaceSpec::Full(_)) => {
                let t = self.toggled(action)?;
                let s = self.score(&t);
                Ok((t, s))
            }
            (Action::Index(i), ActionSpaceSpec::Compressed(_)) => self.score_index(*i),
            _ => Err(Error::InvalidArgument("action does not match the space".into())),
        }
    }

    fn gnn_reward(&self, t: &Topology) -> Result<f64> {
        let clf = self.classifier.as_ref().expect("checked in set_source");
        Ok(clf.predict(&self.features, t)? as f64)
    }

    pub fn step(&mut self, action: &Action) -> Result<Step> {
        let (topology, objective, reward) = match self.source {
            RewardSource::Verifier => {
                let (t, f) = self.peek(action)?;
                (t, Some(f), f)
            }
            RewardSource::Gnn => {
                let t = match (action, &self.spec) {
                    (Action::Index(i), ActionSpaceSpec::Compressed(_)) => self.decode_index(*i)?,
                    _ => self.toggled(action)?,
                };
                let r = self.gnn_reward(&t)?;
                (t, None, r)
            }
        };
        if let Action::Index(i) = action {
            self.last_index = Some(*i);
        }
        self.state = topology.clone();
        self.steps += 1;
        let done = self.steps >= self.horizon;
        Ok(Step {
            observation: self.observation(),
            reward,
            done,
            topology,
            objective,
        })
    }

    fn toggled(&self, action: &Action) -> Result<Topology> {
        let (Action::Toggle(bits), ActionSpaceSpec::Full(f)) = (action, &self.spec) else {
            return Err(Error::InvalidArgument("action does not match the space".into()));
        };
        if bits.len() != f.edges.len() {
            return Err(Error::Shape(format!(
                "{} toggle bits for {} free edges",
                bits.len(),
                f.edges.len()
            )));
        }
        let mut t = self.state.clone();
        for (&(i, j), &b) in f.edges.iter().zip(bits) {
            if b {
                if t.has_edge(i, j) {
                    t.remove_edge(i, j)?;
                } else {
                    t.add_edge(i, j)?;
                }
            }
        }
        Ok(t)
    }
}
