//! Search baselines: uniform random actions, exhaustive enumeration and the
//! greedy one-step grouping heuristic.

use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::action_space::wiring::attach_options;
use crate::action_space::{ActionSpaceSpec, IntraWirings, WiredComponent};
use crate::evaluator::verify;
use crate::rng;
use crate::topology::{Instance, NodeKind, Topology, HOURS};
use crate::{Error, Result};

/// FNV-1a over the node count and adjacency rows.
pub fn fingerprint(t: &Topology) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(t.n() as u64);
    for v in 0..t.n() {
        eat(t.row(v));
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub fingerprint: u64,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best_topology: Topology,
    pub best_objective: f64,
    /// Flat index of the best topology when it came from an action space.
    pub best_index: Option<u128>,
    /// Every flat index scoring exactly `best_objective` (exhaustive search
    /// only), ascending.
    pub ties: Vec<u128>,
    pub evaluations: u64,
    pub trace: Vec<TraceEntry>,
}

impl SearchResult {
    fn single(topo: Topology, objective: f64, index: Option<u128>) -> Self {
        SearchResult {
            best_topology: topo,
            best_objective: objective,
            best_index: index,
            ties: index.into_iter().collect(),
            evaluations: 1,
            trace: Vec::new(),
        }
    }

    /// Combines two exhaustive searches over disjoint index ranges; the
    /// lowest index wins ties, so the result does not depend on the split.
    pub fn merge(mut self, other: SearchResult) -> SearchResult {
        self.evaluations += other.evaluations;
        self.trace.extend(other.trace);
        let better = other.best_objective > self.best_objective
            || (other.best_objective == self.best_objective && other.best_index < self.best_index);
        if other.best_objective == self.best_objective {
            self.ties.extend(other.ties);
            self.ties.sort_unstable();
        } else if other.best_objective > self.best_objective {
            self.ties = other.ties;
        }
        if better {
            self.best_topology = other.best_topology;
            self.best_objective = other.best_objective;
            self.best_index = other.best_index;
        }
        self
    }
}

/// Scores `k` uniformly drawn actions and keeps the first best one.
pub fn random_policy_search(instance: &Instance, spec: &ActionSpaceSpec, k: usize, seed: u64) -> Result<SearchResult> {
    if k == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    let size = spec.flat_size();
    if size == 0 {
        return Err(Error::InvalidArgument("empty action space".into()));
    }
    let mut r = rng::seeded(seed);
    let mut best: Option<SearchResult> = None;
    let mut trace = Vec::with_capacity(k);
    for _ in 0..k {
        let index = r.random_range(0..size);
        let topo = spec.topology(instance, instance.x0(), index)?;
        let f = verify(instance, &topo).objective();
        trace.push(TraceEntry {
            fingerprint: fingerprint(&topo),
            objective: f,
        });
        match &mut best {
            Some(b) if f <= b.best_objective => {}
            _ => best = Some(SearchResult::single(topo, f, Some(index))),
        }
    }
    let mut best = best.expect("k >= 1");
    best.ties.clear();
    best.evaluations = k as u64;
    best.trace = trace;
    Ok(best)
}

/// Default refusal threshold of [`brute_force`].
pub const BRUTE_FORCE_CAP: u128 = 1 << 20;

/// Scores every action of `spec`, refusing spaces over `cap`.
pub fn brute_force(instance: &Instance, spec: &ActionSpaceSpec, cap: u128) -> Result<SearchResult> {
    let size = spec.flat_size();
    if size > cap {
        return Err(Error::Refused { size, cap });
    }
    brute_force_range(instance, spec, 0..size)
}

/// Exhaustive search over a slice of the flat index range.
pub fn brute_force_range(instance: &Instance, spec: &ActionSpaceSpec, range: Range<u128>) -> Result<SearchResult> {
    if range.start >= range.end || range.end > spec.flat_size() {
        return Err(Error::InvalidArgument("empty or out-of-range index range".into()));
    }
    let mut best: Option<SearchResult> = None;
    let mut evaluations = 0u64;
    for index in range {
        let topo = spec.topology(instance, instance.x0(), index)?;
        let f = verify(instance, &topo).objective();
        evaluations += 1;
        match &mut best {
            Some(b) if f < b.best_objective => {}
            Some(b) if f == b.best_objective => b.ties.push(index),
            _ => best = Some(SearchResult::single(topo, f, Some(index))),
        }
    }
    let mut best = best.expect("nonempty range");
    best.evaluations = evaluations;
    Ok(best)
}

/// Capacity used to normalize group traffic in the one-step heuristic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum UtilityDenominator {
    /// Largest capacity over the whole network, as the heuristic is stated.
    #[default]
    GlobalMax,
    /// Largest capacity inside the group being split (not the stated rule).
    GroupMax,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneStepConfig {
    pub denominator: UtilityDenominator,
}

/// Hour-hit fraction of a node group's pooled traffic against the
/// benchmark.
fn group_utility(instance: &Instance, nodes: &[usize], denom: f64) -> f64 {
    let b = instance.benchmark();
    let eps = instance.params().eps;
    let mut hits = 0usize;
    for (t, &bt) in b.iter().enumerate() {
        let mut s = 0.0;
        for &v in nodes {
            s += instance.node(v).flow[t];
        }
        if libm::fabs(s / denom - bt) / bt <= eps {
            hits += 1;
        }
    }
    hits as f64 / HOURS as f64
}

/// Final node groups of one kind: repeatedly peel the traffic-sorted prefix
/// with the best hit fraction (largest on ties) off each group and split it
/// into feasible pieces.
pub fn one_step_groups(instance: &Instance, kind: NodeKind, cfg: &OneStepConfig) -> Vec<Vec<usize>> {
    let g = instance.feasibility_graph();
    let mut out = Vec::new();
    for mut group in g.connected_components(|v| instance.kind(v) == kind) {
        while !group.is_empty() {
            let mut sorted = group.clone();
            sorted.sort_by(|&a, &b| {
                instance
                    .node(b)
                    .total_flow()
                    .total_cmp(&instance.node(a).total_flow())
                    .then(a.cmp(&b))
            });
            let denom = match cfg.denominator {
                UtilityDenominator::GlobalMax => instance.max_u_max(),
                UtilityDenominator::GroupMax => sorted.iter().map(|&v| instance.u_max(v)).fold(0.0, f64::max),
            };
            let mut best_u = 1;
            let mut best = f64::NEG_INFINITY;
            for u in 1..=sorted.len() {
                let val = group_utility(instance, &sorted[..u], denom);
                if val >= best {
                    best = val;
                    best_u = u;
                }
            }
            let prefix = &sorted[..best_u];
            out.extend(g.connected_components(|v| prefix.contains(&v)));
            group.retain(|v| !prefix.contains(v));
        }
    }
    out.sort_by_key(|c| c[0]);
    out
}

fn wire_group(instance: &Instance, kind: NodeKind, nodes: &[usize]) -> WiredComponent {
    let edges = IntraWirings::new(instance, nodes).nth(0).unwrap_or_default();
    WiredComponent {
        kind,
        nodes: nodes.to_vec(),
        edges,
    }
}

/// Shortest feasible single edge from `comp` to any of `hosts`.
fn nearest_edge(instance: &Instance, comp: &[usize], hosts: &[usize]) -> Option<(usize, usize)> {
    let mut best: Option<(f64, (usize, usize))> = None;
    for &a in comp {
        for &h in hosts {
            if instance.feasible(a, h) {
                let d = instance.dist(a, h).expect("in range");
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, (a.min(h), a.max(h))));
                }
            }
        }
    }
    best.map(|(_, e)| e)
}

/// Topology assembled by the one-step heuristic. Aggregation groups hook
/// their chain ends onto two core nodes; each access group takes the
/// shortest two-edge attachment onto a single aggregation group, or else
/// one edge to the nearest attached node.
pub fn one_step_topology(instance: &Instance, cfg: &OneStepConfig) -> Topology {
    let t_nodes = instance.nodes_of(NodeKind::T);
    let hs: Vec<WiredComponent> = one_step_groups(instance, NodeKind::H, cfg)
        .iter()
        .map(|g| wire_group(instance, NodeKind::H, g))
        .collect();
    let js: Vec<WiredComponent> = one_step_groups(instance, NodeKind::J, cfg)
        .iter()
        .map(|g| wire_group(instance, NodeKind::J, g))
        .collect();
    let mut topo = Topology::empty(instance.n()).expect("node count checked");
    let add = |topo: &mut Topology, edges: &[(usize, usize)]| {
        for &(a, b) in edges {
            topo.add_edge(a, b).expect("valid pair");
        }
    };
    let mut attached: Vec<usize> = t_nodes.clone();
    for h in &hs {
        add(&mut topo, &h.edges);
        let opts = attach_options(instance, h, &t_nodes);
        match opts.iter().find(|a| a.edges.len() == 2) {
            Some(a) => add(&mut topo, &a.edges),
            None => {
                if let Some(e) = nearest_edge(instance, &h.nodes, &t_nodes) {
                    add(&mut topo, &[e]);
                }
            }
        }
        attached.extend_from_slice(&h.nodes);
    }
    for j in &js {
        add(&mut topo, &j.edges);
        let mut best: Option<&crate::action_space::Attachment> = None;
        let options: Vec<_> = hs.iter().map(|h| attach_options(instance, j, &h.nodes)).collect();
        for opts in &options {
            if let Some(a) = opts.iter().find(|a| a.edges.len() == 2) {
                if best.is_none_or(|b| a.length < b.length) {
                    best = Some(a);
                }
            }
        }
        match best {
            Some(a) => add(&mut topo, &a.edges),
            None => {
                if let Some(e) = nearest_edge(instance, &j.nodes, &attached) {
                    add(&mut topo, &[e]);
                }
            }
        }
        attached.extend_from_slice(&j.nodes);
    }
    topo
}

/// Runs the one-step heuristic and scores its topology; the result may be
/// invalid and is reported as such.
pub fn one_step_optimize(instance: &Instance, cfg: &OneStepConfig) -> SearchResult {
    let topo = one_step_topology(instance, cfg);
    let f = verify(instance, &topo).objective();
    let mut r = SearchResult::single(topo, f, None);
    r.trace.push(TraceEntry {
        fingerprint: fingerprint(&r.best_topology),
        objective: f,
    });
    r
}
