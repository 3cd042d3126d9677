//! Seeded synthetic instances.
//!
//! Positions are drawn per kind from an annulus around the origin, with
//! core nodes innermost. A layout is kept only when its candidate edge
//! count and same-kind component sizes match the profile, and when asked,
//! its long access components close into a balanced loop whose ends can
//! reach an aggregation or core node. Traffic follows a
//! daily sinusoid peaking in the evening, scaled per node by a mean-one
//! lognormal factor. The initial topology is a structurally valid
//! compressed action grown by random feasible edges up to the profile's
//! edge count.

use std::f64::consts::PI;

use netforge_core::action_space::{
    all_compositions, basic_components, ActionSpaceSpec, ComponentRule, CompressedSpace, FullSpace,
    wiring_ends, IntraWirings,
};
use netforge_core::evaluator::check_structure;
use netforge_core::rng::{self, Rng};
use netforge_core::{Instance, Network, NodeKind, NodeRecord, Params, Topology, HOURS};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which compositions the access components may take.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Restriction {
    /// Every composition of every component.
    Unrestricted,
    /// Access components of `n` nodes: `(n)`, `(n-1, 1)` and `(n-2, 2)`.
    Large,
    /// Access components of `n` nodes: `(n)` and `(n-1, 1)`.
    Small,
}

impl Restriction {
    pub fn rules(self, net: &Network) -> Vec<ComponentRule> {
        basic_components(net)
            .iter()
            .map(|c| {
                let mut r = ComponentRule::unrestricted(c);
                if c.kind == NodeKind::J && self != Restriction::Unrestricted {
                    let n = c.nodes.len();
                    let mut keep = vec![vec![n]];
                    if n >= 2 {
                        keep.push(vec![n - 1, 1]);
                    }
                    if self == Restriction::Large && n >= 4 {
                        keep.push(vec![n - 2, 2]);
                    }
                    let all = all_compositions(n);
                    r.compositions = all.into_iter().filter(|c| keep.contains(c)).collect();
                }
                r
            })
            .collect()
    }
}

/// Per-kind values in `T`, `H`, `J` order.
pub type PerKind<T> = [T; 3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorProfile {
    pub name: String,
    pub counts: PerKind<usize>,
    pub params: Params,
    /// Inner and outer sampling radius in meters.
    pub radius: PerKind<(f64, f64)>,
    pub u_max: PerKind<f64>,
    /// Mean hourly traffic of one node.
    pub flow_mean: PerKind<f64>,
    /// Lognormal sigma of the per-node traffic scale.
    pub flow_sigma: f64,
    /// Relative amplitude of the daily swing.
    pub diurnal_amplitude: f64,
    pub peak_hour: f64,
    pub candidate_edges: Option<usize>,
    /// Required same-kind component sizes, descending.
    pub h_components: Option<Vec<usize>>,
    pub j_components: Option<Vec<usize>>,
    pub x0_edges: Option<usize>,
    /// Access components longer than a path must close into a balanced
    /// loop, so that unsplit compositions can be valid.
    pub access_loops: bool,
    /// Access nodes take one jittered angular sector each, the first two
    /// opposite each other, instead of uniform angles.
    pub access_ring: bool,
    /// A restriction whose space must hold a structurally valid action.
    pub nonempty: Option<Restriction>,
    pub restriction: Restriction,
    pub max_attempts: usize,
}

fn kind_of(i: usize, counts: &PerKind<usize>) -> (NodeKind, usize) {
    if i < counts[0] {
        (NodeKind::T, 0)
    } else if i < counts[0] + counts[1] {
        (NodeKind::H, 1)
    } else {
        (NodeKind::J, 2)
    }
}

impl GeneratorProfile {
    /// Eight nodes (2T + 3H + 3J) within 500 m links: 20 candidate edges,
    /// aggregation components of 2 and 1 nodes, one access component of 3
    /// and an 11-edge initial topology.
    pub fn small() -> Self {
        GeneratorProfile {
            name: "small".into(),
            counts: [2, 3, 3],
            params: Params::default(),
            radius: [(0.0, 150.0), (150.0, 400.0), (200.0, 500.0)],
            u_max: [100.0, 10.0, 1.0],
            flow_mean: [0.0, 2.0, 0.2],
            flow_sigma: 0.5,
            diurnal_amplitude: 0.5,
            peak_hour: 21.0,
            candidate_edges: Some(20),
            h_components: Some(vec![2, 1]),
            j_components: Some(vec![3]),
            x0_edges: Some(11),
            access_loops: false,
            nonempty: None,
            access_ring: false,
            restriction: Restriction::Unrestricted,
            max_attempts: 20_000,
        }
    }

    /// 23 nodes (2T + 5H + 16J) within 5 km links: 72 candidate edges, one
    /// aggregation and one access component, a 33-edge initial topology.
    pub fn large() -> Self {
        GeneratorProfile {
            name: "large".into(),
            counts: [2, 5, 16],
            params: Params {
                d_max: 5_000.0,
                ..Params::default()
            },
            radius: [(0.0, 1_000.0), (2_000.0, 3_500.0), (5_000.0, 6_500.0)],
            u_max: [100.0, 10.0, 1.0],
            flow_mean: [0.0, 2.0, 0.06],
            flow_sigma: 0.5,
            diurnal_amplitude: 0.5,
            peak_hour: 21.0,
            candidate_edges: Some(72),
            h_components: Some(vec![5]),
            j_components: Some(vec![16]),
            x0_edges: Some(33),
            access_loops: true,
            nonempty: Some(Restriction::Small),
            access_ring: true,
            restriction: Restriction::Large,
            max_attempts: 50_000,
        }
    }

    /// Up to five nodes with at most ten candidate edges, for exhaustive
    /// checks; the node mix varies with the seed.
    pub fn tiny(seed: u64) -> Self {
        let mixes = [[2, 2, 1], [2, 1, 2], [2, 1, 1], [2, 2, 0], [1, 2, 2]];
        GeneratorProfile {
            name: "tiny".into(),
            counts: mixes[(seed % mixes.len() as u64) as usize],
            params: Params::default(),
            radius: [(0.0, 200.0), (0.0, 350.0), (0.0, 450.0)],
            u_max: [100.0, 10.0, 1.0],
            flow_mean: [0.0, 2.0, 0.2],
            flow_sigma: 0.5,
            diurnal_amplitude: 0.5,
            peak_hour: 21.0,
            candidate_edges: None,
            h_components: None,
            j_components: None,
            x0_edges: None,
            access_loops: false,
            nonempty: None,
            access_ring: false,
            restriction: Restriction::Unrestricted,
            max_attempts: 20_000,
        }
    }

    pub fn by_name(name: &str, seed: u64) -> Result<Self> {
        Ok(match name {
            "small" => Self::small(),
            "large" => Self::large(),
            "tiny" => Self::tiny(seed),
            other => return Err(Error::Usage(format!("unknown profile {other:?} (small, large or tiny)"))),
        })
    }

    pub fn node_count(&self) -> usize {
        self.counts.iter().sum()
    }

    fn validate(&self) -> Result<()> {
        let n = self.node_count();
        if n == 0 || n > netforge_core::topology::MAX_NODES {
            return Err(Error::Usage(format!("profile {}: {n} nodes", self.name)));
        }
        for k in 0..3 {
            let (a, b) = self.radius[k];
            if !(0.0 <= a && a <= b && b.is_finite()) {
                return Err(Error::Usage(format!("profile {}: bad radius range {:?}", self.name, self.radius[k])));
            }
            if !(self.u_max[k] > 0.0 && self.flow_mean[k] >= 0.0) {
                return Err(Error::Usage(format!("profile {}: capacities must be positive", self.name)));
            }
        }
        if !(0.0..1.0).contains(&self.diurnal_amplitude) || !(self.flow_sigma >= 0.0) {
            return Err(Error::Usage(format!("profile {}: bad traffic shape", self.name)));
        }
        Ok(())
    }
}

/// A generated instance and the rules of its compressed space.
#[derive(Clone, Debug)]
pub struct Generated {
    pub instance: Instance,
    pub rules: Vec<ComponentRule>,
    /// Layout draws used.
    pub attempts: usize,
}

impl Generated {
    pub fn compressed(&self) -> Result<ActionSpaceSpec> {
        Ok(ActionSpaceSpec::Compressed(CompressedSpace::resolved(
            &self.instance,
            self.rules.clone(),
        )?))
    }

    pub fn full(&self) -> Result<ActionSpaceSpec> {
        Ok(ActionSpaceSpec::Full(FullSpace::new(&self.instance, &[])?))
    }
}

/// One layout draw with traffic.
pub fn draw_layout(p: &GeneratorProfile, r: &mut Rng) -> Result<Network> {
    Ok(Network::new(sample_nodes(p, r)?, p.params.clone())?)
}

fn sample_nodes(p: &GeneratorProfile, r: &mut Rng) -> Result<Vec<NodeRecord>> {
    let n = p.node_count();
    let mut nodes = Vec::with_capacity(n);
    let nj = p.counts[2];
    // Sector order: 0, nj/2, then the rest ascending.
    let mut sectors: Vec<usize> = (0..nj).collect();
    if nj >= 2 {
        sectors.remove(nj / 2);
        sectors.insert(1, nj / 2);
    }
    for id in 0..n {
        let (kind, k) = kind_of(id, &p.counts);
        let (a, b) = p.radius[k];
        let rad = (r.random_range(a * a..=b * b) as f64).sqrt();
        let th = if p.access_ring && kind == NodeKind::J {
            let w = 2.0 * PI / nj as f64;
            (sectors[id - p.counts[0] - p.counts[1]] as f64 + r.random_range(0.0..1.0)) * w
        } else {
            r.random_range(0.0..2.0 * PI)
        };
        let pos = (rad * th.cos(), rad * th.sin());
        let s = p.flow_sigma;
        let scale = if s > 0.0 {
            LogNormal::new(-s * s / 2.0, s).map_err(|e| Error::Usage(format!("flow sigma: {e}")))?.sample(r)
        } else {
            1.0
        };
        let mut flow = [0.0; HOURS];
        for (t, f) in flow.iter_mut().enumerate() {
            let phase = 2.0 * PI * (t as f64 - p.peak_hour) / HOURS as f64;
            *f = p.flow_mean[k] * scale * (1.0 + p.diurnal_amplitude * phase.cos());
        }
        nodes.push(NodeRecord {
            id,
            kind,
            u_max: p.u_max[k],
            pos,
            flow,
        });
    }
    Ok(nodes)
}

fn component_sizes(net: &Network, kind: NodeKind) -> Vec<usize> {
    let mut s: Vec<usize> = net
        .feasibility_graph()
        .connected_components(|v| net.kind(v) == kind)
        .iter()
        .map(Vec::len)
        .collect();
    s.sort_unstable_by(|a, b| b.cmp(a));
    s
}

/// Whether a layout has the profile's edge count and component sizes.
pub fn layout_matches(p: &GeneratorProfile, net: &Network) -> bool {
    if p.candidate_edges.is_some_and(|c| net.candidate_edges().len() != c) {
        return false;
    }
    if p.h_components.as_ref().is_some_and(|h| component_sizes(net, NodeKind::H) != *h) {
        return false;
    }
    if p.j_components.as_ref().is_some_and(|j| component_sizes(net, NodeKind::J) != *j) {
        return false;
    }
    if p.access_loops {
        let cap = net.params().path_node_cap;
        return basic_components(net)
            .iter()
            .filter(|c| c.kind == NodeKind::J && c.nodes.len() >= 3 && c.nodes.len() + 2 > cap)
            .all(|c| {
                let Some(lp) = IntraWirings::new(net, &c.nodes).managed().map(<[_]>::to_vec) else {
                    return false;
                };
                let (a, b) = wiring_ends(&c.nodes, &lp);
                let hosted = |v: usize| (0..net.n()).any(|w| net.kind(w) != NodeKind::J && net.feasible(v, w));
                hosted(a) && hosted(b)
            });
    }
    true
}

/// Connected topologies with a positive benchmark over at most this many
/// candidate edges are found by enumeration.
const ENUMERATE_EDGES: usize = 12;
/// Compressed actions tried as the base of the initial topology.
const BASES: usize = 24;

fn valid(net: &Network, t: &Topology) -> bool {
    check_structure(net, t).is_ok() && Instance::new(net.clone(), t.clone()).is_ok()
}

fn initial_topology(p: &GeneratorProfile, net: &Network, rules: &[ComponentRule], r: &mut Rng) -> Option<Topology> {
    let cands = net.candidate_edges();
    if cands.len() <= ENUMERATE_EDGES {
        let mut ok = Vec::new();
        for mask in 0u32..1 << cands.len() {
            let edges: Vec<_> = (0..cands.len()).filter(|b| mask >> b & 1 == 1).map(|b| cands[b]).collect();
            if p.x0_edges.is_some_and(|k| edges.len() != k) {
                continue;
            }
            let t = Topology::from_edges(net.n(), &edges).ok()?;
            if valid(net, &t) {
                ok.push(t);
            }
        }
        return ok.choose(r).cloned();
    }
    let space = ActionSpaceSpec::Compressed(CompressedSpace::resolved(net, rules.to_vec()).ok()?);
    let empty = Topology::empty(net.n()).ok()?;
    let mut order: Vec<u128> = (0..space.flat_size()).collect();
    order.shuffle(r);
    let mut bases = 0;
    for i in order {
        let Ok(base) = space.topology(net, &empty, i) else { continue };
        if check_structure(net, &base).is_err() {
            continue;
        }
        bases += 1;
        if let Some(t) = grow(p, net, base, &cands, r) {
            return Some(t);
        }
        if bases == BASES {
            break;
        }
    }
    None
}

fn has_valid_action(net: &Network, rules: Vec<ComponentRule>) -> bool {
    let Ok(space) = CompressedSpace::resolved(net, rules) else {
        return false;
    };
    let space = ActionSpaceSpec::Compressed(space);
    let Ok(empty) = Topology::empty(net.n()) else {
        return false;
    };
    (0..space.flat_size()).any(|i| space.topology(net, &empty, i).is_ok_and(|t| check_structure(net, &t).is_ok()))
}

/// Adds random candidate edges that keep the topology valid until the
/// profile's edge count.
fn grow(p: &GeneratorProfile, net: &Network, mut t: Topology, cands: &[(usize, usize)], r: &mut Rng) -> Option<Topology> {
    let target = p.x0_edges.unwrap_or(t.edge_count());
    if t.edge_count() > target {
        return None;
    }
    let mut pool: Vec<_> = cands.iter().copied().filter(|&(i, j)| !t.has_edge(i, j)).collect();
    pool.shuffle(r);
    for (i, j) in pool {
        if t.edge_count() == target {
            break;
        }
        t.add_edge(i, j).ok()?;
        if check_structure(net, &t).is_err() {
            t.remove_edge(i, j).ok()?;
        }
    }
    (t.edge_count() == target && valid(net, &t)).then_some(t)
}

/// Draws layouts until one matches the profile and admits a valid initial
/// topology.
pub fn generate(profile: &GeneratorProfile, seed: u64) -> Result<Generated> {
    profile.validate()?;
    let mut r = rng::seeded(seed);
    for attempt in 1..=profile.max_attempts {
        let net = draw_layout(profile, &mut r)?;
        if !layout_matches(profile, &net) {
            continue;
        }
        if let Some(res) = profile.nonempty {
            if !has_valid_action(&net, res.rules(&net)) {
                continue;
            }
        }
        let rules = profile.restriction.rules(&net);
        let mut xr = rng::stream(seed, attempt as u64);
        if let Some(x0) = initial_topology(profile, &net, &rules, &mut xr) {
            let instance = Instance::new(net, x0)?;
            return Ok(Generated {
                instance,
                rules,
                attempts: attempt,
            });
        }
    }
    Err(Error::Generation(format!(
        "profile {}: no valid instance within {} layout draws (seed {seed})",
        profile.name,
        profile.max_attempts
    )))
}
