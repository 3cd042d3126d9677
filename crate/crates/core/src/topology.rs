//! Graph and instance data model.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hours in the daily traffic profile.
pub const HOURS: usize = 24;

/// Adjacency rows are 64-bit masks.
pub const MAX_NODES: usize = 64;

/// Network layer of a node: core, aggregation or access.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    T,
    H,
    J,
}

impl NodeKind {
    /// Layer depth: `T` is the core (0), `J` the access layer (2).
    pub fn layer(self) -> u8 {
        match self {
            NodeKind::T => 0,
            NodeKind::H => 1,
            NodeKind::J => 2,
        }
    }

    pub fn one_hot(self) -> [f64; 3] {
        let mut v = [0.0; 3];
        v[self.layer() as usize] = 1.0;
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    pub kind: NodeKind,
    /// Capacity in Mbps.
    pub u_max: f64,
    /// Planar position in meters.
    pub pos: (f64, f64),
    /// Average hourly traffic in Mbps.
    pub flow: [f64; HOURS],
}

impl NodeRecord {
    pub fn total_flow(&self) -> f64 {
        self.flow.iter().sum()
    }

    fn validate(&self, expected_id: usize) -> Result<()> {
        let bad = |msg: &str| Error::InvalidNode {
            id: self.id,
            msg: msg.to_string(),
        };
        if self.id != expected_id {
            return Err(bad("ids must be 0..n in order"));
        }
        if !(self.u_max > 0.0 && self.u_max.is_finite()) {
            return Err(bad("u_max must be positive and finite"));
        }
        if !(self.pos.0.is_finite() && self.pos.1.is_finite()) {
            return Err(bad("position must be finite"));
        }
        if self.flow.iter().any(|f| !(*f >= 0.0 && f.is_finite())) {
            return Err(bad("flows must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Constraint and objective constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Maximum edge length in meters.
    pub d_max: f64,
    /// Maximum node count of a main path.
    pub path_node_cap: usize,
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub gamma_cost: f64,
    pub invalid_penalty: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            d_max: 500.0,
            path_node_cap: 15,
            eps: 0.4,
            alpha: 0.02,
            beta: 0.05,
            lambda0: 1e-8,
            lambda1: 1e-10,
            gamma_cost: -1e-3,
            invalid_penalty: -10.0,
        }
    }
}

/// Undirected simple graph over `n <= 64` nodes.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "EdgeList", into = "EdgeList")]
pub struct Topology {
    n: usize,
    rows: Vec<u64>,
}

/// Serialized shape of a [`Topology`]: node count and sorted `[i, j]`, `i < j` pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeList {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl TryFrom<EdgeList> for Topology {
    type Error = Error;
    fn try_from(list: EdgeList) -> Result<Self> {
        let edges: Vec<(usize, usize)> = list.edges.iter().map(|e| (e[0], e[1])).collect();
        Topology::from_edges(list.n, &edges)
    }
}

impl From<Topology> for EdgeList {
    fn from(t: Topology) -> Self {
        EdgeList {
            n: t.n,
            edges: t.edges().map(|(i, j)| [i, j]).collect(),
        }
    }
}

impl core::fmt::Debug for Topology {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Topology")
            .field("n", &self.n)
            .field("edges", &self.edges().collect::<Vec<_>>())
            .finish()
    }
}

impl Topology {
    pub fn empty(n: usize) -> Result<Self> {
        if n > MAX_NODES {
            return Err(Error::TooManyNodes { n, max: MAX_NODES });
        }
        Ok(Topology { n, rows: vec![0; n] })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut t = Topology::empty(n)?;
        for &(i, j) in edges {
            t.add_edge(i, j)?;
        }
        Ok(t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        for id in [i, j] {
            if id >= self.n {
                return Err(Error::NodeOutOfRange { id, n: self.n });
            }
        }
        if i == j {
            return Err(Error::SelfPair(i));
        }
        Ok(())
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_pair(i, j)?;
        self.rows[i] |= 1 << j;
        self.rows[j] |= 1 << i;
        Ok(())
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_pair(i, j)?;
        self.rows[i] &= !(1 << j);
        self.rows[j] &= !(1 << i);
        Ok(())
    }

    /// Panics on out-of-range ids; `false` for `i == j`.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        assert!(i < self.n && j < self.n, "node id out of range");
        self.rows[i] >> j & 1 == 1
    }

    /// Neighbor bitmask of `v`.
    pub fn row(&self, v: usize) -> u64 {
        self.rows[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.rows[v].count_ones() as usize
    }

    /// Neighbors in ascending id order.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        bits(self.rows[v]).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum::<usize>() / 2
    }

    /// Edges as `(i, j)` with `i < j`, lexicographic.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            let upper = if i + 1 >= 64 { 0 } else { self.rows[i] >> (i + 1) << (i + 1) };
            bits(upper).map(move |j| (i, j))
        })
    }

    /// Symmetric difference of edge sets.
    pub fn xor(&self, other: &Topology) -> Result<Topology> {
        if self.n != other.n {
            return Err(Error::Shape(format!("{} vs {} nodes", self.n, other.n)));
        }
        Ok(Topology {
            n: self.n,
            rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a ^ b).collect(),
        })
    }

    /// Connected components of the subgraph induced by the nodes passing
    /// `filter`, each sorted, ordered by smallest member.
    pub fn connected_components(&self, filter: impl Fn(usize) -> bool) -> Vec<Vec<usize>> {
        let mut allowed = 0u64;
        for v in 0..self.n {
            if filter(v) {
                allowed |= 1 << v;
            }
        }
        components_in_mask(&self.rows, allowed)
            .into_iter()
            .map(|m| bits(m).collect())
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.connected_components(|_| true).len() == 1
    }
}

/// Iterate the set bit positions of a mask in ascending order.
pub fn bits(mut mask: u64) -> impl Iterator<Item = usize> {
    core::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let b = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(b)
        }
    })
}

/// Component masks of the subgraph induced by `allowed`, ordered by lowest bit.
pub(crate) fn components_in_mask(rows: &[u64], allowed: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut left = allowed;
    while left != 0 {
        let start = left & left.wrapping_neg();
        let mut comp = start;
        let mut frontier = start;
        while frontier != 0 {
            let mut next = 0u64;
            for v in bits(frontier) {
                next |= rows[v];
            }
            next &= allowed & !comp;
            comp |= next;
            frontier = next;
        }
        out.push(comp);
        left &= !comp;
    }
    out
}

/// `x'_{ij} = x_{ij} XOR a_{ij}` for a symmetric, zero-diagonal `a`.
pub fn toggle_edges(topology: &Topology, a: &[Vec<bool>]) -> Result<Topology> {
    let n = topology.n();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::Shape(format!("toggle matrix must be {n}x{n}")));
    }
    let mut out = topology.clone();
    for i in 0..n {
        if a[i][i] {
            return Err(Error::AsymmetricAction { i, j: i });
        }
        for j in i + 1..n {
            if a[i][j] != a[j][i] {
                return Err(Error::AsymmetricAction { i, j });
            }
            if a[i][j] {
                out.rows[i] ^= 1 << j;
                out.rows[j] ^= 1 << i;
            }
        }
    }
    Ok(out)
}

/// Node records plus constants: everything needed to check a topology's
/// structure. Scoring additionally needs the initial topology and the
/// benchmark, held by [`Instance`].
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    nodes: Vec<NodeRecord>,
    params: Params,
    dist: Vec<f64>,
}

impl Network {
    pub fn new(nodes: Vec<NodeRecord>, params: Params) -> Result<Self> {
        let n = nodes.len();
        if n > MAX_NODES {
            return Err(Error::TooManyNodes { n, max: MAX_NODES });
        }
        for (i, node) in nodes.iter().enumerate() {
            node.validate(i)?;
        }
        if !(params.d_max >= 0.0) || params.path_node_cap < 2 {
            return Err(Error::InvalidInstance(
                "d_max must be non-negative and path_node_cap at least 2".to_string(),
            ));
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let (dx, dy) = (nodes[i].pos.0 - nodes[j].pos.0, nodes[i].pos.1 - nodes[j].pos.1);
                dist[i * n + j] = libm::sqrt(dx * dx + dy * dy);
            }
        }
        Ok(Network { nodes, params, dist })
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn node(&self, v: usize) -> &NodeRecord {
        &self.nodes[v]
    }

    pub fn kind(&self, v: usize) -> NodeKind {
        self.nodes[v].kind
    }

    pub fn u_max(&self, v: usize) -> f64 {
        self.nodes[v].u_max
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Euclidean distance in meters between two distinct nodes.
    pub fn dist(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.n();
        for id in [i, j] {
            if id >= n {
                return Err(Error::NodeOutOfRange { id, n });
            }
        }
        if i == j {
            return Err(Error::SelfPair(i));
        }
        Ok(self.dist[i * n + j])
    }

    /// Unchecked distance for hot loops.
    pub(crate) fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n() + j]
    }

    pub fn feasible(&self, i: usize, j: usize) -> bool {
        i != j && self.d(i, j) <= self.params.d_max
    }

    /// All pairs within `d_max`, as `(i, j)` with `i < j`, lexicographic.
    pub fn candidate_edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.feasible(i, j))
            .collect()
    }

    /// Nodes of `kind`, ascending.
    pub fn nodes_of(&self, kind: NodeKind) -> Vec<usize> {
        (0..self.n()).filter(|&v| self.kind(v) == kind).collect()
    }

    /// Topology containing every candidate edge.
    pub fn feasibility_graph(&self) -> Topology {
        let mut t = Topology::empty(self.n()).expect("node count checked");
        for (i, j) in self.candidate_edges() {
            t.add_edge(i, j).expect("valid pair");
        }
        t
    }

    pub fn max_u_max(&self) -> f64 {
        self.nodes.iter().map(|v| v.u_max).fold(0.0, f64::max)
    }
}

/// Immutable problem description: network, initial topology and the
/// hourly benchmark utilization derived from it.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    network: Network,
    x0: Topology,
    benchmark: [f64; HOURS],
}

impl Instance {
    /// Builds the instance and computes the benchmark from `x0`, which must
    /// verify and carry positive utilization every hour.
    pub fn new(network: Network, x0: Topology) -> Result<Self> {
        if x0.n() != network.n() {
            return Err(Error::Shape(format!(
                "x0 has {} nodes, network has {}",
                x0.n(),
                network.n()
            )));
        }
        let benchmark = crate::evaluator::compute_benchmark(&network, &x0)?;
        Ok(Instance {
            network,
            x0,
            benchmark,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn x0(&self) -> &Topology {
        &self.x0
    }

    pub fn benchmark(&self) -> &[f64; HOURS] {
        &self.benchmark
    }

    pub fn params(&self) -> &Params {
        self.network.params()
    }

    pub fn n(&self) -> usize {
        self.network.n()
    }

    pub fn dist(&self, i: usize, j: usize) -> Result<f64> {
        self.network.dist(i, j)
    }

    pub fn candidate_edges(&self) -> Vec<(usize, usize)> {
        self.network.candidate_edges()
    }
}

impl core::ops::Deref for Instance {
    type Target = Network;
    fn deref(&self) -> &Network {
        &self.network
    }
}
