//! Wirings inside a sub-component and attachments between sub-components.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::ControlFlow;

use crate::topology::{bits, Network, NodeKind, Topology};

pub type Edge = (usize, usize);

fn norm(a: usize, b: usize) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Expansion budget of the loop search.
const LOOP_BUDGET: usize = 20_000;

/// Connected wirings of one node set over distance-feasible pairs.
///
/// The stream lists Hamiltonian chains first (lexicographic by node
/// sequence, first node below last), then every other connected edge set by
/// edge count and then lexicographically over the pair list; a single node
/// has exactly one wiring, the empty one.
///
/// A set too large for any chain to be a valid main path (`k + 2` above the
/// path node cap) instead opens the stream with a loop: a Hamiltonian cycle
/// on which the two smallest ids, the attachment ends, sit as far apart as
/// possible, so that both arcs between them stay short. The loop is then
/// skipped where it would reappear.
#[derive(Clone, Debug)]
pub struct IntraWirings {
    nodes: Vec<usize>,
    pairs: Vec<Edge>,
    /// Local adjacency over positions in `nodes`.
    adj: Vec<u64>,
    managed: Option<Vec<Edge>>,
}

impl IntraWirings {
    pub fn new(net: &Network, nodes: &[usize]) -> Self {
        let mut nodes = nodes.to_vec();
        nodes.sort_unstable();
        let k = nodes.len();
        let mut pairs = Vec::new();
        let mut adj = vec![0u64; k];
        for a in 0..k {
            for b in a + 1..k {
                if net.feasible(nodes[a], nodes[b]) {
                    pairs.push((nodes[a], nodes[b]));
                    adj[a] |= 1 << b;
                    adj[b] |= 1 << a;
                }
            }
        }
        let mut w = IntraWirings {
            nodes,
            pairs,
            adj,
            managed: None,
        };
        if k >= 3 && k + 2 > net.params().path_node_cap {
            w.managed = w.find_loop();
        }
        w
    }

    /// The balanced loop, when the search finds one within budget.
    pub fn managed(&self) -> Option<&[Edge]> {
        self.managed.as_deref()
    }

    fn find_loop(&self) -> Option<Vec<Edge>> {
        let k = self.nodes.len();
        // Local 0 and 1 are the ends; local 1 goes to position `half`.
        let half = (k - 2) / 2 + 1;
        let mut seq = vec![0usize];
        let mut budget = LOOP_BUDGET;
        if !self.loop_dfs(&mut seq, 1, half, &mut budget) {
            return None;
        }
        let mut edges: Vec<Edge> = (0..k)
            .map(|i| norm(self.nodes[seq[i]], self.nodes[seq[(i + 1) % k]]))
            .collect();
        edges.sort_unstable();
        Some(edges)
    }

    fn loop_dfs(&self, seq: &mut Vec<usize>, visited: u64, half: usize, budget: &mut usize) -> bool {
        let k = self.nodes.len();
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        let last = *seq.last().expect("nonempty");
        if seq.len() == k {
            return self.adj[last] & 1 != 0;
        }
        let full = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
        let next = if seq.len() == half {
            self.adj[last] & 2 & !visited
        } else {
            self.adj[last] & full & !visited & !2
        };
        for w in bits(next) {
            seq.push(w);
            if self.loop_dfs(seq, visited | 1 << w, half, budget) {
                return true;
            }
            seq.pop();
        }
        false
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Visits wirings in stream order until `f` breaks.
    pub fn for_each<B>(&self, mut f: impl FnMut(&[Edge]) -> ControlFlow<B>) -> Option<B> {
        let k = self.nodes.len();
        if k == 0 {
            return None;
        }
        if k == 1 {
            return f(&[]).break_value();
        }
        let full = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
        if !self.spans(full) {
            return None;
        }
        if let Some(m) = &self.managed {
            if let ControlFlow::Break(b) = f(m) {
                return Some(b);
            }
        }
        let mut seq = Vec::with_capacity(k);
        let mut edges = Vec::with_capacity(k);
        for s in 0..k {
            seq.push(s);
            if let ControlFlow::Break(b) = self.chains(&mut seq, 1 << s, &mut edges, &mut f) {
                return Some(b);
            }
            seq.pop();
        }
        let mut chosen = Vec::new();
        for count in k - 1..=self.pairs.len() {
            if let ControlFlow::Break(b) = self.subsets(0, count, &mut chosen, full, &mut f) {
                return Some(b);
            }
        }
        None
    }

    /// Whether the feasible pairs connect the whole set.
    fn spans(&self, full: u64) -> bool {
        let mut seen = 1u64;
        let mut frontier = 1u64;
        while frontier != 0 {
            let mut next = 0;
            for v in bits(frontier) {
                next |= self.adj[v];
            }
            frontier = next & full & !seen;
            seen |= frontier;
        }
        seen == full
    }

    fn chains<B>(
        &self,
        seq: &mut Vec<usize>,
        visited: u64,
        edges: &mut Vec<Edge>,
        f: &mut impl FnMut(&[Edge]) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        let k = self.nodes.len();
        let last = *seq.last().expect("nonempty");
        if seq.len() == k {
            if seq[0] < last {
                let mut sorted = edges.clone();
                sorted.sort_unstable();
                return f(&sorted);
            }
            return ControlFlow::Continue(());
        }
        let full = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
        let unvisited = full & !visited;
        if !self.reaches_all(last, unvisited) {
            return ControlFlow::Continue(());
        }
        for w in bits(self.adj[last] & unvisited) {
            seq.push(w);
            edges.push(norm(self.nodes[last], self.nodes[w]));
            let r = self.chains(seq, visited | 1 << w, edges, f);
            edges.pop();
            seq.pop();
            r?;
        }
        ControlFlow::Continue(())
    }

    /// Whether every node of `rest` is reachable from `from` inside
    /// `rest ∪ {from}`, with at most one dead end besides the path tip.
    fn reaches_all(&self, from: usize, rest: u64) -> bool {
        let mut seen = 0u64;
        let mut frontier = self.adj[from] & rest;
        while frontier != 0 {
            seen |= frontier;
            let mut next = 0;
            for v in bits(frontier) {
                next |= self.adj[v];
            }
            frontier = next & rest & !seen;
        }
        if seen != rest {
            return false;
        }
        let dead = bits(rest)
            .filter(|&v| (self.adj[v] & (rest | 1 << from)).count_ones() <= 1)
            .count();
        dead <= 1
    }

    fn subsets<B>(
        &self,
        start: usize,
        left: usize,
        chosen: &mut Vec<usize>,
        full: u64,
        f: &mut impl FnMut(&[Edge]) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        if left == 0 {
            let edges: Vec<Edge> = chosen.iter().map(|&i| self.pairs[i]).collect();
            if self.connected(&edges, full) && !self.is_chain(&edges) && self.managed.as_ref() != Some(&edges) {
                return f(&edges);
            }
            return ControlFlow::Continue(());
        }
        if self.pairs.len() - start < left {
            return ControlFlow::Continue(());
        }
        for i in start..=self.pairs.len() - left {
            chosen.push(i);
            let r = self.subsets(i + 1, left - 1, chosen, full, f);
            chosen.pop();
            r?;
        }
        ControlFlow::Continue(())
    }

    fn local(&self, v: usize) -> usize {
        self.nodes.binary_search(&v).expect("member")
    }

    fn connected(&self, edges: &[Edge], full: u64) -> bool {
        let k = self.nodes.len();
        let mut rows = vec![0u64; k];
        for &(a, b) in edges {
            let (x, y) = (self.local(a), self.local(b));
            rows[x] |= 1 << y;
            rows[y] |= 1 << x;
        }
        let mut seen = 1u64;
        let mut frontier = 1u64;
        while frontier != 0 {
            let mut next = 0;
            for v in bits(frontier) {
                next |= rows[v];
            }
            frontier = next & !seen;
            seen |= frontier;
        }
        seen == full
    }

    fn is_chain(&self, edges: &[Edge]) -> bool {
        if edges.len() + 1 != self.nodes.len() {
            return false;
        }
        let mut deg = vec![0u8; self.nodes.len()];
        for &(a, b) in edges {
            deg[self.local(a)] += 1;
            deg[self.local(b)] += 1;
        }
        deg.iter().all(|&d| d <= 2)
    }

    /// The wiring at `index`, if the stream is that long.
    pub fn nth(&self, index: u64) -> Option<Vec<Edge>> {
        let mut i = 0u64;
        self.for_each(|e| {
            if i == index {
                ControlFlow::Break(e.to_vec())
            } else {
                i += 1;
                ControlFlow::Continue(())
            }
        })
    }

    /// Stream length, or `None` once it exceeds `limit`.
    pub fn count(&self, limit: u64) -> Option<u64> {
        let mut i = 0u64;
        let over = self.for_each(|_| {
            i += 1;
            if i > limit {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        if over.is_some() {
            None
        } else {
            Some(i)
        }
    }

    /// Stream position of `edges` (any order), searching at most `limit`
    /// entries.
    pub fn position(&self, edges: &[Edge], limit: u64) -> Option<u64> {
        let mut target: Vec<Edge> = edges.iter().map(|&(a, b)| norm(a, b)).collect();
        target.sort_unstable();
        let mut i = 0u64;
        self.for_each(|e| {
            if e == target.as_slice() {
                ControlFlow::Break(Some(i))
            } else if i >= limit {
                ControlFlow::Break(None)
            } else {
                i += 1;
                ControlFlow::Continue(())
            }
        })
        .flatten()
    }

    /// All wirings; only for small node sets.
    pub fn collect(&self) -> Vec<Vec<Edge>> {
        let mut out = Vec::new();
        self.for_each::<()>(|e| {
            out.push(e.to_vec());
            ControlFlow::Continue(())
        });
        out
    }
}

/// The two attachment points of a wired sub-component: the two nodes of
/// smallest `(degree, id)`; a single node is both ends.
pub fn wiring_ends(nodes: &[usize], edges: &[Edge]) -> (usize, usize) {
    if nodes.len() == 1 {
        return (nodes[0], nodes[0]);
    }
    let mut keyed: Vec<(usize, usize)> = nodes
        .iter()
        .map(|&v| (edges.iter().filter(|&&(a, b)| a == v || b == v).count(), v))
        .collect();
    keyed.sort_unstable();
    (keyed[0].1, keyed[1].1)
}

/// A node set with its wiring, as input to inter wiring.
#[derive(Clone, Debug, PartialEq)]
pub struct WiredComponent {
    pub kind: NodeKind,
    pub nodes: Vec<usize>,
    pub edges: Vec<Edge>,
}

impl WiredComponent {
    pub fn ends(&self) -> (usize, usize) {
        wiring_ends(&self.nodes, &self.edges)
    }
}

/// One way to attach a component: one or two new edges.
#[derive(Clone, Debug, PartialEq)]
pub struct Attachment {
    pub edges: Vec<Edge>,
    pub length: f64,
}

/// Attachment options of every non-root component.
///
/// Components of the lowest layer present are roots. Every other component
/// hooks its two ends onto two distinct nodes of strictly lower layers
/// (ordered pairs, so `m(m - 1)` options against `m` hosts when all pairs are
/// in range); a single node takes an unordered host pair, or, for access
/// nodes, a single host. Options are sorted by added length, then host ids.
#[derive(Clone, Debug, PartialEq)]
pub struct InterWirings {
    /// Indices into the input of the non-root components, in input order.
    pub attached: Vec<usize>,
    pub options: Vec<Vec<Attachment>>,
}

fn rank(kind: NodeKind) -> u8 {
    kind.layer()
}

impl InterWirings {
    pub fn new(net: &Network, comps: &[WiredComponent]) -> Self {
        let min_rank = comps.iter().map(|c| rank(c.kind)).min().unwrap_or(0);
        let mut attached = Vec::new();
        let mut options = Vec::new();
        for (ci, c) in comps.iter().enumerate() {
            if rank(c.kind) == min_rank {
                continue;
            }
            let mut hosts: Vec<usize> = comps
                .iter()
                .filter(|o| rank(o.kind) < rank(c.kind))
                .flat_map(|o| o.nodes.iter().copied())
                .collect();
            hosts.sort_unstable();
            attached.push(ci);
            options.push(attach_options(net, c, &hosts));
        }
        InterWirings { attached, options }
    }

    /// Number of joint choices; 0 when some component cannot attach.
    pub fn count(&self) -> Option<u128> {
        self.options
            .iter()
            .try_fold(1u128, |acc, o| acc.checked_mul(o.len() as u128))
    }

    /// Per-component option indices of a joint index, last component least
    /// significant. Components without options take digit 0 and attach
    /// nothing.
    pub fn digits(&self, mut index: u128) -> Vec<usize> {
        let mut d = vec![0usize; self.options.len()];
        for (slot, o) in d.iter_mut().zip(&self.options).rev() {
            let r = (o.len() as u128).max(1);
            *slot = (index % r) as usize;
            index /= r;
        }
        d
    }

    pub fn index_of(&self, digits: &[usize]) -> u128 {
        digits
            .iter()
            .zip(&self.options)
            .fold(0u128, |acc, (&d, o)| acc * (o.len() as u128).max(1) + d as u128)
    }

    /// Product of option counts treating empty lists as one.
    pub fn radix_product(&self) -> Option<u128> {
        self.options
            .iter()
            .try_fold(1u128, |acc, o| acc.checked_mul((o.len() as u128).max(1)))
    }

    pub fn edges(&self, index: u128) -> Vec<Edge> {
        let mut out = Vec::new();
        for (o, d) in self.options.iter().zip(self.digits(index)) {
            if let Some(a) = o.get(d) {
                out.extend_from_slice(&a.edges);
            }
        }
        out
    }

    /// Joint index whose attachments are all present in `topo`.
    pub fn locate(&self, topo: &Topology) -> Option<u128> {
        let mut digits = Vec::with_capacity(self.options.len());
        for o in &self.options {
            if o.is_empty() {
                digits.push(0);
                continue;
            }
            // A single-host option is contained in the pair options sharing
            // its host, so the largest match wins.
            let d = o
                .iter()
                .enumerate()
                .filter(|(_, a)| a.edges.iter().all(|&(x, y)| topo.has_edge(x, y)))
                .max_by(|a, b| a.1.edges.len().cmp(&b.1.edges.len()).then(b.0.cmp(&a.0)))?
                .0;
            digits.push(d);
        }
        Some(self.index_of(&digits))
    }
}

pub(crate) fn attach_options(net: &Network, c: &WiredComponent, hosts: &[usize]) -> Vec<Attachment> {
    let (e1, e2) = c.ends();
    let mut out: Vec<(Vec<usize>, Attachment)> = Vec::new();
    let ok = |a: usize, b: usize| net.feasible(a, b);
    if e1 == e2 {
        for (i, &x) in hosts.iter().enumerate() {
            for &y in &hosts[i + 1..] {
                if ok(e1, x) && ok(e1, y) {
                    let length = net.d(e1, x) + net.d(e1, y);
                    out.push((vec![x, y], Attachment { edges: vec![norm(e1, x), norm(e1, y)], length }));
                }
            }
            if c.kind == NodeKind::J && ok(e1, x) {
                out.push((vec![x], Attachment { edges: vec![norm(e1, x)], length: net.d(e1, x) }));
            }
        }
    } else {
        for &x in hosts {
            for &y in hosts {
                if x != y && ok(e1, x) && ok(e2, y) {
                    let length = net.d(e1, x) + net.d(e2, y);
                    out.push((vec![x, y], Attachment { edges: vec![norm(e1, x), norm(e2, y)], length }));
                }
            }
        }
    }
    out.sort_by(|a, b| match a.1.length.total_cmp(&b.1.length) {
        Ordering::Equal => a.0.cmp(&b.0),
        o => o,
    });
    out.into_iter().map(|(_, a)| a).collect()
}
