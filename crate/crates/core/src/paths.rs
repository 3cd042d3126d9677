//! Path taxonomy of a topology: primary main paths, secondary main paths,
//! sub paths and hang nodes.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::topology::{bits, Network, NodeKind, Topology};

/// Simple path stored with `head < tail`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    nodes: Vec<usize>,
}

impl Path {
    /// Reverses `nodes` if needed so the smaller end comes first.
    pub fn new(mut nodes: Vec<usize>) -> Self {
        assert!(nodes.len() >= 2, "a path has at least two nodes");
        if nodes[0] > nodes[nodes.len() - 1] {
            nodes.reverse();
        }
        Path { nodes }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn head(&self) -> usize {
        self.nodes[0]
    }

    pub fn tail(&self) -> usize {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn intermediates(&self) -> &[usize] {
        &self.nodes[1..self.nodes.len() - 1]
    }

    pub fn ends(&self) -> (usize, usize) {
        (self.head(), self.tail())
    }

    pub(crate) fn mask(&self) -> u64 {
        self.nodes.iter().fold(0, |m, &v| m | 1 << v)
    }
}

/// Classified paths of a topology.
#[derive(Clone, Debug, PartialEq)]
pub struct PathDecomposition {
    pub primary_main: Vec<Path>,
    /// Selected secondary main paths, before absorbing their sub paths.
    pub secondary_main: Vec<Path>,
    pub sub_paths: Vec<Path>,
    /// `(secondary index, sub path index)`.
    pub attachments: Vec<(usize, usize)>,
    /// Nodes each secondary main gains from its sub paths.
    pub snumber: Vec<usize>,
    /// Node set of each secondary main after merging, ascending.
    pub merged: Vec<Vec<usize>>,
    pub hang_nodes: Vec<usize>,
}

/// One main path as scored: its ends and full node set.
#[derive(Clone, Copy, Debug)]
pub struct MainPath<'a> {
    pub head: usize,
    pub tail: usize,
    /// All nodes including ends; ascending for merged secondaries, path order
    /// for primaries.
    pub nodes: &'a [usize],
    pub snumber: usize,
}

impl MainPath<'_> {
    /// Non-end nodes, ascending.
    pub fn intermediates(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .nodes
            .iter()
            .copied()
            .filter(|&x| x != self.head && x != self.tail)
            .collect();
        v.sort_unstable();
        v
    }
}

impl PathDecomposition {
    /// Primary mains followed by merged secondary mains.
    pub fn main_paths(&self) -> Vec<MainPath<'_>> {
        let mut out: Vec<MainPath<'_>> = self
            .primary_main
            .iter()
            .map(|p| MainPath {
                head: p.head(),
                tail: p.tail(),
                nodes: p.nodes(),
                snumber: 0,
            })
            .collect();
        for (i, p) in self.secondary_main.iter().enumerate() {
            out.push(MainPath {
                head: p.head(),
                tail: p.tail(),
                nodes: &self.merged[i],
                snumber: self.snumber[i],
            });
        }
        out
    }

    pub fn main_count(&self) -> usize {
        self.primary_main.len() + self.secondary_main.len()
    }
}

pub(crate) fn kind_mask(net: &Network, pred: impl Fn(NodeKind) -> bool) -> u64 {
    (0..net.n()).filter(|&v| pred(net.kind(v))).fold(0, |m, v| m | 1 << v)
}

struct Dfs<'a> {
    rows: &'a [u64],
    ends: u64,
    inner: u64,
    max_nodes: usize,
    stack: Vec<usize>,
    out: Vec<Path>,
    overlong: bool,
}

impl Dfs<'_> {
    fn run(&mut self, start: usize) {
        self.stack.clear();
        self.stack.push(start);
        self.extend(start, 1 << start);
    }

    fn extend(&mut self, last: usize, visited: u64) {
        let start = self.stack[0];
        for w in bits(self.rows[last] & !visited) {
            let bit = 1u64 << w;
            if self.ends & bit != 0 {
                if w > start {
                    self.stack.push(w);
                    self.out.push(Path {
                        nodes: self.stack.clone(),
                    });
                    self.stack.pop();
                }
            } else if self.inner & bit != 0 {
                if self.stack.len() + 1 >= self.max_nodes {
                    if !self.overlong && self.can_finish(w, visited | bit) {
                        self.overlong = true;
                    }
                    continue;
                }
                self.stack.push(w);
                self.extend(w, visited | bit);
                self.stack.pop();
            }
        }
    }

    /// Whether an end other than the start is reachable from `from` through
    /// unvisited intermediate nodes.
    fn can_finish(&self, from: usize, visited: u64) -> bool {
        let start_bit = 1u64 << self.stack[0];
        let mut seen = 1u64 << from;
        let mut frontier = seen;
        while frontier != 0 {
            let mut next = 0u64;
            for v in bits(frontier) {
                next |= self.rows[v];
            }
            if next & self.ends & !start_bit & !visited != 0 {
                return true;
            }
            next &= self.inner & !visited & !seen;
            seen |= next;
            frontier = next;
        }
        false
    }
}

/// Failure of the primary enumeration: an `H` node whose degree among
/// `T`/`H` nodes is not 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HDegreeViolation(pub usize);

/// All simple paths between two `T` nodes whose intermediates are `H`, in the
/// subgraph induced by `T` and `H` nodes.
pub fn enumerate_primary_main(net: &Network, topo: &Topology) -> Result<Vec<Path>, HDegreeViolation> {
    let th = kind_mask(net, |k| k != NodeKind::J);
    let t = kind_mask(net, |k| k == NodeKind::T);
    let h = th & !t;
    let rows: Vec<u64> = (0..net.n()).map(|v| topo.row(v) & th).collect();
    for v in bits(h) {
        if rows[v].count_ones() != 2 {
            return Err(HDegreeViolation(v));
        }
    }
    let mut dfs = Dfs {
        rows: &rows,
        ends: t,
        inner: h,
        max_nodes: usize::MAX,
        stack: Vec::new(),
        out: Vec::new(),
        overlong: false,
    };
    for s in bits(t) {
        dfs.run(s);
    }
    let mut out = dfs.out;
    out.sort();
    Ok(out)
}

/// Secondary main path candidates and whether longer candidates were cut off.
#[derive(Clone, Debug, PartialEq)]
pub struct SecondaryCandidates {
    pub paths: Vec<Path>,
    /// A candidate with more than `path_node_cap + 1` nodes exists.
    pub overlong: bool,
}

/// Simple paths with `T`/`H` ends and `J` intermediates in the topology
/// minus every primary main edge, up to `path_node_cap + 1` nodes.
pub fn enumerate_secondary_candidates(
    net: &Network,
    topo: &Topology,
    primary: &[Path],
) -> SecondaryCandidates {
    let ends = kind_mask(net, |k| k != NodeKind::J);
    let inner = !ends & mask_below(net.n());
    let mut rows: Vec<u64> = (0..net.n()).map(|v| topo.row(v)).collect();
    for p in primary {
        for w in p.nodes().windows(2) {
            rows[w[0]] &= !(1 << w[1]);
            rows[w[1]] &= !(1 << w[0]);
        }
    }
    let mut dfs = Dfs {
        rows: &rows,
        ends,
        inner,
        max_nodes: net.params().path_node_cap + 1,
        stack: Vec::new(),
        out: Vec::new(),
        overlong: false,
    };
    for s in bits(ends) {
        dfs.run(s);
    }
    SecondaryCandidates {
        paths: dfs.out,
        overlong: dfs.overlong,
    }
}

pub(crate) fn mask_below(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Result of grouping candidates by their ends.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    /// One per end pair, ordered by `(head, tail)`.
    pub secondary_main: Vec<Path>,
    pub sub_paths: Vec<Path>,
    pub attachments: Vec<(usize, usize)>,
}

/// A path holding two `J` nodes with different capacities cannot be a
/// secondary main.
pub fn mixes_j_capacity(net: &Network, path: &Path) -> bool {
    let mut first: Option<f64> = None;
    for &v in path.nodes() {
        if net.kind(v) == NodeKind::J {
            match first {
                None => first = Some(net.u_max(v)),
                Some(u) if u != net.u_max(v) => return true,
                _ => {}
            }
        }
    }
    false
}

/// Picks one secondary main per end pair: the longest eligible candidate,
/// ties to the lexicographically smallest. Every other candidate of the
/// group becomes a sub path. `None` when a group has no eligible candidate.
pub fn select_best_path(net: &Network, candidates: &[Path]) -> Option<Selection> {
    let mut groups: BTreeMap<(usize, usize), Vec<&Path>> = BTreeMap::new();
    for p in candidates {
        groups.entry(p.ends()).or_default().push(p);
    }
    let mut sel = Selection {
        secondary_main: Vec::new(),
        sub_paths: Vec::new(),
        attachments: Vec::new(),
    };
    for group in groups.values() {
        let best = group
            .iter()
            .enumerate()
            .filter(|(_, p)| !mixes_j_capacity(net, p))
            .min_by(|(_, a), (_, b)| b.len().cmp(&a.len()).then_with(|| a.nodes().cmp(b.nodes())))?
            .0;
        let main_idx = sel.secondary_main.len();
        sel.secondary_main.push(group[best].clone());
        for (i, p) in group.iter().enumerate() {
            if i != best {
                sel.attachments.push((main_idx, sel.sub_paths.len()));
                sel.sub_paths.push((*p).clone());
            }
        }
    }
    Some(sel)
}

/// Absorbs each sub path into its secondary main: merged node sets
/// (ascending) and the number of nodes gained.
pub fn merge_sub_paths(selection: &Selection) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut masks: Vec<u64> = selection.secondary_main.iter().map(Path::mask).collect();
    for &(m, s) in &selection.attachments {
        masks[m] |= selection.sub_paths[s].mask();
    }
    let merged: Vec<Vec<usize>> = masks.iter().map(|&m| bits(m).collect()).collect();
    let snumber = merged
        .iter()
        .zip(&selection.secondary_main)
        .map(|(m, p)| m.len() - p.len())
        .collect();
    (merged, snumber)
}

/// Degree-1 nodes off every path whose neighbor is an intermediate node of a
/// primary, secondary or sub path.
pub fn find_hang_nodes(topo: &Topology, d: &PathDecomposition) -> Vec<usize> {
    let mut inner = 0u64;
    let mut on_path = 0u64;
    for p in d.primary_main.iter().chain(&d.secondary_main).chain(&d.sub_paths) {
        on_path |= p.mask();
        for &v in p.intermediates() {
            inner |= 1 << v;
        }
    }
    (0..topo.n())
        .filter(|&v| on_path >> v & 1 == 0 && topo.degree(v) == 1 && inner & topo.row(v) != 0)
        .collect()
}
