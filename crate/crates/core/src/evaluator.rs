//! Topology verification and the load-balancing objective.
//!
//! Checks run in a fixed order and the first failure decides the reason:
//!
//! 1. `Distance`: an edge longer than `d_max`.
//! 2. `HDegree`: an `H` node whose degree among `T`/`H` nodes is not 2.
//! 3. `SelectBestPathFail`: an end pair whose candidates all mix `J`
//!    capacities, or no main path at all.
//! 4. `PathUtilization`: a main path whose intermediate traffic exceeds the
//!    larger end capacity in some hour.
//! 5. `NodeCapExceeded`: a node on a main path with more capacity than both
//!    ends.
//! 6. `PathTooLong`: a main path with more than `path_node_cap` nodes.
//! 7. `IsolatedNode`, then `Disconnected`.
//! 8. `HangNodeCap`: a degree-1 node with more capacity than its neighbor.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::paths::{
    enumerate_primary_main, enumerate_secondary_candidates, find_hang_nodes, merge_sub_paths,
    select_best_path, MainPath, PathDecomposition,
};
use crate::topology::{Instance, Network, Topology, HOURS};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Reason {
    Distance,
    HDegree,
    SelectBestPathFail,
    PathUtilization,
    NodeCapExceeded,
    PathTooLong,
    IsolatedNode,
    Disconnected,
    HangNodeCap,
    None,
}

impl Reason {
    pub const FAILURES: [Reason; 9] = [
        Reason::Distance,
        Reason::HDegree,
        Reason::SelectBestPathFail,
        Reason::PathUtilization,
        Reason::NodeCapExceeded,
        Reason::PathTooLong,
        Reason::IsolatedNode,
        Reason::Disconnected,
        Reason::HangNodeCap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Reason::Distance => "Distance",
            Reason::HDegree => "HDegree",
            Reason::SelectBestPathFail => "SelectBestPathFail",
            Reason::PathUtilization => "PathUtilization",
            Reason::NodeCapExceeded => "NodeCapExceeded",
            Reason::PathTooLong => "PathTooLong",
            Reason::IsolatedNode => "IsolatedNode",
            Reason::Disconnected => "Disconnected",
            Reason::HangNodeCap => "HangNodeCap",
            Reason::None => "None",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    objective: f64,
    reason: Reason,
    decomposition: Option<PathDecomposition>,
}

impl Verdict {
    fn valid(objective: f64, decomposition: PathDecomposition) -> Self {
        Verdict {
            objective,
            reason: Reason::None,
            decomposition: Some(decomposition),
        }
    }

    fn invalid(reason: Reason, penalty: f64) -> Self {
        Verdict {
            objective: penalty,
            reason,
            decomposition: None,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.reason == Reason::None
    }

    /// `f(x)` when valid, the invalid penalty otherwise.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn reason(&self) -> Reason {
        self.reason
    }

    pub fn decomposition(&self) -> Option<&PathDecomposition> {
        self.decomposition.as_ref()
    }
}

/// Per main path utilization series and ratios.
#[derive(Clone, Debug, PartialEq)]
pub struct PathFlowProfile {
    pub head: usize,
    pub tail: usize,
    pub flow: [f64; HOURS],
    pub sratio: f64,
    pub hratio: f64,
}

/// Runs every structural check; `Err` carries the first violated reason.
pub fn check_structure(net: &Network, topo: &Topology) -> core::result::Result<PathDecomposition, Reason> {
    let n = net.n();
    for (i, j) in topo.edges() {
        if net.d(i, j) > net.params().d_max {
            return Err(Reason::Distance);
        }
    }
    let primary = enumerate_primary_main(net, topo).map_err(|_| Reason::HDegree)?;
    let cands = enumerate_secondary_candidates(net, topo, &primary);
    let sel = select_best_path(net, &cands.paths).ok_or(Reason::SelectBestPathFail)?;
    if primary.is_empty() && sel.secondary_main.is_empty() {
        return Err(Reason::SelectBestPathFail);
    }
    let (merged, snumber) = merge_sub_paths(&sel);
    let mut d = PathDecomposition {
        primary_main: primary,
        secondary_main: sel.secondary_main,
        sub_paths: sel.sub_paths,
        attachments: sel.attachments,
        snumber,
        merged,
        hang_nodes: Vec::new(),
    };

    let mains = d.main_paths();
    for p in &mains {
        let cap = end_cap(net, p);
        let inner = p.intermediates();
        for t in 0..HOURS {
            let load: f64 = inner.iter().map(|&v| net.node(v).flow[t]).sum();
            if load > cap {
                return Err(Reason::PathUtilization);
            }
        }
    }
    for p in &mains {
        let cap = end_cap(net, p);
        if p.nodes.iter().any(|&v| net.u_max(v) > cap) {
            return Err(Reason::NodeCapExceeded);
        }
    }
    let cap = net.params().path_node_cap;
    if cands.overlong || mains.iter().any(|p| p.nodes.len() > cap) {
        return Err(Reason::PathTooLong);
    }
    if (0..n).any(|v| topo.degree(v) == 0) {
        return Err(Reason::IsolatedNode);
    }
    if !topo.is_connected() {
        return Err(Reason::Disconnected);
    }
    for v in 0..n {
        if topo.degree(v) == 1 {
            let w = topo.row(v).trailing_zeros() as usize;
            if net.u_max(w) < net.u_max(v) {
                return Err(Reason::HangNodeCap);
            }
        }
    }
    drop(mains);
    d.hang_nodes = find_hang_nodes(topo, &d);
    Ok(d)
}

fn end_cap(net: &Network, p: &MainPath<'_>) -> f64 {
    net.u_max(p.head).max(net.u_max(p.tail))
}

/// Verdict for `topo`: the objective when every check passes, the penalty
/// otherwise.
pub fn verify(instance: &Instance, topo: &Topology) -> Verdict {
    let penalty = instance.params().invalid_penalty;
    if topo.n() != instance.n() {
        return Verdict::invalid(Reason::IsolatedNode, penalty);
    }
    match check_structure(instance.network(), topo) {
        Ok(d) => {
            let f = cal_obj_value(instance, topo, &d);
            Verdict::valid(f, d)
        }
        Err(r) => Verdict::invalid(r, penalty),
    }
}

/// Hourly utilization, sub ratio and hang ratio of every main path.
pub fn path_profiles(net: &Network, topo: &Topology, d: &PathDecomposition) -> Vec<PathFlowProfile> {
    d.main_paths()
        .iter()
        .map(|p| {
            let cap = end_cap(net, p);
            let inner = p.intermediates();
            let mut flow = [0.0; HOURS];
            for (t, f) in flow.iter_mut().enumerate() {
                let mut s = 0.0;
                for &v in &inner {
                    s += net.node(v).flow[t];
                }
                *f = s / cap;
            }
            let count = p.nodes.len() as f64;
            let deg1 = p.nodes.iter().filter(|&&v| topo.degree(v) == 1).count() as f64;
            PathFlowProfile {
                head: p.head,
                tail: p.tail,
                flow,
                sratio: p.snumber as f64 / count,
                hratio: deg1 / count,
            }
        })
        .collect()
}

/// `U(x)` from path profiles against benchmark `b`.
pub fn utility(profiles: &[PathFlowProfile], b: &[f64; HOURS], eps: f64, alpha: f64, beta: f64) -> f64 {
    let p = profiles.len() as f64;
    let mut hits = 0usize;
    for prof in profiles {
        for t in 0..HOURS {
            if libm::fabs(prof.flow[t] / b[t] - 1.0) <= eps {
                hits += 1;
            }
        }
    }
    let term1 = hits as f64 / (HOURS as f64 * p);
    let mut ratios = 0.0;
    for prof in profiles {
        ratios += alpha * prof.sratio + beta * prof.hratio;
    }
    let term2 = -ratios / p;
    let var = hourly_variance(profiles);
    let mut vsum = 0.0;
    let mut vmax = f64::NEG_INFINITY;
    let mut vmin = f64::INFINITY;
    for &v in &var {
        vsum += v;
        vmax = vmax.max(v);
        vmin = vmin.min(v);
    }
    let term3 = -(vsum / HOURS as f64) - vmax - vmin;
    term1 + term2 + term3
}

/// Population variance of path utilization per hour.
pub fn hourly_variance(profiles: &[PathFlowProfile]) -> [f64; HOURS] {
    let p = profiles.len() as f64;
    let mut out = [0.0; HOURS];
    for (t, o) in out.iter_mut().enumerate() {
        let mut mean = 0.0;
        for prof in profiles {
            mean += prof.flow[t];
        }
        mean /= p;
        let mut acc = 0.0;
        for prof in profiles {
            let dlt = prof.flow[t] - mean;
            acc += dlt * dlt;
        }
        *o = acc / p;
    }
    out
}

/// `f(x) = U(x) + gamma * Cost(x, x0)` for a topology that passed the checks.
pub fn cal_obj_value(instance: &Instance, topo: &Topology, d: &PathDecomposition) -> f64 {
    let prm = instance.params();
    let profiles = path_profiles(instance.network(), topo, d);
    let u = utility(&profiles, instance.benchmark(), prm.eps, prm.alpha, prm.beta);
    u + prm.gamma_cost * cost(instance, topo)
}

/// Build and removal cost of `topo` relative to the initial topology.
pub fn cost(instance: &Instance, topo: &Topology) -> f64 {
    cost_between(instance.network(), instance.x0(), topo)
}

pub(crate) fn cost_between(net: &Network, x0: &Topology, topo: &Topology) -> f64 {
    let prm = net.params();
    let diff = x0.xor(topo).expect("node counts match");
    let mut c = 0.0;
    for (i, j) in diff.edges() {
        if x0.has_edge(i, j) {
            c += prm.lambda1;
        } else {
            c += prm.lambda0 * net.d(i, j);
        }
    }
    c
}

/// Mean utilization over the main paths of `x0`, per hour.
pub fn compute_benchmark(net: &Network, x0: &Topology) -> Result<[f64; HOURS]> {
    let d = check_structure(net, x0).map_err(|r| {
        Error::InvalidInstance(format!("initial topology fails verification ({})", r.name()))
    })?;
    let profiles = path_profiles(net, x0, &d);
    let p = profiles.len() as f64;
    let mut b = [0.0; HOURS];
    for (t, bt) in b.iter_mut().enumerate() {
        let mut s = 0.0;
        for prof in &profiles {
            s += prof.flow[t];
        }
        *bt = s / p;
        if !(*bt > 0.0) {
            return Err(Error::InvalidInstance(format!(
                "benchmark utilization at hour {t} is not positive"
            )));
        }
    }
    Ok(b)
}
