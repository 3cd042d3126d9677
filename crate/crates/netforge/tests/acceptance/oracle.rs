//! Verifier and objective transcribed step by step on adjacency matrices,
//! sharing nothing with the library beyond the instance accessors.

use std::collections::BTreeMap;

use netforge_core::{Instance, NodeKind, Reason, Topology, HOURS};

struct MainPath {
    head: usize,
    tail: usize,
    nodes: Vec<usize>,
    snumber: usize,
}

fn adjacency(x: &Topology) -> Vec<Vec<bool>> {
    let n = x.n();
    let mut a = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = i != j && x.has_edge(i, j);
        }
    }
    a
}

/// Every simple path from `start` to an end node larger than `start`,
/// passing only through `inner` nodes.
fn paths_from(a: &[Vec<bool>], start: usize, is_end: &dyn Fn(usize) -> bool, is_inner: &dyn Fn(usize) -> bool) -> Vec<Vec<usize>> {
    fn walk(
        a: &[Vec<bool>],
        path: &mut Vec<usize>,
        is_end: &dyn Fn(usize) -> bool,
        is_inner: &dyn Fn(usize) -> bool,
        out: &mut Vec<Vec<usize>>,
    ) {
        let last = *path.last().unwrap();
        for w in 0..a.len() {
            if !a[last][w] || path.contains(&w) {
                continue;
            }
            if is_end(w) {
                if w > path[0] {
                    let mut p = path.clone();
                    p.push(w);
                    out.push(p);
                }
            } else if is_inner(w) {
                path.push(w);
                walk(a, path, is_end, is_inner, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(a, &mut vec![start], is_end, is_inner, &mut out);
    out
}

fn decompose(inst: &Instance, x: &Topology) -> Result<Vec<MainPath>, Reason> {
    let n = inst.n();
    let nodes = inst.nodes();
    let prm = inst.params();
    let kind = |v: usize| nodes[v].kind;
    let u = |v: usize| nodes[v].u_max;
    let a = adjacency(x);

    // 1. distance
    for i in 0..n {
        for j in i + 1..n {
            if a[i][j] && inst.dist(i, j).unwrap() > prm.d_max {
                return Err(Reason::Distance);
            }
        }
    }

    // 2. every H node has exactly two T/H neighbours
    for v in 0..n {
        if kind(v) == NodeKind::H {
            let th = (0..n).filter(|&w| a[v][w] && kind(w) != NodeKind::J).count();
            if th != 2 {
                return Err(Reason::HDegree);
            }
        }
    }

    // 3. primary main paths: T ... T through H nodes
    let mut primary = Vec::new();
    for s in 0..n {
        if kind(s) == NodeKind::T {
            primary.extend(paths_from(&a, s, &|w| kind(w) == NodeKind::T, &|w| kind(w) == NodeKind::H));
        }
    }
    primary.sort();

    // 4. secondary candidates on the graph without primary edges
    let mut b = a.clone();
    for p in &primary {
        for w in p.windows(2) {
            b[w[0]][w[1]] = false;
            b[w[1]][w[0]] = false;
        }
    }
    let mut candidates = Vec::new();
    for s in 0..n {
        if kind(s) != NodeKind::J {
            candidates.extend(paths_from(&b, s, &|w| kind(w) != NodeKind::J, &|w| kind(w) == NodeKind::J));
        }
    }
    let overlong = candidates.iter().any(|p| p.len() > prm.path_node_cap + 1);
    candidates.retain(|p| p.len() <= prm.path_node_cap + 1);

    // 5. one secondary main per end pair, the rest are its sub paths
    let mut groups: BTreeMap<(usize, usize), Vec<Vec<usize>>> = BTreeMap::new();
    for p in candidates {
        groups.entry((p[0], p[p.len() - 1])).or_default().push(p);
    }
    let mut mains: Vec<MainPath> = primary
        .iter()
        .map(|p| MainPath {
            head: p[0],
            tail: p[p.len() - 1],
            nodes: p.clone(),
            snumber: 0,
        })
        .collect();
    for ((head, tail), group) in &groups {
        let mut best: Option<&Vec<usize>> = None;
        for p in group {
            let caps: Vec<f64> = p.iter().filter(|&&v| kind(v) == NodeKind::J).map(|&v| u(v)).collect();
            if caps.iter().any(|&c| c != caps[0]) {
                continue;
            }
            best = match best {
                None => Some(p),
                Some(q) if p.len() > q.len() || (p.len() == q.len() && p < q) => Some(p),
                keep => keep,
            };
        }
        let Some(main) = best else {
            return Err(Reason::SelectBestPathFail);
        };
        // 6. merge
        let mut set: Vec<usize> = Vec::new();
        for p in group {
            for &v in p {
                if !set.contains(&v) {
                    set.push(v);
                }
            }
        }
        set.sort();
        mains.push(MainPath {
            head: *head,
            tail: *tail,
            snumber: set.len() - main.len(),
            nodes: set,
        });
    }
    if mains.is_empty() {
        return Err(Reason::SelectBestPathFail);
    }

    // 7. capacity, node count and formation checks
    for m in &mains {
        let cap = u(m.head).max(u(m.tail));
        for t in 0..HOURS {
            let mut load = 0.0;
            for v in interior(m) {
                load += nodes[v].flow[t];
            }
            if load > cap {
                return Err(Reason::PathUtilization);
            }
        }
    }
    for m in &mains {
        let cap = u(m.head).max(u(m.tail));
        if m.nodes.iter().any(|&v| u(v) > cap) {
            return Err(Reason::NodeCapExceeded);
        }
    }
    if overlong || mains.iter().any(|m| m.nodes.len() > prm.path_node_cap) {
        return Err(Reason::PathTooLong);
    }
    let degree = |v: usize| (0..n).filter(|&w| a[v][w]).count();
    if (0..n).any(|v| degree(v) == 0) {
        return Err(Reason::IsolatedNode);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for w in 0..n {
            if a[v][w] && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    if seen.contains(&false) {
        return Err(Reason::Disconnected);
    }
    for v in 0..n {
        if degree(v) == 1 {
            let w = (0..n).find(|&w| a[v][w]).unwrap();
            if u(w) < u(v) {
                return Err(Reason::HangNodeCap);
            }
        }
    }
    Ok(mains)
}

fn interior(m: &MainPath) -> Vec<usize> {
    let mut v: Vec<usize> = m.nodes.iter().copied().filter(|&x| x != m.head && x != m.tail).collect();
    v.sort();
    v
}

fn flows(inst: &Instance, m: &MainPath) -> [f64; HOURS] {
    let nodes = inst.nodes();
    let cap = nodes[m.head].u_max.max(nodes[m.tail].u_max);
    let mut f = [0.0; HOURS];
    for t in 0..HOURS {
        let mut s = 0.0;
        for v in interior(m) {
            s += nodes[v].flow[t];
        }
        f[t] = s / cap;
    }
    f
}

/// Mean main path utilization of the initial topology.
pub fn benchmark(inst: &Instance) -> [f64; HOURS] {
    let mains = decompose(inst, inst.x0()).expect("initial topology is valid");
    let mut b = [0.0; HOURS];
    for t in 0..HOURS {
        let mut s = 0.0;
        for m in &mains {
            s += flows(inst, m)[t];
        }
        b[t] = s / mains.len() as f64;
    }
    b
}

/// First failed check (or `Reason::None`) and the objective.
pub fn verify(inst: &Instance, x: &Topology) -> (Reason, f64) {
    let prm = inst.params();
    let mains = match decompose(inst, x) {
        Ok(m) => m,
        Err(r) => return (r, prm.invalid_penalty),
    };
    let n = inst.n();
    let b = benchmark(inst);
    let p = mains.len() as f64;
    let f: Vec<[f64; HOURS]> = mains.iter().map(|m| flows(inst, m)).collect();

    let mut hits = 0.0;
    for fp in &f {
        for t in 0..HOURS {
            if (fp[t] / b[t] - 1.0).abs() <= prm.eps {
                hits += 1.0;
            }
        }
    }
    let term1 = hits / (HOURS as f64 * p);

    let mut ratios = 0.0;
    for m in &mains {
        let count = m.nodes.len() as f64;
        let hang = m.nodes.iter().filter(|&&v| x.degree(v) == 1).count() as f64;
        ratios += prm.alpha * (m.snumber as f64 / count) + prm.beta * (hang / count);
    }
    let term2 = -ratios / p;

    let mut var = [0.0; HOURS];
    for t in 0..HOURS {
        let mut mean = 0.0;
        for fp in &f {
            mean += fp[t];
        }
        mean /= p;
        let mut acc = 0.0;
        for fp in &f {
            acc += (fp[t] - mean) * (fp[t] - mean);
        }
        var[t] = acc / p;
    }
    let mut vsum = 0.0;
    for v in var {
        vsum += v;
    }
    let vmax = var.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let vmin = var.iter().copied().fold(f64::INFINITY, f64::min);
    let term3 = -(vsum / HOURS as f64) - vmax - vmin;

    let x0 = inst.x0();
    let mut cost = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let (old, new) = (x0.has_edge(i, j), x.has_edge(i, j));
            if old && !new {
                cost += prm.lambda1;
            } else if new && !old {
                cost += prm.lambda0 * inst.dist(i, j).unwrap();
            }
        }
    }
    (Reason::None, term1 + term2 + term3 + prm.gamma_cost * cost)
}
