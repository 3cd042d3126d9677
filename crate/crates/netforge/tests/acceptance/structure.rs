use std::collections::BTreeMap;

use netforge::generator::{generate, Generated, GeneratorProfile, Restriction};
use netforge_core::action_space::{
    allocation_count, enumerate_compositions, ActionSpaceSpec, ComponentChoice, CompressedAction, CompressedSpace,
    FullSpace, IntraWirings, WiringRule,
};
use netforge_core::rng::seeded;
use netforge_core::{verify, Instance, Network, NodeKind, NodeRecord, Params, Reason, Topology, HOURS};
use rand::Rng;

use crate::{oracle, Outcome};

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

pub fn oracle_equivalence() -> Outcome {
    let mut checked = 0usize;
    let mut reasons: BTreeMap<Reason, usize> = BTreeMap::new();
    let mut failures = Vec::new();
    for seed in 0..50 {
        let g = generate(&GeneratorProfile::tiny(seed), seed).expect("tiny instance");
        let inst = &g.instance;
        if inst.n() > 5 || inst.candidate_edges().len() > 10 {
            failures.push(format!("seed {seed}: instance too large"));
            continue;
        }
        let b = oracle::benchmark(inst);
        if b.iter().zip(inst.benchmark()).any(|(x, y)| x.to_bits() != y.to_bits()) {
            failures.push(format!("seed {seed}: benchmark differs"));
        }
        let pairs = all_pairs(inst.n());
        for mask in 0u32..1 << pairs.len() {
            let edges: Vec<_> = pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &e)| e).collect();
            let x = Topology::from_edges(inst.n(), &edges).unwrap();
            let v = verify(inst, &x);
            let (r, f) = oracle::verify(inst, &x);
            checked += 1;
            *reasons.entry(r).or_default() += 1;
            if v.reason() != r || v.objective().to_bits() != f.to_bits() {
                failures.push(format!(
                    "seed {seed} edges {edges:?}: verify {:?} {} oracle {r:?} {f}",
                    v.reason(),
                    v.objective()
                ));
            }
        }
    }
    let valid = reasons.get(&Reason::None).copied().unwrap_or(0);
    let mut detail = format!("{checked} topologies, {valid} valid, {} mismatches", failures.len());
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; first: {f}"));
    }
    Outcome::check(failures.is_empty() && valid > 0, detail)
}

fn mutual_network(k: usize) -> Network {
    let nodes = (0..k)
        .map(|id| NodeRecord {
            id,
            kind: NodeKind::J,
            u_max: 1.0,
            pos: (10.0 * id as f64, 0.0),
            flow: [0.1; HOURS],
        })
        .collect();
    Network::new(nodes, Params::default()).unwrap()
}

pub fn counts() -> Outcome {
    let split = enumerate_compositions(6, 2).unwrap().len();
    let alloc_42 = allocation_count(&[4, 2]).unwrap();
    let wirings = IntraWirings::new(&mutual_network(4), &[0, 1, 2, 3]).count(1 << 20);
    let alloc_4444 = allocation_count(&[4, 4, 4, 4]).unwrap();
    // 16! / (4!^4 * 4!) computed directly.
    let factorial = |n: u128| (1..=n).product::<u128>();
    let formula = factorial(16) / (factorial(4).pow(4) * factorial(4));
    let pass = split == 3 && alloc_42 == 15 && wirings == Some(38) && alloc_4444 == 2_627_625 && formula == 2_627_625;
    Outcome::check(
        pass,
        format!("compositions(6,2) {split}, (4,2) {alloc_42}, wirings(4) {wirings:?}, (4,4,4,4) {alloc_4444}"),
    )
}

fn specs() -> Vec<(String, Generated, ActionSpaceSpec)> {
    let mut out = Vec::new();
    for seed in 0..3 {
        let g = generate(&GeneratorProfile::small(), seed).unwrap();
        let inst = &g.instance;
        out.push((format!("small {seed} compressed"), g.clone(), g.compressed().unwrap()));
        let free = CompressedSpace::free(inst, g.rules.clone(), 1 << 20).unwrap();
        out.push((format!("small {seed} free wiring"), g.clone(), ActionSpaceSpec::Compressed(free)));
        let cands = inst.candidate_edges();
        let frozen = &cands[13.min(cands.len())..];
        out.push((
            format!("small {seed} full, 13 free edges"),
            g.clone(),
            ActionSpaceSpec::Full(FullSpace::new(inst, frozen).unwrap()),
        ));
        out.push((format!("small {seed} full"), g.clone(), g.full().unwrap()));
    }
    for seed in 0..2 {
        let g = generate(&GeneratorProfile::large(), seed).unwrap();
        for r in [Restriction::Small, Restriction::Large] {
            let s = CompressedSpace::resolved(&g.instance, r.rules(&g.instance)).unwrap();
            out.push((format!("large {seed} {r:?}"), g.clone(), ActionSpaceSpec::Compressed(s)));
        }
    }
    for seed in 0..10 {
        let g = generate(&GeneratorProfile::tiny(seed), seed).unwrap();
        out.push((format!("tiny {seed} compressed"), g.clone(), g.compressed().unwrap()));
        out.push((format!("tiny {seed} full"), g.clone(), g.full().unwrap()));
    }
    out
}

fn random_choices(space: &CompressedSpace, r: &mut impl Rng) -> Vec<ComponentChoice> {
    space
        .components
        .iter()
        .map(|rule| {
            let composition = rule.compositions[r.random_range(0..rule.compositions.len())].clone();
            let allocation = r.random_range(0..allocation_count(&composition).unwrap());
            ComponentChoice {
                composition,
                allocation,
            }
        })
        .collect()
}

pub fn codec() -> Outcome {
    let mut r = seeded(3);
    let mut failures = Vec::new();
    let mut exhaustive = 0usize;
    let mut indices = 0u128;
    let all = specs();
    for (label, g, spec) in &all {
        let inst = &g.instance;
        let size = spec.flat_size();
        if size <= 10_000 {
            exhaustive += 1;
            indices += size;
            for i in 0..size {
                let back = match spec {
                    ActionSpaceSpec::Full(f) => f.encode(inst.x0(), &f.decode(inst.x0(), i).unwrap()),
                    ActionSpaceSpec::Compressed(c) => c.encode(inst, &c.decode(inst, i).unwrap()).ok(),
                };
                if back != Some(i) {
                    failures.push(format!("{label}: index {i} comes back as {back:?}"));
                    break;
                }
            }
        }
        for _ in 0..1000 {
            let ok = match spec {
                ActionSpaceSpec::Full(f) => {
                    let mut t = inst.x0().clone();
                    for &(i, j) in &f.edges {
                        if r.random::<bool>() {
                            t.add_edge(i, j).unwrap();
                        } else {
                            t.remove_edge(i, j).unwrap();
                        }
                    }
                    f.encode(inst.x0(), &t).map(|k| f.decode(inst.x0(), k).unwrap()) == Some(t)
                }
                ActionSpaceSpec::Compressed(c) => {
                    let choices = random_choices(c, &mut r);
                    let combo = c.encode_combo(&choices).unwrap();
                    let action = match &c.wiring {
                        WiringRule::Resolved(table) => Some(CompressedAction {
                            components: choices.clone(),
                            intra: table[combo as usize].intra.clone(),
                            inter: table[combo as usize].inter,
                        }),
                        WiringRule::Free { counts } => {
                            let offset: u128 = counts[..combo as usize].iter().sum();
                            (counts[combo as usize] > 0)
                                .then(|| c.decode(inst, offset + r.random_range(0..counts[combo as usize])).unwrap())
                        }
                    };
                    c.decode_combo(combo).unwrap() == choices
                        && action.is_none_or(|a| c.decode(inst, c.encode(inst, &a).unwrap()).unwrap() == a)
                }
            };
            if !ok {
                failures.push(format!("{label}: sampled action does not round trip"));
                break;
            }
        }
    }
    let mut detail = format!(
        "{} specs, {exhaustive} enumerated over {indices} indices, 1000 samples each, {} failures",
        all.len(),
        failures.len()
    );
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; first: {f}"));
    }
    Outcome::check(failures.is_empty(), detail)
}

/// Instance with an access node that outranks the aggregation nodes, one
/// that outloads them, and an access chain running on past its exit, so the
/// capacity and length failures are reachable.
fn crafted() -> Instance {
    let mut nodes = Vec::new();
    let mut add = |kind, u_max, pos: (f64, f64), flow: f64| {
        let id = nodes.len();
        nodes.push(NodeRecord {
            id,
            kind,
            u_max,
            pos,
            flow: [flow; HOURS],
        });
    };
    add(NodeKind::T, 1000.0, (0.0, 0.0), 0.0);
    add(NodeKind::T, 1000.0, (400.0, 0.0), 0.0);
    add(NodeKind::H, 100.0, (100.0, 100.0), 10.0);
    add(NodeKind::H, 100.0, (300.0, 100.0), 10.0);
    add(NodeKind::J, 500.0, (200.0, -100.0), 1.0);
    for k in 0..16 {
        add(NodeKind::J, 10.0, (20.0 * k as f64, -300.0), 1.0);
    }
    add(NodeKind::J, 10.0, (50.0, 50.0), 500.0);
    let net = Network::new(nodes, Params::default()).unwrap();
    let mut edges = vec![(0, 2), (2, 3), (3, 1), (0, 4), (4, 3), (0, 5)];
    for k in 5..20 {
        edges.push((k, k + 1));
    }
    edges.extend([(17, 1), (0, 21), (21, 2)]);
    let x0 = Topology::from_edges(22, &edges).unwrap();
    Instance::new(net, x0).unwrap()
}

pub fn penalty_floor() -> Outcome {
    let mut pool: Vec<Instance> = Vec::new();
    for seed in 0..4 {
        pool.push(generate(&GeneratorProfile::small(), seed).unwrap().instance);
        pool.push(generate(&GeneratorProfile::tiny(seed), seed).unwrap().instance);
    }
    pool.push(generate(&GeneratorProfile::large(), 0).unwrap().instance);
    pool.push(crafted());
    let mut r = seeded(10);
    let mut seen: BTreeMap<Reason, usize> = BTreeMap::new();
    let mut failures = Vec::new();
    let mut total = 0;
    let mut draws = 0;
    while total < 1000 && draws < 1_000_000 {
        draws += 1;
        let inst = &pool[r.random_range(0..pool.len())];
        let n = inst.n();
        let cands = inst.candidate_edges();
        let mut x = inst.x0().clone();
        for _ in 0..r.random_range(1..=4) {
            let (i, j) = if r.random::<f64>() < 0.9 {
                cands[r.random_range(0..cands.len())]
            } else {
                let i = r.random_range(0..n);
                let j = (i + r.random_range(1..n)) % n;
                (i.min(j), i.max(j))
            };
            if x.has_edge(i, j) {
                x.remove_edge(i, j).unwrap();
            } else {
                x.add_edge(i, j).unwrap();
            }
        }
        let (expected, _) = oracle::verify(inst, &x);
        if expected == Reason::None {
            continue;
        }
        // Keep the rarer classes from being crowded out.
        let count = seen.get(&expected).copied().unwrap_or(0);
        if count >= 200 {
            continue;
        }
        let v = verify(inst, &x);
        if v.is_valid() || v.objective() != -10.0 || v.reason() != expected {
            failures.push(format!("{:?} {} expected {expected:?}", v.reason(), v.objective()));
        }
        *seen.entry(expected).or_default() += 1;
        total += 1;
    }
    let missing: Vec<Reason> = Reason::FAILURES.iter().copied().filter(|r| !seen.contains_key(r)).collect();
    let mut detail = format!("{total} invalid topologies, classes {seen:?}, {} failures", failures.len());
    if !missing.is_empty() {
        detail.push_str(&format!(", missing {missing:?}"));
    }
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; first: {f}"));
    }
    Outcome::check(total == 1000 && missing.is_empty() && failures.is_empty(), detail)
}
