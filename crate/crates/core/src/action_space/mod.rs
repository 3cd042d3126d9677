//! Action representations: the full edge-toggle space and the five-step
//! compressed space.
//!
//! A compressed action rebuilds all `H` and `J` wiring from scratch. Every
//! basic component (a connected group of same-kind nodes under the distance
//! bound) is split into sub-components (steps 1 and 2: a composition of its
//! size), its nodes are allocated to them (step 3), each sub-component gets a
//! connected wiring (step 4) and the sub-components are attached to lower
//! layers (step 5): `H` pieces onto `T` nodes, `J` pieces onto `T` or `H`
//! nodes.
//!
//! Flat indices put component 0 first (most significant) and, inside a
//! component, the allowed compositions in rule order followed by the
//! allocation index.

pub mod combinatorics;
pub mod wiring;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::evaluator::check_structure;
use crate::topology::{Network, NodeKind, Topology};
use crate::{Error, Result};

pub use combinatorics::{
    all_compositions, allocation_count, bell, binomial, enumerate_compositions, rank_allocation,
    unrank_allocation,
};
pub use wiring::{wiring_ends, Attachment, Edge, InterWirings, IntraWirings, WiredComponent};

/// Connected group of same-kind nodes in the distance-feasible graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasicComponent {
    pub kind: NodeKind,
    pub nodes: Vec<usize>,
}

/// `H` components by smallest member, then `J` components.
pub fn basic_components(net: &Network) -> Vec<BasicComponent> {
    let g = net.feasibility_graph();
    let mut out = Vec::new();
    for kind in [NodeKind::H, NodeKind::J] {
        for nodes in g.connected_components(|v| net.kind(v) == kind) {
            out.push(BasicComponent { kind, nodes });
        }
    }
    out
}

/// Allowed compositions of one basic component.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentRule {
    pub kind: NodeKind,
    pub nodes: Vec<usize>,
    pub compositions: Vec<Vec<usize>>,
}

impl ComponentRule {
    pub fn unrestricted(c: &BasicComponent) -> Self {
        ComponentRule {
            kind: c.kind,
            nodes: c.nodes.clone(),
            compositions: all_compositions(c.nodes.len()),
        }
    }

    /// Number of (composition, allocation) choices.
    pub fn choices(&self) -> Result<u128> {
        self.compositions.iter().try_fold(0u128, |acc, c| {
            acc.checked_add(allocation_count(c)?)
                .ok_or_else(|| Error::SpaceTooLarge("component choices".into()))
        })
    }

    fn decode(&self, mut index: u128) -> Result<ComponentChoice> {
        for c in &self.compositions {
            let k = allocation_count(c)?;
            if index < k {
                return Ok(ComponentChoice {
                    composition: c.clone(),
                    allocation: index,
                });
            }
            index -= k;
        }
        Err(Error::ActionOutOfRange {
            index,
            size: self.choices()?,
        })
    }

    fn encode(&self, choice: &ComponentChoice) -> Result<u128> {
        let mut offset = 0u128;
        for c in &self.compositions {
            let k = allocation_count(c)?;
            if *c == choice.composition {
                if choice.allocation >= k {
                    return Err(Error::ActionOutOfRange {
                        index: choice.allocation,
                        size: k,
                    });
                }
                return Ok(offset + choice.allocation);
            }
            offset += k;
        }
        Err(Error::InvalidArgument(format!(
            "composition {:?} is not allowed for this component",
            choice.composition
        )))
    }
}

/// Steps 1 to 3 for one basic component.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComponentChoice {
    /// Sub-component sizes, descending; its length is the split count.
    pub composition: Vec<usize>,
    pub allocation: u128,
}

/// A full five-step action.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompressedAction {
    pub components: Vec<ComponentChoice>,
    /// Step 4: wiring index of every sub-component, in component order.
    pub intra: Vec<u64>,
    /// Step 5: joint attachment index.
    pub inter: u128,
}

impl CompressedAction {
    pub fn split_counts(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.composition.len()).collect()
    }
}

/// Steps 4 and 5 fixed per steps 1 to 3 choice.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedWiring {
    pub intra: Vec<u64>,
    pub inter: u128,
}

/// How steps 4 and 5 enter the action space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WiringRule {
    /// One frozen choice per flat index.
    Resolved(Vec<ResolvedWiring>),
    /// Every wiring is a separate action; `counts[c]` actions follow the
    /// steps 1 to 3 choice `c`.
    Free { counts: Vec<u128> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressedSpace {
    pub components: Vec<ComponentRule>,
    pub wiring: WiringRule,
}

/// Edge-toggle space over the candidate edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FullSpace {
    /// Edges selected by index bits, bit 0 first.
    pub edges: Vec<Edge>,
    /// Candidate edges held at their initial state.
    pub frozen: Vec<Edge>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionSpaceSpec {
    Full(FullSpace),
    Compressed(CompressedSpace),
}

/// Largest table of steps 1 to 3 choices a spec may materialize.
pub const MAX_COMBOS: u128 = 1 << 20;
/// Wiring stream positions the resolver tries per coordinate.
pub const RESOLVE_WIDTH: u64 = 16;

impl FullSpace {
    pub fn new(net: &Network, frozen: &[Edge]) -> Result<Self> {
        let cands = net.candidate_edges();
        for e in frozen {
            if !cands.contains(e) {
                return Err(Error::InvalidArgument(format!("frozen edge {e:?} is not a candidate")));
            }
        }
        let edges: Vec<Edge> = cands.into_iter().filter(|e| !frozen.contains(e)).collect();
        if edges.len() > 127 {
            return Err(Error::SpaceTooLarge(format!("{} free edges", edges.len())));
        }
        Ok(FullSpace {
            edges,
            frozen: frozen.to_vec(),
        })
    }

    pub fn flat_size(&self) -> u128 {
        1u128 << self.edges.len()
    }

    /// Topology whose free edges are exactly the set bits of `index`.
    pub fn decode(&self, x0: &Topology, index: u128) -> Result<Topology> {
        if index >= self.flat_size() {
            return Err(Error::ActionOutOfRange {
                index,
                size: self.flat_size(),
            });
        }
        let mut t = Topology::empty(x0.n())?;
        for &(i, j) in &self.frozen {
            if x0.has_edge(i, j) {
                t.add_edge(i, j)?;
            }
        }
        for (b, &(i, j)) in self.edges.iter().enumerate() {
            if index >> b & 1 == 1 {
                t.add_edge(i, j)?;
            }
        }
        Ok(t)
    }

    /// Inverse of [`FullSpace::decode`] for topologies inside the space.
    pub fn encode(&self, x0: &Topology, topo: &Topology) -> Option<u128> {
        let mut index = 0u128;
        let mut used = 0usize;
        for (b, &(i, j)) in self.edges.iter().enumerate() {
            if topo.has_edge(i, j) {
                index |= 1 << b;
                used += 1;
            }
        }
        for &(i, j) in &self.frozen {
            if topo.has_edge(i, j) != x0.has_edge(i, j) {
                return None;
            }
            used += topo.has_edge(i, j) as usize;
        }
        (used == topo.edge_count()).then_some(index)
    }
}

impl CompressedSpace {
    /// Steps 1 to 3 only, with steps 4 and 5 resolved to one structurally
    /// valid choice each (see [`resolve_wiring`]).
    pub fn resolved(net: &Network, components: Vec<ComponentRule>) -> Result<Self> {
        let mut space = CompressedSpace {
            components,
            wiring: WiringRule::Resolved(Vec::new()),
        };
        space.validate(net)?;
        let combos = space.combo_count()?;
        if combos > MAX_COMBOS {
            return Err(Error::SpaceTooLarge(format!("{combos} steps 1-3 choices")));
        }
        let mut table = Vec::with_capacity(combos as usize);
        for c in 0..combos {
            let choices = space.decode_combo(c)?;
            table.push(resolve_wiring(net, &choices, &space.components)?);
        }
        space.wiring = WiringRule::Resolved(table);
        Ok(space)
    }

    /// Every step 4 and 5 option is its own action; refuses spaces over
    /// `cap` actions.
    pub fn free(net: &Network, components: Vec<ComponentRule>, cap: u128) -> Result<Self> {
        let mut space = CompressedSpace {
            components,
            wiring: WiringRule::Free { counts: Vec::new() },
        };
        space.validate(net)?;
        let combos = space.combo_count()?;
        if combos > MAX_COMBOS {
            return Err(Error::SpaceTooLarge(format!("{combos} steps 1-3 choices")));
        }
        let mut counts = Vec::with_capacity(combos as usize);
        let mut total = 0u128;
        for c in 0..combos {
            let choices = space.decode_combo(c)?;
            let k = free_count(net, &space.components, &choices, cap - total.min(cap))?;
            total = total.saturating_add(k);
            if total > cap {
                return Err(Error::Refused { size: total, cap });
            }
            counts.push(k);
        }
        space.wiring = WiringRule::Free { counts };
        Ok(space)
    }

    fn validate(&self, net: &Network) -> Result<()> {
        let mut seen = 0u64;
        for r in &self.components {
            if r.nodes.is_empty() || r.compositions.is_empty() {
                return Err(Error::Config("empty component rule".into()));
            }
            for &v in &r.nodes {
                if v >= net.n() || net.kind(v) != r.kind || r.kind == NodeKind::T {
                    return Err(Error::Config(format!("node {v} does not belong to a {:?} component", r.kind)));
                }
                if seen >> v & 1 == 1 {
                    return Err(Error::Config(format!("node {v} appears in two components")));
                }
                seen |= 1 << v;
            }
            for c in &r.compositions {
                allocation_count(c)?;
                if c.iter().sum::<usize>() != r.nodes.len() {
                    return Err(Error::Config("composition does not cover the component".into()));
                }
            }
        }
        Ok(())
    }

    /// Number of steps 1 to 3 choices.
    pub fn combo_count(&self) -> Result<u128> {
        self.components.iter().try_fold(1u128, |acc, r| {
            acc.checked_mul(r.choices()?)
                .ok_or_else(|| Error::SpaceTooLarge("combination count".into()))
        })
    }

    pub fn flat_size(&self) -> u128 {
        match &self.wiring {
            WiringRule::Resolved(t) => t.len() as u128,
            WiringRule::Free { counts } => counts.iter().sum(),
        }
    }

    pub fn decode_combo(&self, mut index: u128) -> Result<Vec<ComponentChoice>> {
        let size = self.combo_count()?;
        if index >= size {
            return Err(Error::ActionOutOfRange { index, size });
        }
        let mut out = vec![None; self.components.len()];
        for (slot, r) in out.iter_mut().zip(&self.components).rev() {
            let k = r.choices()?;
            *slot = Some(r.decode(index % k)?);
            index /= k;
        }
        Ok(out.into_iter().map(|c| c.expect("filled")).collect())
    }

    pub fn encode_combo(&self, choices: &[ComponentChoice]) -> Result<u128> {
        if choices.len() != self.components.len() {
            return Err(Error::Shape(format!(
                "{} component choices for {} components",
                choices.len(),
                self.components.len()
            )));
        }
        let mut index = 0u128;
        for (r, c) in self.components.iter().zip(choices) {
            index = index * r.choices()? + r.encode(c)?;
        }
        Ok(index)
    }

    pub fn decode(&self, net: &Network, index: u128) -> Result<CompressedAction> {
        match &self.wiring {
            WiringRule::Resolved(table) => {
                let w = table.get(index as usize).filter(|_| index < table.len() as u128).ok_or(
                    Error::ActionOutOfRange {
                        index,
                        size: table.len() as u128,
                    },
                )?;
                Ok(CompressedAction {
                    components: self.decode_combo(index)?,
                    intra: w.intra.clone(),
                    inter: w.inter,
                })
            }
            WiringRule::Free { counts } => {
                let mut rest = index;
                for (c, &k) in counts.iter().enumerate() {
                    if rest < k {
                        let choices = self.decode_combo(c as u128)?;
                        let (intra, inter) = free_nth(net, &self.components, &choices, rest)?;
                        return Ok(CompressedAction {
                            components: choices,
                            intra,
                            inter,
                        });
                    }
                    rest -= k;
                }
                Err(Error::ActionOutOfRange {
                    index,
                    size: self.flat_size(),
                })
            }
        }
    }

    pub fn encode(&self, net: &Network, action: &CompressedAction) -> Result<u128> {
        let combo = self.encode_combo(&action.components)?;
        match &self.wiring {
            WiringRule::Resolved(table) => {
                let w = &table[combo as usize];
                if w.intra != action.intra || w.inter != action.inter {
                    return Err(Error::InvalidArgument(
                        "wiring differs from the one fixed for this choice".into(),
                    ));
                }
                Ok(combo)
            }
            WiringRule::Free { counts } => {
                let offset: u128 = counts[..combo as usize].iter().sum();
                let within = free_rank(net, &self.components, action)?;
                Ok(offset + within)
            }
        }
    }
}

/// Node sets of every sub-component, with kinds, in component order.
pub fn sub_components(rules: &[ComponentRule], choices: &[ComponentChoice]) -> Result<Vec<(NodeKind, Vec<usize>)>> {
    if rules.len() != choices.len() {
        return Err(Error::Shape("one choice per component".into()));
    }
    let mut out = Vec::new();
    for (r, c) in rules.iter().zip(choices) {
        for block in unrank_allocation(&r.nodes, &c.composition, c.allocation)? {
            out.push((r.kind, block));
        }
    }
    Ok(out)
}

fn t_root(net: &Network) -> WiredComponent {
    WiredComponent {
        kind: NodeKind::T,
        nodes: net.nodes_of(NodeKind::T),
        edges: Vec::new(),
    }
}

/// Wired sub-components for the given stream positions; `None` when a
/// position is past the end of its stream. A node set without any connected
/// wiring stays unwired at position 0, which no verifier accepts.
fn wire(net: &Network, subs: &[(NodeKind, Vec<usize>)], intra: &[u64]) -> Option<Vec<WiredComponent>> {
    let mut out = vec![t_root(net)];
    for ((kind, nodes), &i) in subs.iter().zip(intra) {
        let iw = IntraWirings::new(net, nodes);
        let edges = match iw.nth(i) {
            Some(e) => e,
            None if i == 0 && iw.count(0) == Some(0) => Vec::new(),
            None => return None,
        };
        out.push(WiredComponent {
            kind: *kind,
            nodes: nodes.clone(),
            edges,
        });
    }
    Some(out)
}

fn assemble(net: &Network, wired: &[WiredComponent], inter: &InterWirings, index: u128) -> Topology {
    let mut t = Topology::empty(net.n()).expect("node count checked");
    for c in wired {
        for &(a, b) in &c.edges {
            t.add_edge(a, b).expect("valid pair");
        }
    }
    for (a, b) in inter.edges(index) {
        t.add_edge(a, b).expect("valid pair");
    }
    t
}

/// Rebuilds the topology of a compressed action.
pub fn apply_compressed(net: &Network, rules: &[ComponentRule], action: &CompressedAction) -> Result<Topology> {
    let subs = sub_components(rules, &action.components)?;
    if action.intra.len() != subs.len() {
        return Err(Error::Shape(format!(
            "{} wiring indices for {} sub-components",
            action.intra.len(),
            subs.len()
        )));
    }
    let wired = wire(net, &subs, &action.intra).ok_or_else(|| {
        Error::InvalidArgument("wiring index past the end of its option list".into())
    })?;
    let inter = InterWirings::new(net, &wired);
    let size = inter
        .radix_product()
        .ok_or_else(|| Error::SpaceTooLarge("attachment options".into()))?;
    if action.inter >= size {
        return Err(Error::ActionOutOfRange {
            index: action.inter,
            size,
        });
    }
    Ok(assemble(net, &wired, &inter, action.inter))
}

/// Steps 4 and 5 for a steps 1 to 3 choice: the first structurally valid
/// candidate among all-zero positions, then each wiring coordinate moved to
/// positions `1..16` on its own, then each attachment coordinate likewise.
/// Falls back to all zeros when none is valid.
pub fn resolve_wiring(net: &Network, choices: &[ComponentChoice], rules: &[ComponentRule]) -> Result<ResolvedWiring> {
    let subs = sub_components(rules, choices)?;
    let zeros = vec![0u64; subs.len()];
    let try_intra = |intra: &[u64]| -> Option<(Vec<WiredComponent>, InterWirings)> {
        let wired = wire(net, &subs, intra)?;
        let inter = InterWirings::new(net, &wired);
        Some((wired, inter))
    };
    let valid = |wired: &[WiredComponent], inter: &InterWirings, idx: u128| {
        check_structure(net, &assemble(net, wired, inter, idx)).is_ok()
    };
    if let Some((wired, inter)) = try_intra(&zeros) {
        if valid(&wired, &inter, 0) {
            return Ok(ResolvedWiring { intra: zeros, inter: 0 });
        }
    }
    for i in 0..subs.len() {
        for v in 1..RESOLVE_WIDTH {
            let mut intra = zeros.clone();
            intra[i] = v;
            match try_intra(&intra) {
                Some((wired, inter)) => {
                    if valid(&wired, &inter, 0) {
                        return Ok(ResolvedWiring { intra, inter: 0 });
                    }
                }
                None => break,
            }
        }
    }
    if let Some((wired, inter)) = try_intra(&zeros) {
        for j in 0..inter.options.len() {
            for v in 1..(inter.options[j].len() as u64).min(RESOLVE_WIDTH) {
                let mut digits = vec![0usize; inter.options.len()];
                digits[j] = v as usize;
                let idx = inter.index_of(&digits);
                if valid(&wired, &inter, idx) {
                    return Ok(ResolvedWiring { intra: zeros, inter: idx });
                }
            }
        }
    }
    Ok(ResolvedWiring { intra: zeros, inter: 0 })
}

/// Wiring position tuples of `subs` in mixed-radix order, last least
/// significant, visited until `f` returns `false`.
fn for_each_intra(
    net: &Network,
    subs: &[(NodeKind, Vec<usize>)],
    cap: u64,
    mut f: impl FnMut(&[u64], &[WiredComponent]) -> bool,
) -> Result<()> {
    let streams: Vec<Vec<Vec<Edge>>> = subs
        .iter()
        .map(|(_, nodes)| {
            let w = IntraWirings::new(net, nodes);
            match w.count(cap) {
                Some(_) => Ok(w.collect()),
                None => Err(Error::Refused {
                    size: cap as u128 + 1,
                    cap: cap as u128,
                }),
            }
        })
        .collect::<Result<_>>()?;
    if streams.iter().any(Vec::is_empty) {
        return Ok(());
    }
    let mut pos = vec![0u64; subs.len()];
    loop {
        let mut wired = vec![t_root(net)];
        for (k, ((kind, nodes), s)) in subs.iter().zip(&streams).enumerate() {
            wired.push(WiredComponent {
                kind: *kind,
                nodes: nodes.clone(),
                edges: s[pos[k] as usize].clone(),
            });
        }
        if !f(&pos, &wired) {
            return Ok(());
        }
        let mut k = subs.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            pos[k] += 1;
            if (pos[k] as usize) < streams[k].len() {
                break;
            }
            pos[k] = 0;
        }
    }
}

fn free_count(net: &Network, rules: &[ComponentRule], choices: &[ComponentChoice], cap: u128) -> Result<u128> {
    let subs = sub_components(rules, choices)?;
    let mut total = 0u128;
    let mut over = false;
    for_each_intra(net, &subs, cap.min(u64::MAX as u128) as u64, |_, wired| {
        let k = InterWirings::new(net, wired).count().unwrap_or(u128::MAX);
        total = total.saturating_add(k);
        over = total > cap;
        !over
    })?;
    if over {
        return Err(Error::Refused { size: total, cap });
    }
    Ok(total)
}

fn free_nth(
    net: &Network,
    rules: &[ComponentRule],
    choices: &[ComponentChoice],
    mut rest: u128,
) -> Result<(Vec<u64>, u128)> {
    let subs = sub_components(rules, choices)?;
    let mut found = None;
    for_each_intra(net, &subs, u64::MAX, |pos, wired| {
        let k = InterWirings::new(net, wired).count().unwrap_or(0);
        if rest < k {
            found = Some((pos.to_vec(), rest));
            false
        } else {
            rest -= k;
            true
        }
    })?;
    found.ok_or_else(|| Error::InvalidArgument("index past the wiring options".into()))
}

fn free_rank(net: &Network, rules: &[ComponentRule], action: &CompressedAction) -> Result<u128> {
    let subs = sub_components(rules, &action.components)?;
    let mut offset = 0u128;
    let mut found = None;
    for_each_intra(net, &subs, u64::MAX, |pos, wired| {
        let k = InterWirings::new(net, wired).count().unwrap_or(0);
        if pos == action.intra.as_slice() {
            found = Some(k);
            false
        } else {
            offset += k;
            true
        }
    })?;
    match found {
        Some(k) if action.inter < k => Ok(offset + action.inter),
        _ => Err(Error::InvalidArgument("wiring indices outside the option lists".into())),
    }
}

impl ActionSpaceSpec {
    pub fn flat_size(&self) -> u128 {
        match self {
            ActionSpaceSpec::Full(f) => f.flat_size(),
            ActionSpaceSpec::Compressed(c) => c.flat_size(),
        }
    }

    pub fn is_compressed(&self) -> bool {
        matches!(self, ActionSpaceSpec::Compressed(_))
    }

    /// Checks a spec from outside (a file, say) against the network.
    pub fn validate_for(&self, net: &Network) -> Result<()> {
        match self {
            ActionSpaceSpec::Full(f) => {
                let cands = net.candidate_edges();
                let mut all: Vec<Edge> = f.edges.iter().chain(&f.frozen).copied().collect();
                all.sort_unstable();
                if all != cands {
                    return Err(Error::Config("free and frozen edges must partition the candidate edges".into()));
                }
                if f.edges.len() > 127 {
                    return Err(Error::SpaceTooLarge(format!("{} free edges", f.edges.len())));
                }
                Ok(())
            }
            ActionSpaceSpec::Compressed(c) => {
                c.validate(net)?;
                let combos = c.combo_count()?;
                let len = match &c.wiring {
                    WiringRule::Resolved(t) => t.len(),
                    WiringRule::Free { counts } => counts.len(),
                };
                if len as u128 != combos {
                    return Err(Error::Config(format!("{len} wiring entries for {combos} choices")));
                }
                Ok(())
            }
        }
    }

    /// Topology selected by a flat index.
    pub fn topology(&self, net: &Network, x0: &Topology, index: u128) -> Result<Topology> {
        match self {
            ActionSpaceSpec::Full(f) => f.decode(x0, index),
            ActionSpaceSpec::Compressed(c) => {
                let a = c.decode(net, index)?;
                apply_compressed(net, &c.components, &a)
            }
        }
    }

    /// Flat index that decodes to `topo`, if any.
    pub fn locate(&self, net: &Network, x0: &Topology, topo: &Topology) -> Option<u128> {
        match self {
            ActionSpaceSpec::Full(f) => f.encode(x0, topo),
            ActionSpaceSpec::Compressed(c) => {
                let a = encode_topology(net, c, topo)?;
                c.encode(net, &a).ok()
            }
        }
    }
}

/// Recovers the compressed action that rebuilds `topo`, if one exists.
pub fn encode_topology(net: &Network, space: &CompressedSpace, topo: &Topology) -> Option<CompressedAction> {
    let mut choices = Vec::with_capacity(space.components.len());
    for r in &space.components {
        let mut local = Topology::empty(net.n()).ok()?;
        for (i, j) in topo.edges() {
            if r.nodes.binary_search(&i).is_ok() && r.nodes.binary_search(&j).is_ok() {
                local.add_edge(i, j).ok()?;
            }
        }
        let blocks = local.connected_components(|v| r.nodes.binary_search(&v).is_ok());
        let (composition, allocation) = rank_allocation(&r.nodes, &blocks).ok()?;
        r.encode(&ComponentChoice {
            composition: composition.clone(),
            allocation,
        })
        .ok()?;
        choices.push(ComponentChoice {
            composition,
            allocation,
        });
    }
    let action = match &space.wiring {
        WiringRule::Resolved(table) => {
            let combo = space.encode_combo(&choices).ok()?;
            let w = &table[combo as usize];
            CompressedAction {
                components: choices,
                intra: w.intra.clone(),
                inter: w.inter,
            }
        }
        WiringRule::Free { .. } => {
            let subs = sub_components(&space.components, &choices).ok()?;
            let mut intra = Vec::with_capacity(subs.len());
            for (_, nodes) in &subs {
                let edges: Vec<Edge> = topo
                    .edges()
                    .filter(|(i, j)| nodes.binary_search(i).is_ok() && nodes.binary_search(j).is_ok())
                    .collect();
                intra.push(IntraWirings::new(net, nodes).position(&edges, u64::MAX)?);
            }
            let wired = wire(net, &subs, &intra)?;
            let inter = InterWirings::new(net, &wired).locate(topo)?;
            CompressedAction {
                components: choices,
                intra,
                inter,
            }
        }
    };
    let rebuilt = apply_compressed(net, &space.components, &action).ok()?;
    (rebuilt == *topo).then_some(action)
}
