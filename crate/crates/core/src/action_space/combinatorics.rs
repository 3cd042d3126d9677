//! Integer partitions, binomials and ranked set partitions with fixed block
//! sizes.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// `C(n, k)`, `None` on overflow.
pub fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(c)
}

/// Multisets of `k` positive parts summing to `n`, each descending, listed
/// in descending lexicographic order.
pub fn enumerate_compositions(n: usize, k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(alloc::format!(
            "cannot split {n} nodes into {k} parts"
        )));
    }
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    parts(n, k, n, &mut cur, &mut out);
    Ok(out)
}

fn parts(rest: usize, k: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if k == 0 {
        if rest == 0 {
            out.push(cur.clone());
        }
        return;
    }
    // The remaining k parts each need at least 1 and at most `max`.
    let hi = max.min(rest - (k - 1));
    let lo = rest.div_ceil(k);
    for p in (lo..=hi).rev() {
        cur.push(p);
        parts(rest - p, k - 1, p, cur, out);
        cur.pop();
    }
}

/// Every composition of `n` in split-count order, `k = 1..=n`.
pub fn all_compositions(n: usize) -> Vec<Vec<usize>> {
    (1..=n)
        .flat_map(|k| enumerate_compositions(n, k).expect("1 <= k <= n"))
        .collect()
}

/// Consecutive runs of equal sizes: `(size, repeat)`.
fn groups(composition: &[usize]) -> Vec<(usize, usize)> {
    let mut g: Vec<(usize, usize)> = Vec::new();
    for &s in composition {
        match g.last_mut() {
            Some((size, rep)) if *size == s => *rep += 1,
            _ => g.push((s, 1)),
        }
    }
    g
}

fn check_composition(n: usize, composition: &[usize]) -> Result<()> {
    let descending = composition.windows(2).all(|w| w[0] >= w[1]);
    if composition.is_empty() || composition.contains(&0) || !descending {
        return Err(Error::InvalidArgument(
            "composition must be nonempty, positive and descending".into(),
        ));
    }
    if composition.iter().sum::<usize>() != n {
        return Err(Error::InvalidArgument(alloc::format!(
            "composition sums to {}, expected {n}",
            composition.iter().sum::<usize>()
        )));
    }
    Ok(())
}

/// Digit radices of the allocation index: for each run of `g` equal blocks
/// of size `s`, first the choice of the run's `g*s` nodes, then each block
/// takes the smallest unassigned node of the run plus `s - 1` others.
fn radices(n: usize, composition: &[usize]) -> Option<Vec<(u128, Choice)>> {
    let mut out = Vec::new();
    let mut rest = n;
    for (s, g) in groups(composition) {
        if g == 1 {
            out.push((binomial(rest, s)?, Choice::Block(s)));
        } else {
            out.push((binomial(rest, g * s)?, Choice::Run(g * s)));
            let mut pool = g * s;
            for _ in 0..g {
                out.push((binomial(pool - 1, s - 1)?, Choice::Anchored(s)));
                pool -= s;
            }
        }
        rest -= g * s;
    }
    Some(out)
}

#[derive(Clone, Copy, Debug)]
enum Choice {
    /// A lone block of this size from the unassigned nodes.
    Block(usize),
    /// The node set of a run of equal blocks.
    Run(usize),
    /// Take the pool minimum plus this many minus one.
    Anchored(usize),
}

/// Number of ways to split `n` labeled nodes into unlabeled blocks of the
/// given sizes.
pub fn allocation_count(composition: &[usize]) -> Result<u128> {
    let n = composition.iter().sum();
    check_composition(n, composition)?;
    let r = radices(n, composition).ok_or_else(|| Error::SpaceTooLarge("allocation count".into()))?;
    r.iter()
        .try_fold(1u128, |acc, (x, _)| acc.checked_mul(*x))
        .ok_or_else(|| Error::SpaceTooLarge("allocation count".into()))
}

/// Bell number: set partitions of `n` labeled items.
pub fn bell(n: usize) -> u128 {
    all_compositions(n)
        .iter()
        .map(|c| allocation_count(c).expect("valid composition"))
        .sum()
}

/// The `index`-th lexicographic `k`-subset of `0..m`.
pub fn unrank_combination(m: usize, k: usize, mut index: u128) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let left = k - slot - 1;
        loop {
            let c = binomial(m - next - 1, left).expect("fits");
            if index < c {
                break;
            }
            index -= c;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// Inverse of [`unrank_combination`]; `subset` ascending.
pub fn rank_combination(m: usize, subset: &[usize]) -> u128 {
    let k = subset.len();
    let mut index = 0u128;
    let mut next = 0;
    for (slot, &e) in subset.iter().enumerate() {
        let left = k - slot - 1;
        while next < e {
            index += binomial(m - next - 1, left).expect("fits");
            next += 1;
        }
        next = e + 1;
    }
    index
}

/// Blocks of the `index`-th allocation of `nodes` (ascending) into the
/// composition: blocks in composition order, equal-size blocks by smallest
/// member, each block ascending.
pub fn unrank_allocation(nodes: &[usize], composition: &[usize], index: u128) -> Result<Vec<Vec<usize>>> {
    check_composition(nodes.len(), composition)?;
    let r = radices(nodes.len(), composition).ok_or_else(|| Error::SpaceTooLarge("allocation".into()))?;
    let total = r.iter().try_fold(1u128, |a, (x, _)| a.checked_mul(*x));
    match total {
        Some(t) if index < t => {}
        Some(t) => return Err(Error::ActionOutOfRange { index, size: t }),
        None => return Err(Error::SpaceTooLarge("allocation".into())),
    }
    let mut digits = vec![0u128; r.len()];
    let mut rem = index;
    for (d, (x, _)) in digits.iter_mut().zip(&r).rev() {
        *d = rem % x;
        rem /= x;
    }
    let mut rest: Vec<usize> = nodes.to_vec();
    let mut pool: Vec<usize> = Vec::new();
    let mut blocks = Vec::with_capacity(composition.len());
    for ((_, choice), &d) in r.iter().zip(&digits) {
        match *choice {
            Choice::Block(k) | Choice::Run(k) => {
                let pick = unrank_combination(rest.len(), k, d);
                let chosen: Vec<usize> = pick.iter().map(|&i| rest[i]).collect();
                rest = take_out(&rest, &pick);
                if matches!(choice, Choice::Block(_)) {
                    blocks.push(chosen);
                } else {
                    pool = chosen;
                }
            }
            Choice::Anchored(s) => {
                let anchor = pool[0];
                let others = &pool[1..];
                let pick = unrank_combination(others.len(), s - 1, d);
                let mut block = vec![anchor];
                block.extend(pick.iter().map(|&i| others[i]));
                pool = take_out(others, &pick);
                blocks.push(block);
            }
        }
    }
    Ok(blocks)
}

fn take_out(from: &[usize], pick: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(from.len() - pick.len());
    let mut p = pick.iter().peekable();
    for (i, &v) in from.iter().enumerate() {
        if p.peek() == Some(&&i) {
            p.next();
        } else {
            out.push(v);
        }
    }
    out
}

/// Inverse of [`unrank_allocation`]: the composition and index of a set
/// partition of `nodes` given as arbitrary blocks.
pub fn rank_allocation(nodes: &[usize], blocks: &[Vec<usize>]) -> Result<(Vec<usize>, u128)> {
    let mut bl: Vec<Vec<usize>> = blocks
        .iter()
        .map(|b| {
            let mut b = b.clone();
            b.sort_unstable();
            b
        })
        .collect();
    bl.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    let mut all: Vec<usize> = bl.iter().flatten().copied().collect();
    all.sort_unstable();
    if all != nodes || bl.iter().any(Vec::is_empty) {
        return Err(Error::InvalidArgument("blocks do not partition the nodes".into()));
    }
    let composition: Vec<usize> = bl.iter().map(Vec::len).collect();
    let r = radices(nodes.len(), &composition).ok_or_else(|| Error::SpaceTooLarge("allocation".into()))?;
    let mut digits = Vec::with_capacity(r.len());
    let mut rest: Vec<usize> = nodes.to_vec();
    let mut bi = 0;
    for (s, g) in groups(&composition) {
        if g == 1 {
            let pos = positions(&rest, &bl[bi]);
            digits.push(rank_combination(rest.len(), &pos));
            rest = take_out(&rest, &pos);
            bi += 1;
        } else {
            let mut union: Vec<usize> = bl[bi..bi + g].iter().flatten().copied().collect();
            union.sort_unstable();
            let pos = positions(&rest, &union);
            digits.push(rank_combination(rest.len(), &pos));
            rest = take_out(&rest, &pos);
            let mut pool = union;
            for b in &bl[bi..bi + g] {
                let others = &pool[1..];
                let pos = positions(others, &b[1..]);
                debug_assert_eq!(b.len(), s);
                digits.push(rank_combination(others.len(), &pos));
                pool = take_out(others, &pos);
            }
            bi += g;
        }
    }
    let mut index = 0u128;
    for ((x, _), d) in r.iter().zip(&digits) {
        index = index * x + d;
    }
    Ok((composition, index))
}

fn positions(from: &[usize], subset: &[usize]) -> Vec<usize> {
    subset
        .iter()
        .map(|v| from.binary_search(v).expect("subset of pool"))
        .collect()
}
