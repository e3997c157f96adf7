//! Independent oracles shared by the integration tests. They recompute
//! properties from first principles without going through the library's
//! own checkers.

#![allow(dead_code)]

use std::collections::HashSet;

use fraisse_core::groups::{FinGroup, Labelling};
use fraisse_core::{FinStructure, StructMap};

/// Does `f` send edges to edges, constants to constants, hit every vertex
/// and every edge of `b`?
pub fn is_epi_by_definition(a: &FinStructure, b: &FinStructure, f: &[usize]) -> bool {
    if a.m() != b.m() || a.n() != b.n() || f.len() != a.size() || f.iter().any(|&y| y >= b.size()) {
        return false;
    }
    for i in 0..a.m() {
        let target: HashSet<(usize, usize)> = b.relations()[i].iter().copied().collect();
        let image: HashSet<(usize, usize)> = a.relations()[i].iter().map(|&(u, v)| (f[u], f[v])).collect();
        if image != target {
            return false;
        }
    }
    if a.constants().iter().zip(b.constants()).any(|(&ca, &cb)| f[ca] != cb) {
        return false;
    }
    let hit: HashSet<usize> = f.iter().copied().collect();
    hit.len() == b.size()
}

/// Exhaustive enumeration of all `|B|^|A|` maps.
pub fn epi_exists_brute_force(a: &FinStructure, b: &FinStructure) -> bool {
    let (na, nb) = (a.size(), b.size());
    if nb == 0 {
        return na == 0;
    }
    let total = (nb as u64).pow(na as u32);
    (0..total).any(|mut code| {
        let f: Vec<usize> = (0..na)
            .map(|_| {
                let d = (code % nb as u64) as usize;
                code /= nb as u64;
                d
            })
            .collect();
        is_epi_by_definition(a, b, &f)
    })
}

/// Edge list of S(p,q,r) written out from the definition, with the vertex
/// numbering a_1..a_p, b_2..b_q, c_2..c_r.
pub fn spiral_edges(p: usize, q: usize, r: usize) -> Vec<(usize, usize)> {
    let a = |i: usize| i - 1;
    let b = |i: usize| if i == 1 { a(p) } else { p + i - 2 };
    let c = |i: usize| if i == 1 { b(q) } else { p + q + i - 3 };
    let mut e = Vec::new();
    for i in 1..p {
        e.push((a(i), a(i + 1)));
    }
    for i in 1..q {
        e.push((b(i), b(i + 1)));
    }
    for i in 1..r {
        e.push((c(i), c(i + 1)));
    }
    e.push((a(p), a(1)));
    e.push((c(r), c(1)));
    e
}

/// QP on every edge, recomputed directly from the tables.
pub fn qp_holds(phi: &StructMap, lambda: &Labelling, mu: &Labelling, g: &FinGroup) -> bool {
    let dom = phi.domain();
    (0..dom.m()).all(|i| {
        dom.relations()[i].iter().all(|&(x, y)| {
            let lhs = g.mul(g.inv(mu.values[x][0]), mu.values[y][0]);
            lhs == lambda.values[phi.map()[y]][i]
        })
    })
}

pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}
