//! Vertex maps between structures: homomorphism/epimorphism certificates,
//! backtracking epimorphism search, fibre products, amalgamation and joint
//! projection witnesses, and covers landing in F or F0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spirals;
use crate::structures::{connected_components, expand_constants, in_family, Family, FinStructure};

/// Default node-expansion budget for map searches.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// A total vertex map `domain -> codomain`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructMap {
    domain: FinStructure,
    codomain: FinStructure,
    map: Vec<usize>,
}

impl StructMap {
    pub fn new(domain: FinStructure, codomain: FinStructure, map: Vec<usize>) -> Result<Self> {
        if map.len() != domain.size() {
            return Err(Error::CodomainMismatch(format!(
                "map has {} entries for a domain of {} vertices",
                map.len(),
                domain.size()
            )));
        }
        if let Some(&y) = map.iter().find(|&&y| y >= codomain.size()) {
            return Err(Error::CodomainMismatch(format!("image {y} is not a codomain vertex")));
        }
        Ok(StructMap { domain, codomain, map })
    }

    pub fn identity(s: &FinStructure) -> Self {
        StructMap { domain: s.clone(), codomain: s.clone(), map: (0..s.size()).collect() }
    }

    pub fn domain(&self) -> &FinStructure {
        &self.domain
    }

    pub fn codomain(&self) -> &FinStructure {
        &self.codomain
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn apply(&self, v: usize) -> usize {
        self.map[v]
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &StructMap) -> Result<StructMap> {
        if self.codomain != next.domain {
            return Err(Error::CodomainMismatch("composite: codomain differs from next domain".into()));
        }
        let map = self.map.iter().map(|&y| next.map[y]).collect();
        StructMap::new(self.domain.clone(), next.codomain.clone(), map)
    }

    pub fn certificate(&self) -> Result<Certificate> {
        Ok(Certificate {
            map: self
                .map
                .iter()
                .enumerate()
                .map(|(v, &w)| (self.domain.name(v).to_string(), self.codomain.name(w).to_string()))
                .collect(),
            checked: check_epimorphism(self)?,
        })
    }
}

/// Serialised witness: `{"map": [[v, image], …], "checked": bool}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub map: Vec<(String, String)>,
    pub checked: bool,
}

impl Certificate {
    /// Rebuilds the map against the given structures; the `checked` flag is
    /// ignored, callers re-verify.
    pub fn to_map(&self, domain: &FinStructure, codomain: &FinStructure) -> Result<StructMap> {
        let mut map = vec![usize::MAX; domain.size()];
        for (v, w) in &self.map {
            let v = domain
                .vertex_by_name(v)
                .ok_or_else(|| Error::CodomainMismatch(format!("unknown domain vertex `{v}`")))?;
            let w = codomain
                .vertex_by_name(w)
                .ok_or_else(|| Error::CodomainMismatch(format!("unknown codomain vertex `{w}`")))?;
            map[v] = w;
        }
        if let Some(v) = map.iter().position(|&w| w == usize::MAX) {
            return Err(Error::CodomainMismatch(format!("vertex `{}` has no image", domain.name(v))));
        }
        StructMap::new(domain.clone(), codomain.clone(), map)
    }
}

fn check_arity(a: &FinStructure, b: &FinStructure) -> Result<()> {
    if a.m() != b.m() || a.n() != b.n() {
        return Err(Error::ArityMismatch(a.m(), a.n(), b.m(), b.n()));
    }
    Ok(())
}

pub fn check_homomorphism(phi: &StructMap) -> Result<bool> {
    check_arity(&phi.domain, &phi.codomain)?;
    let (a, b, f) = (&phi.domain, &phi.codomain, &phi.map);
    let rel_ok = (0..a.m()).all(|i| a.relations()[i].iter().all(|&(u, v)| b.has_edge(i, f[u], f[v])));
    let const_ok = a.constants().iter().zip(b.constants()).all(|(&ca, &cb)| f[ca] == cb);
    Ok(rel_ok && const_ok)
}

pub fn check_epimorphism(phi: &StructMap) -> Result<bool> {
    if !check_homomorphism(phi)? {
        return Ok(false);
    }
    let (a, b, f) = (&phi.domain, &phi.codomain, &phi.map);
    let mut hit = vec![false; b.size()];
    for &y in f {
        hit[y] = true;
    }
    if hit.contains(&false) {
        return Ok(false);
    }
    for i in 0..a.m() {
        let mut image: Vec<(usize, usize)> = a.relations()[i].iter().map(|&(u, v)| (f[u], f[v])).collect();
        image.sort_unstable();
        image.dedup();
        if image.as_slice() != b.relations()[i] {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Result of a bounded search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome<T> {
    Found(T),
    /// The search space was exhausted: no witness exists.
    NoWitness,
    /// The budget ran out before the space was exhausted.
    Exhausted,
}

impl<T> SearchOutcome<T> {
    pub fn found(self) -> Option<T> {
        match self {
            SearchOutcome::Found(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, SearchOutcome::Found(_))
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> SearchOutcome<U> {
        match self {
            SearchOutcome::Found(t) => SearchOutcome::Found(f(t)),
            SearchOutcome::NoWitness => SearchOutcome::NoWitness,
            SearchOutcome::Exhausted => SearchOutcome::Exhausted,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Goal {
    Homomorphism,
    Epimorphism,
}

struct MapSearch<'a> {
    a: &'a FinStructure,
    b: &'a FinStructure,
    goal: Goal,
    order: Vec<usize>,
    candidates: Vec<Vec<usize>>,
    assign: Vec<usize>,
    hit: Vec<usize>,
    unhit: usize,
    covered: Vec<Vec<usize>>,
    uncovered: Vec<usize>,
    /// A-edges per relation with at least one endpoint still unassigned.
    pending: Vec<usize>,
    budget: u64,
    nodes: u64,
}

const UNSET: usize = usize::MAX;

impl<'a> MapSearch<'a> {
    fn new(a: &'a FinStructure, b: &'a FinStructure, goal: Goal, allowed: Option<&[Vec<usize>]>, budget: u64) -> Self {
        let mut order: Vec<usize> = (0..a.size()).collect();
        order.sort_by_key(|&v| std::cmp::Reverse(a.total_degree(v)));
        let mut candidates: Vec<Vec<usize>> = match allowed {
            Some(al) => al.to_vec(),
            None => vec![(0..b.size()).collect(); a.size()],
        };
        for (j, (&ca, &cb)) in a.constants().iter().zip(b.constants()).enumerate() {
            let _ = j;
            candidates[ca].retain(|&y| y == cb);
        }
        for (v, cands) in candidates.iter_mut().enumerate() {
            for i in 0..a.m() {
                if a.has_edge(i, v, v) {
                    cands.retain(|&y| b.has_edge(i, y, y));
                }
            }
        }
        MapSearch {
            a,
            b,
            goal,
            order,
            candidates,
            assign: vec![UNSET; a.size()],
            hit: vec![0; b.size()],
            unhit: b.size(),
            covered: b.relations().iter().map(|r| vec![0; r.len()]).collect(),
            uncovered: b.relations().iter().map(Vec::len).collect(),
            pending: a.relations().iter().map(Vec::len).collect(),
            budget,
            nodes: 0,
        }
    }

    fn edge_index(&self, i: usize, u: usize, v: usize) -> Option<usize> {
        self.b.relations()[i].binary_search(&(u, v)).ok()
    }

    /// Edges of `a` incident to `v` whose other endpoint is assigned (or `v`
    /// itself for loops), visited once each.
    fn completed_edges(&self, v: usize) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.a.m() {
            for &w in self.a.out_neighbors(i, v) {
                if w == v || self.assign[w] != UNSET {
                    out.push((i, v, w));
                }
            }
            for &w in self.a.in_neighbors(i, v) {
                if w != v && self.assign[w] != UNSET {
                    out.push((i, w, v));
                }
            }
        }
        out
    }

    fn place(&mut self, v: usize, y: usize) -> Option<Vec<(usize, usize)>> {
        self.assign[v] = y;
        let edges = self.completed_edges(v);
        let mut indices = Vec::with_capacity(edges.len());
        for &(i, s, t) in &edges {
            match self.edge_index(i, self.assign[s], self.assign[t]) {
                Some(e) => indices.push((i, e)),
                None => {
                    self.assign[v] = UNSET;
                    return None;
                }
            }
        }
        if self.hit[y] == 0 {
            self.unhit -= 1;
        }
        self.hit[y] += 1;
        for &(i, e) in &indices {
            if self.covered[i][e] == 0 {
                self.uncovered[i] -= 1;
            }
            self.covered[i][e] += 1;
            self.pending[i] -= 1;
        }
        Some(indices)
    }

    fn unplace(&mut self, v: usize, indices: &[(usize, usize)]) {
        let y = self.assign[v];
        for &(i, e) in indices {
            self.covered[i][e] -= 1;
            if self.covered[i][e] == 0 {
                self.uncovered[i] += 1;
            }
            self.pending[i] += 1;
        }
        self.hit[y] -= 1;
        if self.hit[y] == 0 {
            self.unhit += 1;
        }
        self.assign[v] = UNSET;
    }

    fn feasible(&self, depth: usize) -> bool {
        if self.goal == Goal::Homomorphism {
            return true;
        }
        let remaining = self.order.len() - depth;
        self.unhit <= remaining && (0..self.a.m()).all(|i| self.uncovered[i] <= self.pending[i])
    }

    fn run(&mut self) -> SearchOutcome<Vec<usize>> {
        if self.candidates.iter().any(Vec::is_empty) {
            return SearchOutcome::NoWitness;
        }
        match self.descend(0) {
            Ok(true) => SearchOutcome::Found(self.assign.clone()),
            Ok(false) => SearchOutcome::NoWitness,
            Err(()) => SearchOutcome::Exhausted,
        }
    }

    fn descend(&mut self, depth: usize) -> std::result::Result<bool, ()> {
        if depth == self.order.len() {
            return Ok(self.goal == Goal::Homomorphism || (self.unhit == 0 && self.uncovered.iter().all(|&u| u == 0)));
        }
        let v = self.order[depth];
        for k in 0..self.candidates[v].len() {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(());
            }
            let y = self.candidates[v][k];
            if let Some(indices) = self.place(v, y) {
                if self.feasible(depth + 1) && self.descend(depth + 1)? {
                    return Ok(true);
                }
                self.unplace(v, &indices);
            }
        }
        Ok(false)
    }
}

fn search(
    a: &FinStructure,
    b: &FinStructure,
    goal: Goal,
    allowed: Option<&[Vec<usize>]>,
    budget: u64,
) -> Result<SearchOutcome<StructMap>> {
    check_arity(a, b)?;
    let mut s = MapSearch::new(a, b, goal, allowed, budget);
    Ok(match s.run() {
        SearchOutcome::Found(map) => SearchOutcome::Found(StructMap::new(a.clone(), b.clone(), map)?),
        SearchOutcome::NoWitness => SearchOutcome::NoWitness,
        SearchOutcome::Exhausted => SearchOutcome::Exhausted,
    })
}

/// Backtracking search for an epimorphism `a -> b`.
///
/// Vertices of `a` are tried in decreasing total degree, images in id order,
/// so the first witness in that order is returned.
pub fn find_epimorphism(a: &FinStructure, b: &FinStructure, budget: u64) -> Result<SearchOutcome<StructMap>> {
    search(a, b, Goal::Epimorphism, None, budget)
}

pub fn find_homomorphism(a: &FinStructure, b: &FinStructure, budget: u64) -> Result<SearchOutcome<StructMap>> {
    search(a, b, Goal::Homomorphism, None, budget)
}

/// Epimorphism `psi: phi1.domain -> phi2.domain` with `phi2 ∘ psi = phi1`.
pub fn find_lift(phi1: &StructMap, phi2: &StructMap, budget: u64) -> Result<SearchOutcome<StructMap>> {
    if phi1.codomain != phi2.codomain {
        return Err(Error::CodomainMismatch("maps to different structures".into()));
    }
    let a = &phi1.domain;
    let b = &phi2.domain;
    let allowed: Vec<Vec<usize>> = (0..a.size())
        .map(|x| (0..b.size()).filter(|&y| phi2.map[y] == phi1.map[x]).collect())
        .collect();
    search(a, b, Goal::Epimorphism, Some(&allowed), budget)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FibreProduct {
    pub structure: FinStructure,
    /// `pairs[k] = (x, y)` for vertex `k` of the product.
    pub pairs: Vec<(usize, usize)>,
    pub pi1: StructMap,
    pub pi2: StructMap,
}

/// Pullback of `phi1: A1 -> B` and `phi2: A2 -> B`.
pub fn fibre_product(phi1: &StructMap, phi2: &StructMap) -> Result<FibreProduct> {
    if phi1.codomain != phi2.codomain {
        return Err(Error::CodomainMismatch("maps to different structures".into()));
    }
    let (a1, a2) = (&phi1.domain, &phi2.domain);
    check_arity(a1, a2)?;
    let mut index = vec![vec![usize::MAX; a2.size()]; a1.size()];
    let mut pairs = Vec::new();
    for x in 0..a1.size() {
        for y in 0..a2.size() {
            if phi1.map[x] == phi2.map[y] {
                index[x][y] = pairs.len();
                pairs.push((x, y));
            }
        }
    }
    let mut relations = Vec::with_capacity(a1.m());
    for i in 0..a1.m() {
        let mut rel = Vec::new();
        for &(x, x2) in a1.relations()[i].iter() {
            for &(y, y2) in a2.relations()[i].iter() {
                let (s, t) = (index[x][y], index[x2][y2]);
                if s != usize::MAX && t != usize::MAX {
                    rel.push((s, t));
                }
            }
        }
        relations.push(rel);
    }
    let constants: Vec<usize> = a1
        .constants()
        .iter()
        .zip(a2.constants())
        .map(|(&c1, &c2)| index[c1][c2])
        .collect();
    if constants.contains(&usize::MAX) {
        return Err(Error::Precondition("constants of the two domains lie over different points".into()));
    }
    let names = pairs.iter().map(|&(x, y)| format!("({},{})", a1.name(x), a2.name(y))).collect();
    let structure = FinStructure::with_names(names, relations, constants)?;
    let pi1 = StructMap::new(structure.clone(), a1.clone(), pairs.iter().map(|p| p.0).collect())?;
    let pi2 = StructMap::new(structure.clone(), a2.clone(), pairs.iter().map(|p| p.1).collect())?;
    Ok(FibreProduct { structure, pairs, pi1, pi2 })
}

/// Greatest set of vertices whose induced substructure is surjective in
/// every relation, found by repeatedly deleting vertices that lack an in- or
/// out-neighbour among the survivors.
pub fn surjective_core(s: &FinStructure) -> Vec<usize> {
    let mut alive = vec![true; s.size()];
    let mut changed = true;
    while changed {
        changed = false;
        for v in 0..s.size() {
            if !alive[v] {
                continue;
            }
            let ok = (0..s.m()).all(|i| {
                s.out_neighbors(i, v).iter().any(|&w| alive[w]) && s.in_neighbors(i, v).iter().any(|&w| alive[w])
            });
            if !ok {
                alive[v] = false;
                changed = true;
            }
        }
    }
    (0..s.size()).filter(|&v| alive[v]).collect()
}

/// Restricts a family of maps out of `s` to the substructure on `keep`.
fn restrict_maps(s: &FinStructure, keep: &[usize], maps: &[&StructMap]) -> Result<(FinStructure, Vec<StructMap>)> {
    let (sub, _) = s.induced(keep);
    let out = maps
        .iter()
        .map(|m| StructMap::new(sub.clone(), m.codomain.clone(), keep.iter().map(|&v| m.map[v]).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok((sub, out))
}

/// Drops whole components of the common domain while every map stays an
/// epimorphism. Constants are never dropped.
fn shrink_components(maps: Vec<StructMap>) -> Result<Vec<StructMap>> {
    let mut maps = maps;
    loop {
        let s = maps[0].domain.clone();
        let comps = connected_components(&s);
        let mut progressed = false;
        for block in comps.blocks().iter().rev() {
            if block.iter().any(|v| s.constants().contains(v)) || block.len() == s.size() {
                continue;
            }
            let keep: Vec<usize> = (0..s.size()).filter(|v| !block.contains(v)).collect();
            let refs: Vec<&StructMap> = maps.iter().collect();
            let (_, cand) = restrict_maps(&s, &keep, &refs)?;
            if cand.iter().map(check_epimorphism).collect::<Result<Vec<_>>>()?.iter().all(|&b| b) {
                maps = cand;
                progressed = true;
                break;
            }
        }
        if !progressed {
            return Ok(maps);
        }
    }
}

/// Deterministic cover `B -> S` with `B ∈ F`, for `S ∈ F0` without constants.
///
/// For every relation `i` the cover has an out-branching copy of `S` whose
/// points are `s_i`-outgoing (unique `s_i` predecessor, at least two
/// successors) and an in-branching copy whose points are
/// `s_i^{-1}`-outgoing, joined by all lifts of `s_i`. For `j ≠ i` every
/// point receives exactly one `s_j` edge in each direction, from/into the
/// matching copies for `j`, so it is outgoing for nothing else.
pub fn f_cover(s: &FinStructure) -> Result<StructMap> {
    if s.n() > 0 {
        return Err(Error::HasConstants(s.n()));
    }
    let report = in_family(s, Family::F0);
    if !report.member {
        return Err(Error::NotInFamily { family: "F0".into(), reason: report.violation.unwrap().to_string() });
    }
    let (m, size) = (s.m(), s.size());
    let pred: Vec<Vec<usize>> = (0..m).map(|i| (0..size).map(|u| s.in_neighbors(i, u)[0]).collect()).collect();
    let succ: Vec<Vec<usize>> = (0..m).map(|i| (0..size).map(|u| s.out_neighbors(i, u)[0]).collect()).collect();

    // Copy counts of the branching parts, raised until every copy has the
    // degree it needs.
    let mut k_out = vec![vec![1usize; size]; m];
    let mut k_in = vec![vec![1usize; size]; m];
    for i in 0..m {
        loop {
            let mut changed = false;
            for u in 0..size {
                let children: usize = (0..size).filter(|&w| pred[i][w] == u).map(|w| k_out[i][w]).sum();
                let lifts: usize = s.out_neighbors(i, u).iter().map(|&v| k_in[i][v]).sum();
                // extra copies (a >= 2) only see the lifts
                let need_more = lifts < 2 && (children + lifts < 2 || k_out[i][u] > 1);
                if need_more {
                    k_in[i][s.out_neighbors(i, u)[0]] += 1;
                    changed = true;
                }
            }
            for v in 0..size {
                let parents: usize = (0..size).filter(|&w| succ[i][w] == v).map(|w| k_in[i][w]).sum();
                let lifts: usize = s.in_neighbors(i, v).iter().map(|&u| k_out[i][u]).sum();
                let need_more = lifts < 2 && (parents + lifts < 2 || k_in[i][v] > 1);
                if need_more {
                    k_out[i][s.in_neighbors(i, v)[0]] += 1;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    // Vertex layout: for each relation, out-branching copies then in-branching copies.
    let mut names = Vec::new();
    let mut image = Vec::new();
    let mut out_id = vec![vec![Vec::new(); size]; m];
    let mut in_id = vec![vec![Vec::new(); size]; m];
    for i in 0..m {
        for u in 0..size {
            for a in 0..k_out[i][u] {
                out_id[i][u].push(names.len());
                names.push(format!("{}^s{}.{}", s.name(u), i + 1, a + 1));
                image.push(u);
            }
        }
        for v in 0..size {
            for b in 0..k_in[i][v] {
                in_id[i][v].push(names.len());
                names.push(format!("{}^m{}.{}", s.name(v), i + 1, b + 1));
                image.push(v);
            }
        }
    }
    let mut relations = vec![Vec::new(); m];
    for i in 0..m {
        for u in 0..size {
            for &x in &out_id[i][u] {
                relations[i].push((out_id[i][pred[i][u]][0], x));
            }
            for &y in &in_id[i][u] {
                relations[i].push((y, in_id[i][succ[i][u]][0]));
            }
        }
        for &(u, v) in s.relations()[i].iter() {
            for &x in &out_id[i][u] {
                for &y in &in_id[i][v] {
                    relations[i].push((x, y));
                }
            }
        }
    }
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            for u in 0..size {
                for &x in out_id[i][u].iter().chain(&in_id[i][u]) {
                    relations[j].push((x, in_id[j][succ[j][u]][0]));
                    relations[j].push((out_id[j][pred[j][u]][0], x));
                }
            }
        }
    }
    let b = FinStructure::with_names(names, relations, Vec::new())?;
    StructMap::new(b, s.clone(), image)
}

/// Witness of an amalgamation square (or a joint projection when the base is
/// terminal): `C` with epimorphisms `psi1: C -> A1`, `psi2: C -> A2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Amalgam {
    pub psi1: StructMap,
    pub psi2: StructMap,
}

impl Amalgam {
    pub fn structure(&self) -> &FinStructure {
        &self.psi1.domain
    }
}

fn require_member(s: &FinStructure, family: Family, what: &str) -> Result<()> {
    let r = in_family(s, family);
    if !r.member {
        return Err(Error::NotInFamily {
            family: family.to_string(),
            reason: format!("{what}: {}", r.violation.map(|v| v.to_string()).unwrap_or_default()),
        });
    }
    Ok(())
}

fn require_epi(phi: &StructMap, what: &str) -> Result<()> {
    if !check_epimorphism(phi)? {
        return Err(Error::Precondition(format!("{what} is not an epimorphism")));
    }
    Ok(())
}

/// Amalgamation of constant-free structures over a common target, landing
/// in F0 (or F when `want_f`). The maps need only be homomorphisms.
fn amalgamate_plain(
    phi1: &StructMap,
    phi2: &StructMap,
    want_f: bool,
    size_cap: usize,
) -> Result<SearchOutcome<(StructMap, StructMap)>> {
    let fp = fibre_product(phi1, phi2)?;
    let keep = surjective_core(&fp.structure);
    if keep.is_empty() {
        return Ok(SearchOutcome::NoWitness);
    }
    let (core, maps) = restrict_maps(&fp.structure, &keep, &[&fp.pi1, &fp.pi2])?;
    let (mut p1, mut p2) = (maps[0].clone(), maps[1].clone());
    if !check_epimorphism(&p1)? || !check_epimorphism(&p2)? {
        return Ok(SearchOutcome::NoWitness);
    }
    let shrunk = shrink_components(vec![p1, p2])?;
    p1 = shrunk[0].clone();
    p2 = shrunk[1].clone();
    let _ = core;
    if want_f && !in_family(&p1.domain, Family::F).member {
        let cover = f_cover(&p1.domain)?;
        if cover.domain.size() > size_cap {
            return Ok(SearchOutcome::Exhausted);
        }
        let q1 = cover.then(&p1)?;
        let q2 = cover.then(&p2)?;
        let shrunk = shrink_components(vec![q1, q2])?;
        p1 = shrunk[0].clone();
        p2 = shrunk[1].clone();
    }
    if p1.domain.size() > size_cap {
        return Ok(SearchOutcome::Exhausted);
    }
    Ok(SearchOutcome::Found((p1, p2)))
}

/// Free (non-constant) part of an F^(n) member as a constant-free structure,
/// with the list of kept vertices.
fn free_part(s: &FinStructure) -> (FinStructure, Vec<usize>) {
    let keep: Vec<usize> = (0..s.size()).filter(|v| !s.constants().contains(v)).collect();
    let (sub, _) = s.without_constants().induced(&keep);
    (sub, keep)
}

/// Re-attaches `n` constant components: `C'^(n)` with `psi_i' ∪ (k ↦ p_k)`.
fn reattach_constants(psi1: &StructMap, psi2: &StructMap, a1: &FinStructure, a2: &FinStructure, keep1: &[usize], keep2: &[usize]) -> Result<Amalgam> {
    let n = a1.n();
    let c = expand_constants(&psi1.domain, n)?;
    let base = psi1.domain.size();
    let lift = |psi: &StructMap, keep: &[usize], a: &FinStructure| -> Result<StructMap> {
        let mut map: Vec<usize> = psi.map.iter().map(|&y| keep[y]).collect();
        map.extend(a.constants().iter().copied());
        debug_assert_eq!(map.len(), base + n);
        StructMap::new(c.clone(), a.clone(), map)
    };
    Ok(Amalgam { psi1: lift(psi1, keep1, a1)?, psi2: lift(psi2, keep2, a2)? })
}

fn amalgamate(
    phi1: &StructMap,
    phi2: &StructMap,
    family: Family,
    size_cap: usize,
    budget: u64,
) -> Result<SearchOutcome<Amalgam>> {
    // A witness living on one of the inputs keeps things small.
    if let SearchOutcome::Found(psi) = find_lift(phi1, phi2, budget)? {
        return Ok(SearchOutcome::Found(Amalgam { psi1: StructMap::identity(&phi1.domain), psi2: psi }));
    }
    if let SearchOutcome::Found(psi) = find_lift(phi2, phi1, budget)? {
        return Ok(SearchOutcome::Found(Amalgam { psi1: psi, psi2: StructMap::identity(&phi2.domain) }));
    }
    let out = match family {
        Family::F0 | Family::F | Family::F0n => {
            amalgamate_plain(phi1, phi2, family == Family::F, size_cap)?
                .map(|(psi1, psi2)| Amalgam { psi1, psi2 })
        }
        Family::Fn => {
            let (a1, a2) = (&phi1.domain, &phi2.domain);
            let (f1, keep1) = free_part(a1);
            let (f2, keep2) = free_part(a2);
            let base = phi1.codomain.without_constants();
            let r1 = StructMap::new(f1, base.clone(), keep1.iter().map(|&v| phi1.map[v]).collect())?;
            let r2 = StructMap::new(f2, base, keep2.iter().map(|&v| phi2.map[v]).collect())?;
            match amalgamate_plain(&r1, &r2, true, size_cap.saturating_sub(a1.n()))? {
                SearchOutcome::Found((p1, p2)) => {
                    SearchOutcome::Found(reattach_constants(&p1, &p2, a1, a2, &keep1, &keep2)?)
                }
                SearchOutcome::NoWitness => SearchOutcome::NoWitness,
                SearchOutcome::Exhausted => SearchOutcome::Exhausted,
            }
        }
    };
    let SearchOutcome::Found(w) = out else { return Ok(out) };
    // Never trust the construction: re-check every claim.
    let ok = check_epimorphism(&w.psi1)?
        && check_epimorphism(&w.psi2)?
        && w.psi1.then(phi1)?.map == w.psi2.then(phi2)?.map
        && in_family(w.structure(), family).member;
    if !ok {
        return Err(Error::Precondition("amalgam failed re-verification".into()));
    }
    Ok(SearchOutcome::Found(w))
}

/// Default cap on witness size for amalgamation of `a1` and `a2`.
pub fn default_size_cap(a1: &FinStructure, a2: &FinStructure) -> usize {
    a1.size() * a2.size() * 4 * a1.m().max(1)
}

/// Projective amalgamation: `C` in `family` with epimorphisms `psi_i` onto
/// the domains of `phi_i` and `phi1 ∘ psi1 = phi2 ∘ psi2`.
pub fn pap_witness(phi1: &StructMap, phi2: &StructMap, family: Family, size_cap: usize) -> Result<SearchOutcome<Amalgam>> {
    if phi1.codomain != phi2.codomain {
        return Err(Error::CodomainMismatch("maps to different structures".into()));
    }
    require_member(&phi1.domain, family, "A1")?;
    require_member(&phi2.domain, family, "A2")?;
    require_member(&phi1.codomain, family, "B")?;
    require_epi(phi1, "phi1")?;
    require_epi(phi2, "phi2")?;
    amalgamate(phi1, phi2, family, size_cap, DEFAULT_BUDGET)
}

/// A loop point carrying all `n` constants: the terminal object for joint
/// projection.
fn terminal(m: usize, n: usize) -> FinStructure {
    FinStructure::new(1, vec![vec![(0, 0)]; m], vec![0; n]).expect("valid terminal")
}

/// Joint projection: `B` in `family` with epimorphisms onto `a1` and `a2`.
pub fn jpp_witness(a1: &FinStructure, a2: &FinStructure, family: Family, size_cap: usize) -> Result<SearchOutcome<Amalgam>> {
    require_member(a1, family, "A1")?;
    require_member(a2, family, "A2")?;
    check_arity(a1, a2)?;
    let t = terminal(a1.m(), a1.n());
    let phi1 = StructMap::new(a1.clone(), t.clone(), vec![0; a1.size()])?;
    let phi2 = StructMap::new(a2.clone(), t, vec![0; a2.size()])?;
    if let SearchOutcome::Found(psi) = find_epimorphism(a1, a2, DEFAULT_BUDGET)? {
        return Ok(SearchOutcome::Found(Amalgam { psi1: StructMap::identity(a1), psi2: psi }));
    }
    amalgamate(&phi1, &phi2, family, size_cap, DEFAULT_BUDGET)
}

/// Cover `B -> S` of a member of F0^(n) by a member of the target family
/// (`F0n` or `Fn`); constants of the cover map onto those of `S`.
pub fn coinitial_cover(s: &FinStructure, target: Family, size_cap: usize) -> Result<SearchOutcome<StructMap>> {
    require_member(s, Family::F0n, "S")?;
    if in_family(s, Family::Fn).member {
        return Ok(SearchOutcome::Found(StructMap::identity(s)));
    }
    let reduct = s.without_constants();
    let cover = match target {
        Family::F0n => spirals::spiral_structure_cover(&reduct)?,
        Family::Fn => {
            let c = f_cover(&reduct)?;
            if c.domain.size() + s.n() > size_cap {
                return Ok(SearchOutcome::Exhausted);
            }
            c
        }
        other => return Err(Error::Precondition(format!("coinitial cover target must be F0n or Fn, not {other}"))),
    };
    let b = expand_constants(&cover.domain, s.n())?;
    let mut map = cover.map.clone();
    map.extend(s.constants().iter().copied());
    let phi = StructMap::new(b, s.clone(), map)?;
    if !check_epimorphism(&phi)? || !in_family(&phi.domain, target).member {
        return Err(Error::Precondition("coinitial cover failed re-verification".into()));
    }
    Ok(SearchOutcome::Found(phi))
}
