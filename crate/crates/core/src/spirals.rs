//! Spiral digraphs S(p,q,r), their covering maps, quotient-property (QP)
//! labellings, spiral covers of surjective digraphs, and QP covers of
//! surjective structures.

use std::collections::{HashMap, VecDeque};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{FinGroup, Labelling};
use crate::maps::StructMap;
use crate::structures::{in_family, is_surjective_relation, Family, FinStructure};

/// S(p,q,r): a cycle `a_1 … a_p`, a path `b_1 … b_q` and a cycle
/// `c_1 … c_r` with `a_p = b_1` and `b_q = c_1`.
///
/// Vertex ids follow the path `a_1 → … → a_p → b_2 → … → b_q → c_2 → … → c_r`,
/// so the non-wrap edges are exactly `(k, k+1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spiral {
    p: usize,
    q: usize,
    r: usize,
    structure: FinStructure,
}

pub fn make_spiral(p: usize, q: usize, r: usize) -> Result<Spiral> {
    if p < 2 || r < 2 || q < 1 {
        return Err(Error::SpiralParams { p, q, r });
    }
    let size = p + q + r - 2;
    let c1 = p + q - 2;
    let names = (0..size)
        .map(|k| {
            if k < p {
                format!("a{}", k + 1)
            } else if k < c1 {
                format!("b{}", k + 2 - p)
            } else if k == c1 {
                "c1".to_string()
            } else {
                format!("c{}", k - c1 + 1)
            }
        })
        .collect();
    let mut rel: Vec<(usize, usize)> = (0..size - 1).map(|k| (k, k + 1)).collect();
    rel.push((p - 1, 0));
    rel.push((size - 1, c1));
    let structure = FinStructure::with_names(names, vec![rel], Vec::new())?;
    Ok(Spiral { p, q, r, structure })
}

impl Spiral {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn params(&self) -> (usize, usize, usize) {
        (self.p, self.q, self.r)
    }

    pub fn structure(&self) -> &FinStructure {
        &self.structure
    }

    pub fn size(&self) -> usize {
        self.structure.size()
    }

    /// `a_i`, 1-based.
    pub fn a(&self, i: usize) -> usize {
        assert!((1..=self.p).contains(&i), "a_{i} out of range");
        i - 1
    }

    /// `b_i`, 1-based.
    pub fn b(&self, i: usize) -> usize {
        assert!((1..=self.q).contains(&i), "b_{i} out of range");
        self.p + i - 2
    }

    /// `c_i`, 1-based.
    pub fn c(&self, i: usize) -> usize {
        assert!((1..=self.r).contains(&i), "c_{i} out of range");
        self.p + self.q + i - 3
    }
}

/// The covering epimorphism S(tp,q,tr) → S(p,q,r).
pub fn spiral_cover_map(t: usize, p: usize, q: usize, r: usize) -> Result<StructMap> {
    if t == 0 {
        return Err(Error::SpiralParams { p: 0, q, r });
    }
    let base = make_spiral(p, q, r)?;
    let top = make_spiral(t * p, q, t * r)?;
    let map = (0..top.size()).map(|k| cover_image(k, t, p, q, r)).collect();
    StructMap::new(top.structure, base.structure, map)
}

fn cover_image(k: usize, t: usize, p: usize, q: usize, r: usize) -> usize {
    let tp = t * p;
    if k < tp {
        k % p
    } else if k < tp + q - 1 {
        k - tp + p
    } else {
        let j = k - (tp + q - 2); // c_{j+1}
        p + q - 2 + j % r
    }
}

/// Map φ with labellings λ (on the codomain, width m) and μ (on the domain,
/// width 1) over `group`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QpWitness {
    pub phi: StructMap,
    pub lambda: Labelling,
    pub mu: Labelling,
    pub group: FinGroup,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QpViolation {
    pub relation: usize,
    pub from: String,
    pub to: String,
    /// `μ(x)⁻¹ μ(y)`
    pub lhs: usize,
    /// `λ(φ(y))_i`
    pub rhs: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QpReport {
    pub holds: bool,
    pub edges_checked: usize,
    pub violation: Option<QpViolation>,
}

/// Checks `μ(x)⁻¹ μ(y) = λ(φ(y))_i` on every edge `(x, y)` of every `s_i`.
pub fn verify_qp(w: &QpWitness) -> Result<QpReport> {
    let (dom, cod) = (w.phi.domain(), w.phi.codomain());
    if w.lambda.len() != cod.size() || w.lambda.width != dom.m() {
        return Err(Error::ShapeMismatch(format!(
            "λ has {} entries of width {}, expected {} of width {}",
            w.lambda.len(),
            w.lambda.width,
            cod.size(),
            dom.m()
        )));
    }
    if w.mu.len() != dom.size() || w.mu.width != 1 {
        return Err(Error::ShapeMismatch(format!("μ must be scalar on {} vertices", dom.size())));
    }
    let g = &w.group;
    let mut checked = 0;
    for i in 0..dom.m() {
        for &(x, y) in dom.relations()[i].iter() {
            checked += 1;
            let lhs = g.mul(g.inv(w.mu.scalar_at(x)), w.mu.scalar_at(y));
            let rhs = w.lambda.get(w.phi.apply(y), i);
            if lhs != rhs {
                return Ok(QpReport {
                    holds: false,
                    edges_checked: checked,
                    violation: Some(QpViolation {
                        relation: i,
                        from: dom.name(x).into(),
                        to: dom.name(y).into(),
                        lhs,
                        rhs,
                    }),
                });
            }
        }
    }
    Ok(QpReport { holds: true, edges_checked: checked, violation: None })
}

/// QP labelling over the spiral cover S(tp,q,tr) → `base` with `μ(x0) = α`,
/// using component `i` of λ.
///
/// μ is propagated along the path through all vertices, forward via
/// `μ(y) = μ(x) λ(φ y)` and backward via `μ(x) = μ(y) λ(φ y)⁻¹`; the two
/// wrap edges then hold because `t` is the exponent of the group.
pub fn spiral_qp_labelling(
    base: &Spiral,
    lambda: &Labelling,
    i: usize,
    group: &FinGroup,
    t: usize,
    x0: usize,
    alpha: usize,
) -> Result<QpWitness> {
    let e = group.exponent();
    if t != e {
        return Err(Error::ExponentMismatch { expected: e, got: t });
    }
    if lambda.len() != base.size() || i >= lambda.width {
        return Err(Error::ShapeMismatch("λ does not match the spiral".into()));
    }
    if alpha >= group.order() {
        return Err(Error::ShapeMismatch(format!("{alpha} is not a group element")));
    }
    let component = Labelling::new(1, lambda.values.iter().map(|l| vec![l[i]]).collect(), group)?;
    let phi = spiral_cover_map(t, base.p, base.q, base.r)?;
    let n = phi.domain().size();
    if x0 >= n {
        return Err(Error::UnknownVertex(x0));
    }
    let lam = |y: usize| component.scalar_at(phi.apply(y));
    let mut mu = vec![0; n];
    mu[x0] = alpha;
    for k in x0..n - 1 {
        mu[k + 1] = group.mul(mu[k], lam(k + 1));
    }
    for k in (0..x0).rev() {
        mu[k] = group.mul(mu[k + 1], group.inv(lam(k + 1)));
    }
    Ok(QpWitness { phi, lambda: component, mu: Labelling::scalar(mu), group: group.clone() })
}

/// A disjoint union of spirals with a map onto a digraph reduct.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpiralUnion {
    pub components: Vec<Spiral>,
    pub offsets: Vec<usize>,
    /// From the union onto `(A; s_i)`.
    pub map: StructMap,
}

/// Shortest directed cycle through `w`, as `[w, y_1, …, y_{L-1}]`.
fn shortest_cycle(g: &FinStructure, w: usize) -> Option<Vec<usize>> {
    let mut parent = vec![usize::MAX; g.size()];
    let mut queue = VecDeque::new();
    for &y in g.out_neighbors(0, w) {
        if y == w {
            return Some(vec![w]);
        }
        if parent[y] == usize::MAX {
            parent[y] = w;
            queue.push_back(y);
        }
    }
    while let Some(x) = queue.pop_front() {
        for &y in g.out_neighbors(0, x) {
            if y == w {
                let mut path = vec![x];
                let mut z = x;
                while parent[z] != w {
                    z = parent[z];
                    path.push(z);
                }
                path.push(w);
                path.reverse();
                return Some(path);
            }
            if parent[y] == usize::MAX {
                parent[y] = x;
                queue.push_back(y);
            }
        }
    }
    None
}

/// BFS from `start` (forward or backward); returns the cycle vertex
/// minimising distance plus cycle length, with the path from `start` to it.
fn nearest_cycle(g: &FinStructure, start: usize, forward: bool, cycles: &[Option<Vec<usize>>]) -> (Vec<usize>, Vec<usize>) {
    let mut parent = vec![usize::MAX; g.size()];
    let mut dist = vec![usize::MAX; g.size()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut best: Option<(usize, usize)> = None;
    while let Some(x) = queue.pop_front() {
        if let Some(c) = &cycles[x] {
            let score = dist[x] + c.len();
            if best.is_none_or(|(s, _)| score < s) {
                best = Some((score, x));
            }
        }
        let next = if forward { g.out_neighbors(0, x) } else { g.in_neighbors(0, x) };
        for &y in next {
            if dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                parent[y] = x;
                queue.push_back(y);
            }
        }
    }
    let (_, w) = best.expect("surjective digraph: every vertex reaches a cycle");
    let mut path = vec![w];
    let mut z = w;
    while z != start {
        z = parent[z];
        path.push(z);
    }
    path.reverse();
    (path, cycles[w].clone().unwrap())
}

/// Vertex images of the `a`-cycle `a_1 … a_p` for a cycle walk
/// `[y_0, …, y_{L-1}]` with junction `a_p = y_0`, doubled when `L = 1`.
fn a_part(cycle: &[usize]) -> Vec<usize> {
    let c: Vec<usize> = if cycle.len() == 1 { vec![cycle[0]; 2] } else { cycle.to_vec() };
    let l = c.len();
    (1..=l).map(|k| c[k % l]).collect()
}

/// Images of `c_1 … c_r` with junction `c_1 = y_0`.
fn c_part(cycle: &[usize]) -> Vec<usize> {
    if cycle.len() == 1 {
        vec![cycle[0]; 2]
    } else {
        cycle.to_vec()
    }
}

/// One spiral per edge of `s_i`, mapped onto a walk through that edge.
pub fn spiral_cover_of_digraph(s: &FinStructure, i: usize) -> Result<SpiralUnion> {
    if !is_surjective_relation(s, i)? {
        return Err(Error::NotSurjective(i));
    }
    let g = s.relation_reduct(i)?;
    let cycles: Vec<Option<Vec<usize>>> = (0..g.size()).map(|w| shortest_cycle(&g, w)).collect();
    let mut components = Vec::new();
    let mut images: Vec<usize> = Vec::new();
    let mut offsets = Vec::new();
    for &(u, v) in g.relations()[0].iter() {
        // (a-cycle images, b path images, c-cycle images)
        let (a, b, c) = match shortest_cycle_through_edge(&g, u, v) {
            Some(cyc) => (a_part(&cyc), vec![u], c_part(&cyc)),
            None => {
                let (back, cyc1) = nearest_cycle(&g, u, false, &cycles);
                let (fwd, cyc2) = nearest_cycle(&g, v, true, &cycles);
                let mut path: Vec<usize> = back.into_iter().rev().collect();
                path.extend(fwd);
                (a_part(&cyc1), path, c_part(&cyc2))
            }
        };
        let sp = make_spiral(a.len(), b.len(), c.len())?;
        offsets.push(images.len());
        images.extend(a.iter().copied());
        images.extend(b[1..].iter().copied());
        images.extend(c[1..].iter().copied());
        components.push(sp);
    }
    let parts: Vec<&FinStructure> = components.iter().map(Spiral::structure).collect();
    let (union, _) = FinStructure::disjoint_union(&parts)?;
    let map = StructMap::new(union, g, images)?;
    Ok(SpiralUnion { components, offsets, map })
}

/// Shortest cycle containing the edge `(u, v)`, as `[u, v, …]`.
fn shortest_cycle_through_edge(g: &FinStructure, u: usize, v: usize) -> Option<Vec<usize>> {
    if u == v {
        return Some(vec![u]);
    }
    let mut parent = vec![usize::MAX; g.size()];
    parent[v] = v;
    let mut queue = VecDeque::from([v]);
    while let Some(x) = queue.pop_front() {
        if x == u {
            let mut path = vec![u];
            let mut z = u;
            while z != v {
                z = parent[z];
                path.push(z);
            }
            // path = [u, ..., v] backwards from u towards v; reorder as u, v, …
            path.reverse();
            path.pop();
            path.insert(0, u);
            return Some(path);
        }
        for &y in g.out_neighbors(0, x) {
            if parent[y] == usize::MAX {
                parent[y] = x;
                queue.push_back(y);
            }
        }
    }
    None
}

/// QP cover of a structure in F0 with the blocks `B_i` recorded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurjQpCover {
    pub witness: QpWitness,
    /// Vertex ranges of the parts built for each relation.
    pub blocks: Vec<Range<usize>>,
}

/// Builds `B ∈ F0`, an epimorphism `φ: B → A` and `μ: B → T` satisfying QP
/// for λ, such that every `(a, α, i)` is realised by some `b ∈ B_i`.
pub fn surj_qp_cover(a: &FinStructure, lambda: &Labelling, group: &FinGroup) -> Result<SurjQpCover> {
    let report = in_family(a, Family::F0);
    if !report.member {
        return Err(Error::NotInFamily {
            family: "F0".into(),
            reason: report.violation.map(|v| v.to_string()).unwrap_or_default(),
        });
    }
    let m = a.m();
    let lambda = Labelling::new(m, lambda.values.clone(), group)?;
    if lambda.len() != a.size() {
        return Err(Error::ShapeMismatch(format!("λ has {} entries for {} vertices", lambda.len(), a.size())));
    }
    let t = group.exponent();

    let mut names: Vec<String> = Vec::new();
    let mut image: Vec<usize> = Vec::new();
    let mut mu: Vec<usize> = Vec::new();
    let mut relations: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
    let mut blocks = Vec::with_capacity(m);
    for i in 0..m {
        let start = image.len();
        let union = spiral_cover_of_digraph(a, i)?;
        for (k, sp) in union.components.iter().enumerate() {
            let off = union.offsets[k];
            let pulled = Labelling {
                width: m,
                values: (0..sp.size()).map(|x| lambda.values[union.map.apply(off + x)].clone()).collect(),
            };
            let w = spiral_qp_labelling(sp, &pulled, i, group, t, 0, group.identity())?;
            let top = w.phi.domain();
            for g in group.elements() {
                let base = image.len();
                for x in 0..top.size() {
                    names.push(format!("{}.{}.{}.{}", i + 1, k, g, top.name(x)));
                    image.push(union.map.apply(off + w.phi.apply(x)));
                    mu.push(group.mul(g, w.mu.scalar_at(x)));
                }
                relations[i].extend(top.relations()[0].iter().map(|&(x, y)| (x + base, y + base)));
            }
        }
        blocks.push(start..image.len());
    }

    // Augmentation: give every vertex of B_i an out- and an in-edge in each
    // other relation, chosen so that QP keeps holding.
    let mut index: Vec<HashMap<(usize, usize), usize>> = vec![HashMap::new(); m];
    for (j, range) in blocks.iter().enumerate() {
        for b in range.clone() {
            index[j].entry((image[b], mu[b])).or_insert(b);
        }
    }
    for i in 0..m {
        for j in (0..m).filter(|&j| j != i) {
            for b in blocks[i].clone() {
                let x = image[b];
                let a1 = a.out_neighbors(j, x)[0];
                let want = group.mul(mu[b], lambda.get(a1, j));
                relations[j].push((b, index[j][&(a1, want)]));
                let a2 = a.in_neighbors(j, x)[0];
                let want = group.mul(mu[b], group.inv(lambda.get(x, j)));
                relations[j].push((index[j][&(a2, want)], b));
            }
        }
    }

    let structure = FinStructure::with_names(names, relations, Vec::new())?;
    let phi = StructMap::new(structure, a.clone(), image)?;
    Ok(SurjQpCover { witness: QpWitness { phi, lambda, mu: Labelling::scalar(mu), group: group.clone() }, blocks })
}

/// Every `(a, α, i)` has a witness `b ∈ B_i` with `φ(b) = a` and `μ(b) = α`.
pub fn richness_holds(cover: &SurjQpCover) -> bool {
    let w = &cover.witness;
    let a = w.phi.codomain();
    cover.blocks.iter().all(|range| {
        let mut seen = vec![vec![false; w.group.order()]; a.size()];
        for b in range.clone() {
            seen[w.phi.apply(b)][w.mu.scalar_at(b)] = true;
        }
        seen.iter().flatten().all(|&s| s)
    })
}

/// A cover of a constant-free member of F0 by a disjoint union of
/// augmented spirals (the trivial-group QP cover).
pub fn spiral_structure_cover(a: &FinStructure) -> Result<StructMap> {
    let trivial = FinGroup::trivial();
    let lambda = Labelling::constant(a.size(), a.m(), 0);
    Ok(surj_qp_cover(a, &lambda, &trivial)?.witness.phi)
}
