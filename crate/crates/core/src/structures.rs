//! Finite σ-structures: a vertex set with `m` binary relations and `n`
//! distinguished constants, together with the family predicates, constant
//! expansion, connected components and partition data built on top of them.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::StructMap;

/// A finite structure over the signature `{s_1, …, s_m, p_1, …, p_n}`.
///
/// Vertices are the integers `0..size`; `names` is a presentation alias only.
/// Relations are kept sorted and deduplicated, with adjacency lists cached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinStructure {
    size: usize,
    relations: Vec<Vec<(usize, usize)>>,
    constants: Vec<usize>,
    names: Vec<String>,
    out_adj: Vec<Vec<Vec<usize>>>,
    in_adj: Vec<Vec<Vec<usize>>>,
}

impl FinStructure {
    pub fn new(
        size: usize,
        relations: Vec<Vec<(usize, usize)>>,
        constants: Vec<usize>,
    ) -> Result<Self> {
        let names = (0..size).map(|v| v.to_string()).collect();
        Self::with_names(names, relations, constants)
    }

    pub fn with_names(
        names: Vec<String>,
        mut relations: Vec<Vec<(usize, usize)>>,
        constants: Vec<usize>,
    ) -> Result<Self> {
        let size = names.len();
        if relations.is_empty() {
            return Err(Error::InvalidStructure("at least one relation is required".into()));
        }
        let distinct: BTreeSet<&String> = names.iter().collect();
        if distinct.len() != size {
            return Err(Error::InvalidStructure("vertex names must be unique".into()));
        }
        for (i, rel) in relations.iter_mut().enumerate() {
            if let Some(&(u, v)) = rel.iter().find(|&&(u, v)| u >= size || v >= size) {
                return Err(Error::InvalidStructure(format!(
                    "pair ({u}, {v}) of relation {i} references a missing vertex"
                )));
            }
            rel.sort_unstable();
            rel.dedup();
        }
        if let Some(&c) = constants.iter().find(|&&c| c >= size) {
            return Err(Error::InvalidStructure(format!("constant {c} is not a vertex")));
        }
        let mut out_adj = vec![vec![Vec::new(); size]; relations.len()];
        let mut in_adj = vec![vec![Vec::new(); size]; relations.len()];
        for (i, rel) in relations.iter().enumerate() {
            for &(u, v) in rel {
                out_adj[i][u].push(v);
                in_adj[i][v].push(u);
            }
        }
        for adj in in_adj.iter_mut().flatten() {
            adj.sort_unstable();
        }
        Ok(FinStructure { size, relations, constants, names, out_adj, in_adj })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn m(&self) -> usize {
        self.relations.len()
    }

    pub fn n(&self) -> usize {
        self.constants.len()
    }

    pub fn relations(&self) -> &[Vec<(usize, usize)>] {
        &self.relations
    }

    pub fn relation(&self, i: usize) -> Result<&[(usize, usize)]> {
        self.relations
            .get(i)
            .map(Vec::as_slice)
            .ok_or(Error::RelationIndex { index: i, m: self.m() })
    }

    pub fn constants(&self) -> &[usize] {
        &self.constants
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn has_edge(&self, i: usize, u: usize, v: usize) -> bool {
        self.relations[i].binary_search(&(u, v)).is_ok()
    }

    pub fn out_neighbors(&self, i: usize, v: usize) -> &[usize] {
        &self.out_adj[i][v]
    }

    pub fn in_neighbors(&self, i: usize, v: usize) -> &[usize] {
        &self.in_adj[i][v]
    }

    /// Sum of in- and out-degrees over all relations.
    pub fn total_degree(&self, v: usize) -> usize {
        (0..self.m()).map(|i| self.out_adj[i][v].len() + self.in_adj[i][v].len()).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.relations.iter().map(Vec::len).sum()
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.size {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v))
        }
    }

    /// The same carrier and relations with the constant symbols dropped.
    pub fn without_constants(&self) -> FinStructure {
        FinStructure { constants: Vec::new(), ..self.clone() }
    }

    /// A copy with the given constants, which must be vertices.
    pub fn with_constants(&self, constants: Vec<usize>) -> Result<FinStructure> {
        FinStructure::with_names(self.names.clone(), self.relations.clone(), constants)
    }

    /// The digraph `(A; s_i)` with no constants.
    pub fn relation_reduct(&self, i: usize) -> Result<FinStructure> {
        let rel = self.relation(i)?.to_vec();
        FinStructure::with_names(self.names.clone(), vec![rel], Vec::new())
    }

    /// Substructure induced on `vertices` (in the given order) together with
    /// the old-to-new index map. Constants outside `vertices` are dropped.
    pub fn induced(&self, vertices: &[usize]) -> (FinStructure, Vec<Option<usize>>) {
        let mut index = vec![None; self.size];
        for (new, &old) in vertices.iter().enumerate() {
            index[old] = Some(new);
        }
        let relations = self
            .relations
            .iter()
            .map(|rel| {
                rel.iter()
                    .filter_map(|&(u, v)| Some((index[u]?, index[v]?)))
                    .collect()
            })
            .collect();
        let constants = self.constants.iter().filter_map(|&c| index[c]).collect();
        let names = vertices.iter().map(|&v| self.names[v].clone()).collect();
        let s = FinStructure::with_names(names, relations, constants)
            .expect("induced substructure of a valid structure");
        (s, index)
    }

    /// Disjoint union; vertex names are prefixed by the part index when they
    /// would collide. Constants of all parts are concatenated.
    pub fn disjoint_union(parts: &[&FinStructure]) -> Result<(FinStructure, Vec<usize>)> {
        let m = parts.first().map(|p| p.m()).ok_or_else(|| {
            Error::InvalidStructure("disjoint union of no structures".into())
        })?;
        let mut offsets = Vec::with_capacity(parts.len());
        let mut relations = vec![Vec::new(); m];
        let mut constants = Vec::new();
        let mut names = Vec::new();
        let mut seen = BTreeSet::new();
        let mut collide = false;
        for p in parts {
            for n in p.names() {
                collide |= !seen.insert(n.clone());
            }
        }
        let mut offset = 0;
        for (k, p) in parts.iter().enumerate() {
            if p.m() != m {
                return Err(Error::ArityMismatch(m, 0, p.m(), 0));
            }
            offsets.push(offset);
            for (i, rel) in p.relations.iter().enumerate() {
                relations[i].extend(rel.iter().map(|&(u, v)| (u + offset, v + offset)));
            }
            constants.extend(p.constants.iter().map(|&c| c + offset));
            for n in p.names() {
                names.push(if collide { format!("{k}.{n}") } else { n.clone() });
            }
            offset += p.size();
        }
        Ok((FinStructure::with_names(names, relations, constants)?, offsets))
    }

    /// Directed 2-cycle, directed cycle, single loop and the smallest member
    /// of F, handy in examples and tests.
    pub fn directed_cycle(len: usize) -> FinStructure {
        let rel = (0..len).map(|k| (k, (k + 1) % len)).collect();
        FinStructure::new(len, vec![rel], Vec::new()).expect("valid cycle")
    }

    /// `m`-relation structure on one vertex with a loop in every relation.
    pub fn loop_point(m: usize) -> FinStructure {
        FinStructure::new(1, vec![vec![(0, 0)]; m], Vec::new()).expect("valid loop")
    }

    /// `({x, y}; {(x,x), (x,y), (y,y)})`, the two-point member of F.
    pub fn two_point_f_example() -> FinStructure {
        FinStructure::with_names(
            vec!["x".into(), "y".into()],
            vec![vec![(0, 0), (0, 1), (1, 1)]],
            Vec::new(),
        )
        .expect("valid example")
    }
}

/// A partition of `0..len` into nonempty blocks, ordered by least element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    #[serde(skip)]
    block_of: Vec<usize>,
}

impl Partition {
    pub fn from_blocks(len: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut block_of = vec![usize::MAX; len];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {b} is empty")));
            }
            for &v in block {
                if v >= len {
                    return Err(Error::InvalidPartition(format!("{v} is not in 0..{len}")));
                }
                if block_of[v] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("{v} lies in two blocks")));
                }
                block_of[v] = b;
            }
        }
        if let Some(v) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::InvalidPartition(format!("{v} is not covered")));
        }
        Ok(Self::from_labels(&block_of))
    }

    /// Partition into fibres of an arbitrary labelling.
    pub fn from_labels<T: Ord + Clone>(labels: &[T]) -> Self {
        let mut order: Vec<T> = Vec::new();
        let mut block_of = Vec::with_capacity(labels.len());
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (v, l) in labels.iter().enumerate() {
            let b = match order.iter().position(|o| o == l) {
                Some(b) => b,
                None => {
                    order.push(l.clone());
                    blocks.push(Vec::new());
                    order.len() - 1
                }
            };
            blocks[b].push(v);
            block_of.push(b);
        }
        Partition { blocks, block_of }
    }

    pub fn discrete(len: usize) -> Self {
        Partition { blocks: (0..len).map(|v| vec![v]).collect(), block_of: (0..len).collect() }
    }

    pub fn trivial(len: usize) -> Self {
        let blocks = if len == 0 { Vec::new() } else { vec![(0..len).collect()] };
        Partition { blocks, block_of: vec![0; len] }
    }

    pub fn len(&self) -> usize {
        self.block_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_of.is_empty()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_of(&self, v: usize) -> usize {
        self.block_of[v]
    }

    pub fn labels(&self) -> &[usize] {
        &self.block_of
    }
}

/// Block relations `s_1^P, …, s_m^P` over a partition, together with the
/// blocks that contain marked points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionRelationTuple {
    pub partition: Partition,
    pub relations: Vec<Vec<(usize, usize)>>,
    pub fixed_blocks: Vec<usize>,
}

impl PartitionRelationTuple {
    pub fn new(partition: Partition, relations: Vec<Vec<(usize, usize)>>, marked: &[usize]) -> Result<Self> {
        let k = partition.block_count();
        let mut relations = relations;
        for rel in relations.iter_mut() {
            if rel.iter().any(|&(b, c)| b >= k || c >= k) {
                return Err(Error::InvalidPartition("block relation references a missing block".into()));
            }
            rel.sort_unstable();
            rel.dedup();
        }
        let mut fixed_blocks = Vec::new();
        for &x in marked {
            if x >= partition.len() {
                return Err(Error::UnknownVertex(x));
            }
            fixed_blocks.push(partition.block_of(x));
        }
        fixed_blocks.sort_unstable();
        fixed_blocks.dedup();
        Ok(PartitionRelationTuple { partition, relations, fixed_blocks })
    }

    /// Whether every relation lies in `S_P`: surjective on blocks and looping
    /// at every block that holds a marked point.
    pub fn in_sp(&self) -> bool {
        let k = self.partition.block_count();
        self.relations.iter().all(|rel| {
            is_surjective_pairs(k, rel)
                && self.fixed_blocks.iter().all(|&b| rel.binary_search(&(b, b)).is_ok())
        })
    }
}

fn is_surjective_pairs(size: usize, rel: &[(usize, usize)]) -> bool {
    let mut has_out = vec![false; size];
    let mut has_in = vec![false; size];
    for &(u, v) in rel {
        has_out[u] = true;
        has_in[v] = true;
    }
    has_out.iter().zip(&has_in).all(|(&o, &i)| o && i)
}

/// Components of the symmetrised union graph over all relations.
pub fn connected_components(s: &FinStructure) -> Partition {
    let mut parent: Vec<usize> = (0..s.size()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for rel in s.relations() {
        for &(u, v) in rel {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let roots: Vec<usize> = (0..s.size()).map(|v| find(&mut parent, v)).collect();
    Partition::from_labels(&roots)
}

pub fn is_surjective_relation(s: &FinStructure, i: usize) -> Result<bool> {
    let rel = s.relation(i)?;
    Ok(is_surjective_pairs(s.size(), rel))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Fwd,
    Inv,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Fwd => write!(f, "fwd"),
            Direction::Inv => write!(f, "inv"),
        }
    }
}

/// In-degree exactly one and out-degree at least two.
fn outgoing(indeg: usize, outdeg: usize) -> bool {
    indeg == 1 && outdeg >= 2
}

/// Relation-direction pairs for which `v` is outgoing.
pub fn outgoing_classification(s: &FinStructure, v: usize) -> Result<BTreeSet<(usize, Direction)>> {
    s.check_vertex(v)?;
    let mut out = BTreeSet::new();
    for i in 0..s.m() {
        let indeg = s.in_neighbors(i, v).len();
        let outdeg = s.out_neighbors(i, v).len();
        if outgoing(indeg, outdeg) {
            out.insert((i, Direction::Fwd));
        }
        if outgoing(outdeg, indeg) {
            out.insert((i, Direction::Inv));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    F0,
    F,
    F0n,
    Fn,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "F0" => Ok(Family::F0),
            "F" => Ok(Family::F),
            "F0n" => Ok(Family::F0n),
            "Fn" => Ok(Family::Fn),
            other => Err(Error::Precondition(format!("unknown family `{other}`"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::F0 => "F0",
            Family::F => "F",
            Family::F0n => "F0n",
            Family::Fn => "Fn",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    In,
    Out,
}

/// First reason a structure fails a family predicate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Empty,
    ConstantsPresent { n: usize },
    NotSurjective { relation: usize, vertex: String, missing: Side },
    NotOutgoing { vertex: String },
    OutgoingTwice { vertex: String, roles: Vec<(usize, Direction)> },
    EdgeCondition { relation: usize, from: String, to: String },
    ConstantWithoutLoop { constant: usize, relation: usize },
    ConstantNotIsolated { constant: usize, neighbour: String },
    ConstantsCoincide { first: usize, second: usize },
    NoFreePart,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "structure is empty"),
            Violation::ConstantsPresent { n } => {
                write!(f, "family takes no constants but the structure has {n}")
            }
            Violation::NotSurjective { relation, vertex, missing } => {
                let side = match missing {
                    Side::In => "in",
                    Side::Out => "out",
                };
                write!(f, "relation {relation} not surjective: vertex {vertex} has no {side}-neighbour")
            }
            Violation::NotOutgoing { vertex } => {
                write!(f, "vertex {vertex} is outgoing for no relation or converse (no vertex outgoing)")
            }
            Violation::OutgoingTwice { vertex, roles } => {
                write!(f, "vertex {vertex} is outgoing for {} relations or converses", roles.len())
            }
            Violation::EdgeCondition { relation, from, to } => write!(
                f,
                "edge ({from}, {to}) of relation {relation} has neither an outgoing source nor an inverse-outgoing target"
            ),
            Violation::ConstantWithoutLoop { constant, relation } => {
                write!(f, "constant p{} has no loop in relation {relation}", constant + 1)
            }
            Violation::ConstantNotIsolated { constant, neighbour } => {
                write!(f, "constant p{} is joined to {neighbour}", constant + 1)
            }
            Violation::ConstantsCoincide { first, second } => {
                write!(f, "constants p{} and p{} coincide", first + 1, second + 1)
            }
            Violation::NoFreePart => write!(f, "no vertices besides the constants"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family: Family,
    pub member: bool,
    pub violation: Option<Violation>,
}

impl FamilyReport {
    fn from(family: Family, res: std::result::Result<(), Violation>) -> Self {
        match res {
            Ok(()) => FamilyReport { family, member: true, violation: None },
            Err(v) => FamilyReport { family, member: false, violation: Some(v) },
        }
    }
}

fn check_f0(s: &FinStructure) -> std::result::Result<(), Violation> {
    if s.size() == 0 {
        return Err(Violation::Empty);
    }
    for i in 0..s.m() {
        for v in 0..s.size() {
            let missing = if s.in_neighbors(i, v).is_empty() {
                Some(Side::In)
            } else if s.out_neighbors(i, v).is_empty() {
                Some(Side::Out)
            } else {
                None
            };
            if let Some(missing) = missing {
                return Err(Violation::NotSurjective { relation: i, vertex: s.name(v).into(), missing });
            }
        }
    }
    Ok(())
}

/// Conditions (1) and (2) of F restricted to the vertices in `domain`.
fn check_f_conditions(s: &FinStructure, domain: &[usize]) -> std::result::Result<(), Violation> {
    for &v in domain {
        let roles = outgoing_classification(s, v).expect("vertex in range");
        match roles.len() {
            1 => {}
            0 => return Err(Violation::NotOutgoing { vertex: s.name(v).into() }),
            _ => {
                return Err(Violation::OutgoingTwice {
                    vertex: s.name(v).into(),
                    roles: roles.into_iter().collect(),
                })
            }
        }
    }
    let mut in_domain = vec![false; s.size()];
    for &v in domain {
        in_domain[v] = true;
    }
    for i in 0..s.m() {
        for &(a, b) in s.relations()[i].iter() {
            if !in_domain[a] {
                continue;
            }
            let src = outgoing(s.in_neighbors(i, a).len(), s.out_neighbors(i, a).len());
            let dst = outgoing(s.out_neighbors(i, b).len(), s.in_neighbors(i, b).len());
            if !src && !dst {
                return Err(Violation::EdgeCondition {
                    relation: i,
                    from: s.name(a).into(),
                    to: s.name(b).into(),
                });
            }
        }
    }
    Ok(())
}

fn check_constant_loops(s: &FinStructure) -> std::result::Result<(), Violation> {
    for (j, &c) in s.constants().iter().enumerate() {
        for i in 0..s.m() {
            if !s.has_edge(i, c, c) {
                return Err(Violation::ConstantWithoutLoop { constant: j, relation: i });
            }
        }
    }
    Ok(())
}

/// Checks the shape `A^(n)`: distinct constants, each a singleton component
/// carrying a loop in every relation, and a nonempty remainder.
fn check_expansion_shape(s: &FinStructure) -> std::result::Result<(), Violation> {
    check_constant_loops(s)?;
    let cs = s.constants();
    for (a, &ca) in cs.iter().enumerate() {
        if let Some(b) = cs[..a].iter().position(|&cb| cb == ca) {
            return Err(Violation::ConstantsCoincide { first: b, second: a });
        }
        for i in 0..s.m() {
            let nb = s
                .out_neighbors(i, ca)
                .iter()
                .chain(s.in_neighbors(i, ca))
                .find(|&&w| w != ca);
            if let Some(&w) = nb {
                return Err(Violation::ConstantNotIsolated { constant: a, neighbour: s.name(w).into() });
            }
        }
    }
    if cs.len() == s.size() {
        return Err(Violation::NoFreePart);
    }
    Ok(())
}

/// Membership of `s` in one of the four families, with the first violation.
pub fn in_family(s: &FinStructure, family: Family) -> FamilyReport {
    let res = match family {
        Family::F0 | Family::F if s.n() > 0 => Err(Violation::ConstantsPresent { n: s.n() }),
        Family::F0 => check_f0(s),
        Family::F => check_f0(s).and_then(|_| check_f_conditions(s, &(0..s.size()).collect::<Vec<_>>())),
        Family::F0n => check_f0(s).and_then(|_| check_constant_loops(s)),
        Family::Fn => check_f0(s).and_then(|_| check_expansion_shape(s)).and_then(|_| {
            let free: Vec<usize> = (0..s.size()).filter(|v| !s.constants().contains(v)).collect();
            check_f_conditions(s, &free)
        }),
    };
    FamilyReport::from(family, res)
}

/// `A^(k)`: `k` fresh loop-only vertices appended as constants `p_1 … p_k`.
pub fn expand_constants(s: &FinStructure, k: usize) -> Result<FinStructure> {
    if s.n() > 0 {
        return Err(Error::HasConstants(s.n()));
    }
    let base = s.size();
    let mut names = s.names().to_vec();
    for j in 0..k {
        let mut name = format!("p{}", j + 1);
        while names.contains(&name) {
            name.push('\'');
        }
        names.push(name);
    }
    let relations = s
        .relations()
        .iter()
        .map(|rel| {
            let mut rel = rel.clone();
            rel.extend((base..base + k).map(|c| (c, c)));
            rel
        })
        .collect();
    FinStructure::with_names(names, relations, (base..base + k).collect())
}

/// Image structure on the blocks of `p` with the natural projection.
pub fn quotient(s: &FinStructure, p: &Partition) -> Result<(FinStructure, StructMap)> {
    if p.len() != s.size() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} points, structure has {}",
            p.len(),
            s.size()
        )));
    }
    let cs = s.constants();
    for a in 0..cs.len() {
        for b in 0..a {
            if cs[a] != cs[b] && p.block_of(cs[a]) == p.block_of(cs[b]) {
                return Err(Error::ConstantsMerged(b, a));
            }
        }
    }
    let relations = s
        .relations()
        .iter()
        .map(|rel| rel.iter().map(|&(u, v)| (p.block_of(u), p.block_of(v))).collect())
        .collect();
    let names = p
        .blocks()
        .iter()
        .map(|b| {
            if b.len() == 1 {
                s.name(b[0]).to_string()
            } else {
                let parts: Vec<&str> = b.iter().map(|&v| s.name(v)).collect();
                format!("{{{}}}", parts.join(","))
            }
        })
        .collect();
    let constants = cs.iter().map(|&c| p.block_of(c)).collect();
    let q = FinStructure::with_names(names, relations, constants)?;
    let proj = StructMap::new(s.clone(), q.clone(), p.labels().to_vec())?;
    Ok((q, proj))
}

fn check_bijection(f: &[usize]) -> Result<()> {
    let mut seen = vec![false; f.len()];
    for &y in f {
        if y >= f.len() || seen[y] {
            return Err(Error::NotBijective);
        }
        seen[y] = true;
    }
    Ok(())
}

/// `f↾P = {(b, c) : f(b) ∩ c ≠ ∅}`.
pub fn restrict_map_to_partition(f: &[usize], p: &Partition) -> Result<Vec<(usize, usize)>> {
    check_bijection(f)?;
    if f.len() != p.len() {
        return Err(Error::InvalidPartition("partition and map sizes differ".into()));
    }
    let rel: BTreeSet<(usize, usize)> =
        (0..f.len()).map(|x| (p.block_of(x), p.block_of(f[x]))).collect();
    Ok(rel.into_iter().collect())
}

/// Whether the tuple `h` lies in the basic open set `[P, s]`.
pub fn in_basic_open(h: &[Vec<usize>], marked: &[usize], s: &PartitionRelationTuple) -> Result<bool> {
    if h.len() != s.relations.len() {
        return Err(Error::ArityMismatch(s.relations.len(), 0, h.len(), 0));
    }
    for f in h {
        check_bijection(f)?;
        if let Some(&x) = marked.iter().find(|&&x| f.get(x) != Some(&x)) {
            return Err(Error::MarkedPointMoved(x));
        }
    }
    for (f, rel) in h.iter().zip(&s.relations) {
        if restrict_map_to_partition(f, &s.partition)? != *rel {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spirals::make_spiral;

    fn xy() -> FinStructure {
        FinStructure::two_point_f_example()
    }

    #[test]
    fn edgeless_components_are_singletons() {
        let s = FinStructure::new(2, vec![vec![]], vec![]).unwrap();
        assert_eq!(connected_components(&s).block_count(), 2);
    }

    #[test]
    fn spiral_is_one_component() {
        let s = make_spiral(2, 1, 2).unwrap();
        let p = connected_components(s.structure());
        assert_eq!(p.blocks(), &[vec![0, 1, 2]]);
    }

    #[test]
    fn expanded_constant_is_its_own_component() {
        let s = expand_constants(&xy(), 1).unwrap();
        let p = connected_components(&s);
        let c = s.constants()[0];
        assert_eq!(p.blocks()[p.block_of(c)], vec![c]);
    }

    #[test]
    fn surjectivity_examples() {
        let l = FinStructure::loop_point(1);
        assert!(is_surjective_relation(&l, 0).unwrap());
        let path = FinStructure::new(2, vec![vec![(0, 1)]], vec![]).unwrap();
        assert!(!is_surjective_relation(&path, 0).unwrap());
        assert!(is_surjective_relation(&l, 1).is_err());
    }

    #[test]
    fn outgoing_examples() {
        let l = FinStructure::loop_point(1);
        assert!(outgoing_classification(&l, 0).unwrap().is_empty());
        let s = xy();
        assert_eq!(outgoing_classification(&s, 0).unwrap().into_iter().collect::<Vec<_>>(), vec![(0, Direction::Fwd)]);
        assert_eq!(outgoing_classification(&s, 1).unwrap().into_iter().collect::<Vec<_>>(), vec![(0, Direction::Inv)]);
        assert!(outgoing_classification(&s, 2).is_err());
        // a_2 = b_1 = c_1 of S(2,1,2): in-degree 2, out-degree 2.
        let sp = make_spiral(2, 1, 2).unwrap();
        let junction = sp.a(2);
        assert!(outgoing_classification(sp.structure(), junction).unwrap().is_empty());
    }

    #[test]
    fn family_examples() {
        let two = FinStructure::directed_cycle(2);
        assert!(in_family(&two, Family::F0).member);
        let r = in_family(&two, Family::F);
        assert!(!r.member);
        assert!(matches!(r.violation, Some(Violation::NotOutgoing { .. })));
        assert!(in_family(&xy(), Family::F).member);
        let e = expand_constants(&xy(), 2).unwrap();
        assert!(in_family(&e, Family::Fn).member);
        assert!(in_family(&e, Family::F0n).member);
        assert!(!in_family(&e, Family::F).member);
    }

    #[test]
    fn f0n_only_needs_loops_at_constants() {
        // Constant 0 of the 2-cycle-with-loops is not isolated: F0n yes, Fn no.
        let s = FinStructure::new(2, vec![vec![(0, 0), (0, 1), (1, 0)]], vec![0]).unwrap();
        assert!(in_family(&s, Family::F0n).member);
        let r = in_family(&s, Family::Fn);
        assert!(matches!(r.violation, Some(Violation::ConstantNotIsolated { .. })));
        let no_loop = FinStructure::new(2, vec![vec![(0, 1), (1, 0)]], vec![0]).unwrap();
        assert!(matches!(
            in_family(&no_loop, Family::F0n).violation,
            Some(Violation::ConstantWithoutLoop { .. })
        ));
    }

    #[test]
    fn empty_relations_fail_families() {
        let s = FinStructure::new(2, vec![vec![(0, 1), (1, 0)], vec![]], vec![]).unwrap();
        assert!(!in_family(&s, Family::F0).member);
    }

    #[test]
    fn expansion_counts() {
        let s = FinStructure::directed_cycle(2);
        assert_eq!(expand_constants(&s, 0).unwrap(), s);
        let e = expand_constants(&s, 3).unwrap();
        assert_eq!(e.size(), 5);
        assert_eq!(e.n(), 3);
        let p = connected_components(&e);
        for &c in e.constants() {
            assert_eq!(p.blocks()[p.block_of(c)].len(), 1);
            assert!(e.has_edge(0, c, c));
        }
        assert!(expand_constants(&e, 1).is_err());
    }

    #[test]
    fn quotient_examples() {
        let sp = make_spiral(2, 1, 2).unwrap();
        let s = sp.structure();
        let (q, proj) = quotient(s, &Partition::discrete(3)).unwrap();
        assert_eq!(q.relations(), s.relations());
        assert!(crate::maps::check_epimorphism(&proj).unwrap());

        let (q, _) = quotient(s, &Partition::trivial(3)).unwrap();
        assert_eq!(q.relations(), &[vec![(0, 0)]]);

        // {{a1}, {a2, c2}}
        let p = Partition::from_blocks(3, vec![vec![sp.a(1)], vec![sp.a(2), sp.c(2)]]).unwrap();
        let (q, _) = quotient(s, &p).unwrap();
        assert_eq!(q.relations(), &[vec![(0, 1), (1, 0), (1, 1)]]);
    }

    #[test]
    fn quotient_rejects_merged_constants() {
        let s = expand_constants(&xy(), 2).unwrap();
        let p = Partition::from_blocks(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(quotient(&s, &p).unwrap_err(), Error::ConstantsMerged(0, 1));
    }

    #[test]
    fn restriction_examples() {
        let p = Partition::from_blocks(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(restrict_map_to_partition(&[0, 1, 2, 3], &p).unwrap(), vec![(0, 0), (1, 1)]);
        let cycle = [1, 2, 3, 0];
        assert_eq!(
            restrict_map_to_partition(&cycle, &p).unwrap(),
            vec![(0, 0), (0, 1), (1, 0), (1, 1)]
        );
        assert_eq!(restrict_map_to_partition(&cycle, &Partition::trivial(4)).unwrap(), vec![(0, 0)]);
        assert_eq!(restrict_map_to_partition(&[0, 0, 1, 2], &p), Err(Error::NotBijective));
    }

    #[test]
    fn basic_open_examples() {
        let p = Partition::from_blocks(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let id = vec![0, 1, 2, 3];
        let diag = PartitionRelationTuple::new(p.clone(), vec![vec![(0, 0), (1, 1)]], &[]).unwrap();
        assert!(in_basic_open(&[id.clone()], &[], &diag).unwrap());
        let off = PartitionRelationTuple::new(p.clone(), vec![vec![(0, 0), (0, 1), (1, 1)]], &[]).unwrap();
        assert!(!in_basic_open(&[id.clone()], &[], &off).unwrap());
        let cycle = vec![1, 2, 3, 0];
        let own = restrict_map_to_partition(&cycle, &p).unwrap();
        let t = PartitionRelationTuple::new(p.clone(), vec![own], &[]).unwrap();
        assert!(in_basic_open(&[cycle.clone()], &[], &t).unwrap());
        assert!(in_basic_open(&[cycle.clone(), id], &[], &t).is_err());
        assert_eq!(in_basic_open(&[cycle], &[0], &t), Err(Error::MarkedPointMoved(0)));
    }

    #[test]
    fn sp_membership_of_restrictions() {
        let p = Partition::from_blocks(4, vec![vec![0], vec![1, 2], vec![3]]).unwrap();
        let f = vec![0, 2, 3, 1];
        let rel = restrict_map_to_partition(&f, &p).unwrap();
        let t = PartitionRelationTuple::new(p, vec![rel], &[0]).unwrap();
        assert!(t.in_sp());
    }

    #[test]
    fn invalid_structures_rejected() {
        assert!(FinStructure::new(2, vec![vec![(0, 2)]], vec![]).is_err());
        assert!(FinStructure::new(2, vec![vec![]], vec![5]).is_err());
        assert!(FinStructure::new(2, vec![], vec![]).is_err());
        assert!(FinStructure::with_names(vec!["a".into(), "a".into()], vec![vec![]], vec![]).is_err());
    }
}
