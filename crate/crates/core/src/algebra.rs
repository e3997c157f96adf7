//! Finite algebras given by operation tables: idempotents, Mal'cev terms,
//! congruences, automorphisms, and (filtered) Boolean powers over a finite
//! atom set.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{perm_group_from_generators, FinGroup};
use crate::maps::SearchOutcome;
use crate::structures::Partition;

/// An operation of the given arity; `table` is row-major with the first
/// argument most significant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Operation {
    pub arity: usize,
    pub table: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinAlgebra {
    size: usize,
    ops: Vec<Operation>,
}

impl FinAlgebra {
    pub fn new(size: usize, ops: Vec<Operation>) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidAlgebra("empty universe".into()));
        }
        for (j, op) in ops.iter().enumerate() {
            let want = size
                .checked_pow(op.arity as u32)
                .ok_or_else(|| Error::InvalidAlgebra(format!("operation {j} is too large")))?;
            if op.table.len() != want {
                return Err(Error::InvalidAlgebra(format!(
                    "operation {j} of arity {} has {} entries, expected {want}",
                    op.arity,
                    op.table.len()
                )));
            }
            if let Some(&v) = op.table.iter().find(|&&v| v >= size) {
                return Err(Error::InvalidAlgebra(format!("operation {j} produces {v}, outside the universe")));
            }
        }
        Ok(FinAlgebra { size, ops })
    }

    /// Re-validates a deserialised value.
    pub fn validated(self) -> Result<Self> {
        FinAlgebra::new(self.size, self.ops)
    }

    /// A bare set: no operations.
    pub fn set(size: usize) -> Result<Self> {
        FinAlgebra::new(size, Vec::new())
    }

    /// A group as an algebra `(·, ⁻¹, 1)`.
    pub fn from_group(g: &FinGroup) -> Self {
        let n = g.order();
        let mul = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| g.mul(a, b)).collect();
        let inv = (0..n).map(|a| g.inv(a)).collect();
        FinAlgebra {
            size: n,
            ops: vec![
                Operation { arity: 2, table: mul },
                Operation { arity: 1, table: inv },
                Operation { arity: 0, table: vec![g.identity()] },
            ],
        }
    }

    /// Presets: `Z2`, `Z3`, `Z4`, `S3-as-group`, `2elt-semilattice`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "Z2" | "Z3" | "Z4" => Ok(FinAlgebra::from_group(&FinGroup::preset(name)?)),
            "S3-as-group" => Ok(FinAlgebra::from_group(&FinGroup::preset("S3")?)),
            "2elt-semilattice" => FinAlgebra::new(2, vec![Operation { arity: 2, table: vec![0, 0, 0, 1] }]),
            _ => Err(Error::InvalidAlgebra(format!("unknown preset `{name}`"))),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn ops(&self) -> &[Operation] {
        &self.ops
    }

    pub fn apply(&self, op: usize, args: &[usize]) -> usize {
        let o = &self.ops[op];
        debug_assert_eq!(args.len(), o.arity);
        o.table[args.iter().fold(0, |acc, &a| acc * self.size + a)]
    }

    fn check_element(&self, e: usize) -> Result<()> {
        if e < self.size {
            Ok(())
        } else {
            Err(Error::UnknownVertex(e))
        }
    }

    /// `{e}` is a subalgebra.
    pub fn is_idempotent(&self, e: usize) -> Result<bool> {
        self.check_element(e)?;
        Ok((0..self.ops.len()).all(|j| self.apply(j, &vec![e; self.ops[j].arity]) == e))
    }

    pub fn idempotents(&self) -> Vec<usize> {
        (0..self.size).filter(|&e| self.is_idempotent(e).unwrap()).collect()
    }

    /// Whether the permutation commutes with every operation.
    pub fn is_automorphism(&self, perm: &[usize]) -> bool {
        if perm.len() != self.size || !crate::groups::is_permutation(perm) {
            return false;
        }
        (0..self.ops.len()).all(|j| {
            let k = self.ops[j].arity;
            tuples(self.size, k).all(|args| {
                let mapped: Vec<usize> = args.iter().map(|&a| perm[a]).collect();
                self.apply(j, &mapped) == perm[self.apply(j, &args)]
            })
        })
    }
}

/// All `k`-tuples over `0..size` in lexicographic order.
pub fn tuples(size: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = size.pow(k as u32);
    (0..total).map(move |mut idx| {
        let mut t = vec![0; k];
        for slot in t.iter_mut().rev() {
            *slot = idx % size;
            idx /= size;
        }
        t
    })
}

fn is_malcev(size: usize, m: &[usize]) -> bool {
    let at = |x: usize, y: usize, z: usize| m[(x * size + y) * size + z];
    (0..size).all(|x| (0..size).all(|y| at(x, x, y) == y && at(y, x, x) == y))
}

pub const DEFAULT_CLONE_CAP: usize = 20_000;

/// Searches the ternary term operations for a Mal'cev operation.
///
/// The ternary clone is generated from the three projections inside
/// `A^(A³)`; `Exhausted` means it grew past `size_cap` before a witness
/// turned up or the closure finished.
pub fn malcev_term_exists(a: &FinAlgebra, size_cap: usize) -> SearchOutcome<Vec<usize>> {
    let n = a.size;
    let points: Vec<Vec<usize>> = tuples(n, 3).collect();
    let mut elems: Vec<Vec<usize>> = (0..3).map(|c| points.iter().map(|p| p[c]).collect()).collect();
    let mut seen: HashSet<Vec<usize>> = elems.iter().cloned().collect();
    for e in &elems {
        if is_malcev(n, e) {
            return SearchOutcome::Found(e.clone());
        }
    }
    // semi-naive closure: each round only combines tuples touching new elements
    let mut frontier = 0;
    loop {
        let old_len = elems.len();
        for (j, op) in a.ops.iter().enumerate() {
            let k = op.arity;
            let count = old_len.pow(k as u32);
            for combo in 0..count {
                let mut idx = combo;
                let mut args = vec![0; k];
                for slot in args.iter_mut().rev() {
                    *slot = idx % old_len;
                    idx /= old_len;
                }
                if k > 0 && args.iter().all(|&x| x < frontier) {
                    continue;
                }
                if k == 0 && frontier > 0 {
                    continue;
                }
                let f: Vec<usize> = (0..points.len())
                    .map(|p| {
                        let vals: Vec<usize> = args.iter().map(|&x| elems[x][p]).collect();
                        a.apply(j, &vals)
                    })
                    .collect();
                if seen.insert(f.clone()) {
                    if is_malcev(n, &f) {
                        return SearchOutcome::Found(f);
                    }
                    elems.push(f);
                    if elems.len() > size_cap {
                        return SearchOutcome::Exhausted;
                    }
                }
            }
        }
        if elems.len() == old_len {
            return SearchOutcome::NoWitness;
        }
        frontier = old_len;
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.0[hi] = lo;
        true
    }

    fn labels(&mut self) -> Vec<usize> {
        let n = self.0.len();
        let roots: Vec<usize> = (0..n).map(|x| self.find(x)).collect();
        canonical(&roots)
    }
}

/// Relabels by order of first occurrence.
fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Smallest congruence containing the given pairs, as canonical labels.
fn generate_congruence(a: &FinAlgebra, pairs: &[(usize, usize)]) -> Vec<usize> {
    let mut uf = UnionFind::new(a.size);
    let mut queue: Vec<(usize, usize)> = Vec::new();
    for &(x, y) in pairs {
        if uf.union(x, y) {
            queue.push((x, y));
        }
    }
    while let Some((x, y)) = queue.pop() {
        for (j, op) in a.ops.iter().enumerate() {
            let k = op.arity;
            for pos in 0..k {
                for rest in tuples(a.size, k - 1) {
                    let mut args = rest.clone();
                    args.insert(pos, x);
                    let fx = a.apply(j, &args);
                    args[pos] = y;
                    let fy = a.apply(j, &args);
                    if uf.union(fx, fy) {
                        queue.push((fx, fy));
                    }
                }
            }
        }
    }
    uf.labels()
}

/// `Cg(a, b)`.
pub fn principal_congruence(a: &FinAlgebra, x: usize, y: usize) -> Result<Partition> {
    a.check_element(x)?;
    a.check_element(y)?;
    Ok(Partition::from_labels(&generate_congruence(a, &[(x, y)])))
}

/// All congruences: Δ together with the join-closure of the principal ones.
pub fn congruence_lattice(a: &FinAlgebra) -> Vec<Partition> {
    let mut all: BTreeSet<Vec<usize>> = BTreeSet::new();
    all.insert((0..a.size).collect());
    let mut principal = BTreeSet::new();
    for x in 0..a.size {
        for y in x + 1..a.size {
            principal.insert(generate_congruence(a, &[(x, y)]));
        }
    }
    all.extend(principal.iter().cloned());
    loop {
        let current: Vec<Vec<usize>> = all.iter().cloned().collect();
        let mut added = false;
        for c in &current {
            for p in &principal {
                let j = join(c, p);
                added |= all.insert(j);
            }
        }
        if !added {
            break;
        }
    }
    all.iter().map(|l| Partition::from_labels(l)).collect()
}

fn join(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut uf = UnionFind::new(a.len());
    for labels in [a, b] {
        let mut first = std::collections::HashMap::new();
        for (x, &l) in labels.iter().enumerate() {
            let r = *first.entry(l).or_insert(x);
            uf.union(r, x);
        }
    }
    uf.labels()
}

/// More than one element and no congruences besides Δ and the total one.
pub fn is_simple(a: &FinAlgebra) -> Result<bool> {
    if a.size < 2 {
        return Err(Error::Precondition("simplicity needs more than one element".into()));
    }
    Ok((0..a.size).all(|x| (x + 1..a.size).all(|y| generate_congruence(a, &[(x, y)]).iter().all(|&l| l == 0))))
}

pub const DEFAULT_AUT_CAP: usize = 8;

/// Lexicographic successor permutation; false at the last one.
fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else { return false };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// `Aut A` by brute force over all permutations of the universe.
pub fn automorphisms(a: &FinAlgebra, size_cap: usize) -> Result<FinGroup> {
    if a.size > size_cap {
        return Err(Error::CapExceeded(format!("universe of size {} exceeds cap {size_cap}", a.size)));
    }
    let mut p: Vec<usize> = (0..a.size).collect();
    let mut auts = Vec::new();
    loop {
        if a.is_automorphism(&p) {
            auts.push(p.clone());
        }
        if !next_permutation(&mut p) {
            break;
        }
    }
    let g = perm_group_from_generators(a.size, &auts)?;
    debug_assert!(g.perms().unwrap().iter().all(|q| a.is_automorphism(q)));
    Ok(g)
}

/// Points `0..x_size` of the atom set, pinned points and their values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BooleanPowerSpace {
    pub x_size: usize,
    pub marked: Vec<usize>,
    pub pins: Vec<usize>,
}

impl BooleanPowerSpace {
    pub fn new(x_size: usize, marked: Vec<usize>, pins: Vec<usize>) -> Result<Self> {
        if x_size == 0 {
            return Err(Error::Precondition("empty atom set".into()));
        }
        if marked.len() != pins.len() {
            return Err(Error::ShapeMismatch(format!("{} marked points but {} pins", marked.len(), pins.len())));
        }
        if let Some(&x) = marked.iter().find(|&&x| x >= x_size) {
            return Err(Error::UnknownVertex(x));
        }
        let distinct: BTreeSet<usize> = marked.iter().copied().collect();
        if distinct.len() != marked.len() {
            return Err(Error::Precondition("marked points must be distinct".into()));
        }
        Ok(BooleanPowerSpace { x_size, marked, pins })
    }

    pub fn unpinned(x_size: usize) -> Result<Self> {
        BooleanPowerSpace::new(x_size, Vec::new(), Vec::new())
    }

    pub fn is_marked(&self, x: usize) -> bool {
        self.marked.contains(&x)
    }

    /// Functions `X -> A` respecting the pins, in lexicographic order.
    pub fn functions(&self, a_size: usize) -> Vec<Vec<usize>> {
        tuples(a_size, self.x_size)
            .filter(|f| self.marked.iter().zip(&self.pins).all(|(&x, &e)| f[x] == e))
            .collect()
    }
}

/// A filtered power with its universe listed as functions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerAlgebra {
    pub algebra: FinAlgebra,
    /// `functions[k]` is element `k`.
    pub functions: Vec<Vec<usize>>,
}

impl PowerAlgebra {
    pub fn index_of(&self, f: &[usize]) -> Option<usize> {
        self.functions.binary_search_by(|g| g.as_slice().cmp(f)).ok()
    }
}

pub const DEFAULT_TABLE_CAP: usize = 5_000_000;

fn pointwise(a: &FinAlgebra, functions: Vec<Vec<usize>>, table_cap: usize) -> Result<PowerAlgebra> {
    let size = functions.len();
    let mut ops = Vec::with_capacity(a.ops.len());
    for (j, op) in a.ops.iter().enumerate() {
        let entries = size.checked_pow(op.arity as u32).filter(|&e| e <= table_cap);
        if entries.is_none() {
            return Err(Error::CapExceeded(format!("operation {j} would need {size}^{} entries", op.arity)));
        }
        let mut table = Vec::with_capacity(entries.unwrap());
        let provisional = PowerAlgebra { algebra: FinAlgebra { size, ops: Vec::new() }, functions: functions.clone() };
        for args in tuples(size, op.arity) {
            let x_size = functions.first().map_or(0, Vec::len);
            let out: Vec<usize> = (0..x_size)
                .map(|x| {
                    let vals: Vec<usize> = args.iter().map(|&k| functions[k][x]).collect();
                    a.apply(j, &vals)
                })
                .collect();
            let k = provisional
                .index_of(&out)
                .ok_or_else(|| Error::Precondition(format!("operation {j} leaves the pinned set")))?;
            table.push(k);
        }
        ops.push(Operation { arity: op.arity, table });
    }
    Ok(PowerAlgebra { algebra: FinAlgebra::new(size, ops)?, functions })
}

/// `A^X` with pointwise operations.
pub fn boolean_power(a: &FinAlgebra, x_size: usize) -> Result<PowerAlgebra> {
    let space = BooleanPowerSpace::unpinned(x_size)?;
    pointwise(a, space.functions(a.size), DEFAULT_TABLE_CAP)
}

/// The subalgebra of `A^X` pinned at the marked points; every pin must be an
/// idempotent.
pub fn filtered_boolean_power(a: &FinAlgebra, space: &BooleanPowerSpace) -> Result<PowerAlgebra> {
    for (&x, &e) in space.marked.iter().zip(&space.pins) {
        if !a.is_idempotent(e)? {
            return Err(Error::NonIdempotentPin { point: x, element: e });
        }
    }
    pointwise(a, space.functions(a.size), DEFAULT_TABLE_CAP)
}

/// An operation application on pinned functions whose result breaks a pin.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureViolation {
    pub op: usize,
    pub args: Vec<Vec<usize>>,
    pub result: Vec<usize>,
    pub point: usize,
}

/// Scans every operation over every argument tuple of pinned functions and
/// returns the first result violating a pin, if any.
pub fn closure_violation(a: &FinAlgebra, space: &BooleanPowerSpace) -> Option<ClosureViolation> {
    let funcs = space.functions(a.size);
    for (j, op) in a.ops.iter().enumerate() {
        for args in tuples(funcs.len(), op.arity) {
            let result: Vec<usize> = (0..space.x_size)
                .map(|x| {
                    let vals: Vec<usize> = args.iter().map(|&k| funcs[k][x]).collect();
                    a.apply(j, &vals)
                })
                .collect();
            if let Some((&x, _)) = space.marked.iter().zip(&space.pins).find(|(&x, &e)| result[x] != e) {
                return Some(ClosureViolation {
                    op: j,
                    args: args.iter().map(|&k| funcs[k].clone()).collect(),
                    result,
                    point: x,
                });
            }
        }
    }
    None
}
