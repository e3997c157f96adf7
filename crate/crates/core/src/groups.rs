//! Finite groups as Cayley tables, group-valued labellings and permutation
//! actions.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinGroup {
    order: usize,
    table: Vec<usize>,
    identity: usize,
    inverse: Vec<usize>,
    /// Concrete permutations when the group was built from generators.
    perms: Option<Vec<Vec<usize>>>,
}

/// Serialised form `{order, table}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CayleyTable {
    pub order: usize,
    pub table: Vec<Vec<usize>>,
}

impl FinGroup {
    /// Validates a Cayley table: closure, associativity, identity, inverses.
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Self> {
        let order = table.len();
        if order == 0 {
            return Err(Error::InvalidGroup("empty table".into()));
        }
        if table.iter().any(|row| row.len() != order || row.iter().any(|&x| x >= order)) {
            return Err(Error::InvalidGroup("table is not a square table over 0..order".into()));
        }
        let flat: Vec<usize> = table.into_iter().flatten().collect();
        let mul = |a: usize, b: usize| flat[a * order + b];
        let identity = (0..order)
            .find(|&e| (0..order).all(|x| mul(e, x) == x && mul(x, e) == x))
            .ok_or_else(|| Error::InvalidGroup("no identity element".into()))?;
        let mut inverse = vec![0; order];
        for (x, inv) in inverse.iter_mut().enumerate() {
            *inv = (0..order)
                .find(|&y| mul(x, y) == identity && mul(y, x) == identity)
                .ok_or_else(|| Error::InvalidGroup(format!("element {x} has no inverse")))?;
        }
        for a in 0..order {
            for b in 0..order {
                for c in 0..order {
                    if mul(mul(a, b), c) != mul(a, mul(b, c)) {
                        return Err(Error::InvalidGroup(format!("associativity fails on ({a},{b},{c})")));
                    }
                }
            }
        }
        Ok(FinGroup { order, table: flat, identity, inverse, perms: None })
    }

    pub fn from_cayley(t: &CayleyTable) -> Result<Self> {
        if t.order != t.table.len() {
            return Err(Error::InvalidGroup(format!("order {} but {} rows", t.order, t.table.len())));
        }
        FinGroup::from_table(t.table.clone())
    }

    pub fn to_cayley(&self) -> CayleyTable {
        CayleyTable { order: self.order, table: self.table.chunks(self.order).map(<[usize]>::to_vec).collect() }
    }

    pub fn trivial() -> Self {
        FinGroup { order: 1, table: vec![0], identity: 0, inverse: vec![0], perms: None }
    }

    /// Additive `Z_k`; element `j` is the residue `j`.
    pub fn cyclic(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidGroup("Z_0".into()));
        }
        let table = (0..k).flat_map(|a| (0..k).map(move |b| (a + b) % k)).collect();
        let inverse = (0..k).map(|a| (k - a) % k).collect();
        Ok(FinGroup { order: k, table, identity: 0, inverse, perms: None })
    }

    /// Named presets: `Z1`..`Z9`, `S3`, `A4`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "S3" => perm_group_from_generators(3, &[vec![1, 0, 2], vec![1, 2, 0]]),
            "A4" => perm_group_from_generators(4, &[vec![1, 2, 0, 3], vec![1, 0, 3, 2]]),
            _ => match name.strip_prefix('Z').and_then(|k| k.parse::<usize>().ok()) {
                Some(k) if k >= 1 => FinGroup::cyclic(k),
                _ => Err(Error::InvalidGroup(format!("unknown preset `{name}`"))),
            },
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn pow(&self, a: usize, k: usize) -> usize {
        (0..k).fold(self.identity, |acc, _| self.mul(acc, a))
    }

    pub fn perms(&self) -> Option<&[Vec<usize>]> {
        self.perms.as_deref()
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order
    }

    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != self.identity {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    /// Least `t >= 1` with `g^t = 1` for every `g`.
    pub fn exponent(&self) -> usize {
        self.elements().map(|a| self.element_order(a)).fold(1, lcm)
    }

    /// Left-to-right product of a nonempty sequence.
    pub fn product_along(&self, labels: &[usize]) -> Result<usize> {
        let (&first, rest) = labels
            .split_first()
            .ok_or_else(|| Error::Precondition("product of an empty sequence".into()))?;
        Ok(rest.iter().fold(first, |acc, &x| self.mul(acc, x)))
    }

    /// Subgroup generated by `gens`, as a sorted element list.
    pub fn closure(&self, gens: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.order];
        seen[self.identity] = true;
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            for &g in gens {
                let y = self.mul(x, g);
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        (0..self.order).filter(|&x| seen[x]).collect()
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.gen_range(0..self.order)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

pub fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&x| x < p.len() && !std::mem::replace(&mut seen[x], true))
}

/// `(g ∘ h)(x) = g(h(x))`.
pub fn compose(g: &[usize], h: &[usize]) -> Vec<usize> {
    h.iter().map(|&x| g[x]).collect()
}

pub fn invert(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (x, &y) in p.iter().enumerate() {
        inv[y] = x;
    }
    inv
}

/// Closure of the generators under composition. Element 0 is the identity
/// and the product is `g * h = g ∘ h`, so the group acts on the left.
pub fn perm_group_from_generators(degree: usize, gens: &[Vec<usize>]) -> Result<FinGroup> {
    for g in gens {
        if g.len() != degree {
            return Err(Error::InvalidGroup(format!("generator of degree {} in a group of degree {degree}", g.len())));
        }
        if !is_permutation(g) {
            return Err(Error::InvalidGroup(format!("{g:?} is not a permutation")));
        }
    }
    let id: Vec<usize> = (0..degree).collect();
    let mut index: BTreeMap<Vec<usize>, usize> = BTreeMap::from([(id.clone(), 0)]);
    let mut elems = vec![id];
    let mut k = 0;
    while k < elems.len() {
        for g in gens {
            let y = compose(g, &elems[k]);
            if !index.contains_key(&y) {
                index.insert(y.clone(), elems.len());
                elems.push(y);
            }
        }
        k += 1;
    }
    let order = elems.len();
    let mut table = Vec::with_capacity(order * order);
    for a in &elems {
        for b in &elems {
            table.push(index[&compose(a, b)]);
        }
    }
    let inverse = elems.iter().map(|a| index[&invert(a)]).collect();
    Ok(FinGroup { order, table, identity: 0, inverse, perms: Some(elems) })
}

/// Group-valued labelling of a vertex set: a `width`-tuple per vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labelling {
    pub width: usize,
    pub values: Vec<Vec<usize>>,
}

impl Labelling {
    pub fn new(width: usize, values: Vec<Vec<usize>>, group: &FinGroup) -> Result<Self> {
        if width == 0 {
            return Err(Error::ShapeMismatch("labelling of width 0".into()));
        }
        for (v, t) in values.iter().enumerate() {
            if t.len() != width {
                return Err(Error::ShapeMismatch(format!("vertex {v} carries {} labels, expected {width}", t.len())));
            }
            if let Some(&g) = t.iter().find(|&&g| g >= group.order()) {
                return Err(Error::ShapeMismatch(format!("label {g} at vertex {v} is not a group element")));
            }
        }
        Ok(Labelling { width, values })
    }

    /// Width-1 labelling.
    pub fn scalar(values: Vec<usize>) -> Self {
        Labelling { width: 1, values: values.into_iter().map(|g| vec![g]).collect() }
    }

    pub fn constant(len: usize, width: usize, g: usize) -> Self {
        Labelling { width, values: vec![vec![g; width]; len] }
    }

    pub fn random<R: Rng + ?Sized>(len: usize, width: usize, group: &FinGroup, rng: &mut R) -> Self {
        Labelling {
            width,
            values: (0..len).map(|_| (0..width).map(|_| group.random_element(rng)).collect()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, v: usize, i: usize) -> usize {
        self.values[v][i]
    }

    /// The sole label of a width-1 labelling.
    pub fn scalar_at(&self, v: usize) -> usize {
        self.values[v][0]
    }
}

/// A permutation action of a group on `0..degree`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupAction {
    group: FinGroup,
    degree: usize,
    perms: Vec<Vec<usize>>,
}

impl GroupAction {
    /// Checks that `perms[g]` are permutations forming a faithful left
    /// action: `perm(g h) = perm(g) ∘ perm(h)`.
    pub fn new(group: FinGroup, degree: usize, perms: Vec<Vec<usize>>) -> Result<Self> {
        if perms.len() != group.order() {
            return Err(Error::ShapeMismatch(format!("{} permutations for a group of order {}", perms.len(), group.order())));
        }
        if perms.iter().any(|p| p.len() != degree || !is_permutation(p)) {
            return Err(Error::NotBijective);
        }
        for a in group.elements() {
            for b in group.elements() {
                if perms[group.mul(a, b)] != compose(&perms[a], &perms[b]) {
                    return Err(Error::Precondition(format!("action is not a homomorphism at ({a},{b})")));
                }
            }
        }
        for a in group.elements() {
            for b in 0..a {
                if perms[a] == perms[b] {
                    return Err(Error::NotFaithful);
                }
            }
        }
        Ok(GroupAction { group, degree, perms })
    }

    /// The natural action of a permutation group on its points.
    pub fn natural(group: FinGroup) -> Result<Self> {
        let perms = group
            .perms()
            .ok_or_else(|| Error::Precondition("group carries no permutations".into()))?
            .to_vec();
        let degree = perms[0].len();
        GroupAction::new(group, degree, perms)
    }

    /// Named presets: `z2-flip` (Z2 swapping 0 and 1), `z2-transposition`
    /// (Z2 swapping 1 and 2 on three points), `z3-rotation`, `s3-natural`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "z2-flip" => GroupAction::new(FinGroup::cyclic(2)?, 2, vec![vec![0, 1], vec![1, 0]]),
            "z2-transposition" => GroupAction::new(FinGroup::cyclic(2)?, 3, vec![vec![0, 1, 2], vec![0, 2, 1]]),
            "z3-rotation" => {
                GroupAction::new(FinGroup::cyclic(3)?, 3, (0..3).map(|k| (0..3).map(|x| (x + k) % 3).collect()).collect())
            }
            "s3-natural" => GroupAction::natural(FinGroup::preset("S3")?),
            _ => Err(Error::InvalidGroup(format!("unknown action preset `{name}`"))),
        }
    }

    pub fn group(&self) -> &FinGroup {
        &self.group
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn perm(&self, g: usize) -> &[usize] {
        &self.perms[g]
    }

    pub fn act(&self, g: usize, x: usize) -> usize {
        self.perms[g][x]
    }

    /// Points fixed by every group element.
    pub fn fixed_points(&self) -> Vec<usize> {
        (0..self.degree).filter(|&x| self.perms.iter().all(|p| p[x] == x)).collect()
    }
}
