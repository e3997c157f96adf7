//! Automorphisms of a finite filtered power `D ⊆ A^X`: point shuffles `h̄`
//! (`f ↦ f ∘ h⁻¹`), pointwise maps `ψ̂` (`x ↦ ψ(x)(f(x))`), their normal
//! form `d̄ ψ̂`, and the QP conjugator turning translates into conjugates.

use serde::{Deserialize, Serialize};

use crate::algebra::{tuples, BooleanPowerSpace, FinAlgebra};
use crate::error::{Error, Result};
use crate::groups::{compose, invert, is_permutation, GroupAction, Labelling};
use crate::maps::{check_homomorphism, StructMap};
use crate::spirals::{make_spiral, spiral_qp_labelling, verify_qp, QpWitness};
use crate::structures::{FinStructure, Partition};

/// Cap on `|D|` for exhaustive evaluation.
pub const DEFAULT_D_CAP: usize = 6561;

/// The filtered power as a set of functions, optionally with an algebra on
/// `A` (algebra mode) or just a carrier size (set mode).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerSpace {
    a_size: usize,
    space: BooleanPowerSpace,
    algebra: Option<FinAlgebra>,
    functions: Vec<Vec<usize>>,
}

impl PowerSpace {
    pub fn set_mode(a_size: usize, space: BooleanPowerSpace, cap: usize) -> Result<Self> {
        Self::build(a_size, space, None, cap)
    }

    pub fn algebra_mode(algebra: FinAlgebra, space: BooleanPowerSpace, cap: usize) -> Result<Self> {
        for (&x, &e) in space.marked.iter().zip(&space.pins) {
            if !algebra.is_idempotent(e)? {
                return Err(Error::NonIdempotentPin { point: x, element: e });
            }
        }
        Self::build(algebra.size(), space, Some(algebra), cap)
    }

    fn build(a_size: usize, space: BooleanPowerSpace, algebra: Option<FinAlgebra>, cap: usize) -> Result<Self> {
        if a_size == 0 {
            return Err(Error::Precondition("empty carrier".into()));
        }
        let free = space.x_size - space.marked.len();
        if a_size.checked_pow(free as u32).is_none_or(|d| d > cap) {
            return Err(Error::CapExceeded(format!("|D| = {a_size}^{free} exceeds {cap}")));
        }
        if let Some(&e) = space.pins.iter().find(|&&e| e >= a_size) {
            return Err(Error::UnknownVertex(e));
        }
        let functions = space.functions(a_size);
        Ok(PowerSpace { a_size, space, algebra, functions })
    }

    pub fn a_size(&self) -> usize {
        self.a_size
    }

    pub fn x_size(&self) -> usize {
        self.space.x_size
    }

    pub fn space(&self) -> &BooleanPowerSpace {
        &self.space
    }

    pub fn algebra(&self) -> Option<&FinAlgebra> {
        self.algebra.as_ref()
    }

    /// The elements of `D` in lexicographic order.
    pub fn functions(&self) -> &[Vec<usize>] {
        &self.functions
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn index_of(&self, f: &[usize]) -> Option<usize> {
        self.functions.binary_search_by(|g| g.as_slice().cmp(f)).ok()
    }

    fn contains(&self, f: &[usize]) -> bool {
        self.space.marked.iter().zip(&self.space.pins).all(|(&x, &e)| f[x] == e)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AutElement {
    /// `f ↦ f ∘ h⁻¹` for a permutation `h` of `X` fixing the marked points.
    Hbar(Vec<usize>),
    /// `f ↦ (x ↦ ψ(x)(f(x)))` off the marked points.
    Khat(Vec<Vec<usize>>),
    /// Composite, rightmost factor applied first.
    Product(Vec<AutElement>),
}

/// `h̄` for a permutation of `X` fixing every marked point.
pub fn hbar(space: &PowerSpace, h: &[usize]) -> Result<AutElement> {
    if h.len() != space.x_size() || !is_permutation(h) {
        return Err(Error::NotBijective);
    }
    if let Some(&x) = space.space.marked.iter().find(|&&x| h[x] != x) {
        return Err(Error::MarkedPointMoved(x));
    }
    Ok(AutElement::Hbar(h.to_vec()))
}

/// `ψ̂` for a choice of permutation of `A` at every point; values at marked
/// points are ignored. In algebra mode the values must be automorphisms.
pub fn khat(space: &PowerSpace, psi: &[Vec<usize>]) -> Result<AutElement> {
    if psi.len() != space.x_size() {
        return Err(Error::ShapeMismatch(format!("{} values for {} points", psi.len(), space.x_size())));
    }
    let mut values = Vec::with_capacity(psi.len());
    for (x, p) in psi.iter().enumerate() {
        if p.len() != space.a_size || !is_permutation(p) {
            return Err(Error::NotBijective);
        }
        if space.space.is_marked(x) {
            values.push((0..space.a_size).collect());
            continue;
        }
        if let Some(alg) = &space.algebra {
            if !alg.is_automorphism(p) {
                return Err(Error::NotAutomorphism(x));
            }
        }
        values.push(p.clone());
    }
    Ok(AutElement::Khat(values))
}

impl AutElement {
    pub fn identity_h(space: &PowerSpace) -> Self {
        AutElement::Hbar((0..space.x_size()).collect())
    }

    pub fn identity_k(space: &PowerSpace) -> Self {
        AutElement::Khat(vec![(0..space.a_size).collect(); space.x_size()])
    }

    /// Image of one function.
    pub fn apply(&self, space: &PowerSpace, f: &[usize]) -> Vec<usize> {
        match self {
            AutElement::Hbar(h) => {
                let mut out = vec![0; f.len()];
                for (x, &v) in f.iter().enumerate() {
                    out[h[x]] = v;
                }
                out
            }
            AutElement::Khat(psi) => f
                .iter()
                .enumerate()
                .map(|(x, &v)| if space.space.is_marked(x) { v } else { psi[x][v] })
                .collect(),
            AutElement::Product(gs) => gs.iter().rev().fold(f.to_vec(), |acc, g| g.apply(space, &acc)),
        }
    }

    pub fn inverse(&self) -> AutElement {
        match self {
            AutElement::Hbar(h) => AutElement::Hbar(invert(h)),
            AutElement::Khat(psi) => AutElement::Khat(psi.iter().map(|p| invert(p)).collect()),
            AutElement::Product(gs) => AutElement::Product(gs.iter().rev().map(AutElement::inverse).collect()),
        }
    }

    /// `self ∘ other`.
    pub fn then_after(&self, other: &AutElement) -> AutElement {
        AutElement::Product(vec![self.clone(), other.clone()])
    }

    /// The induced permutation of `D` by element index; fails when some
    /// image leaves `D` or two functions collide.
    pub fn as_permutation(&self, space: &PowerSpace) -> Result<Vec<usize>> {
        let perm = space
            .functions
            .iter()
            .map(|f| {
                let g = self.apply(space, f);
                space.index_of(&g).ok_or_else(|| Error::Precondition("image leaves the filtered power".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        if !is_permutation(&perm) {
            return Err(Error::NotBijective);
        }
        Ok(perm)
    }
}

/// Whether two elements agree on every function of `D`.
pub fn equal_on(space: &PowerSpace, g1: &AutElement, g2: &AutElement) -> bool {
    space.functions.iter().all(|f| g1.apply(space, f) == g2.apply(space, f))
}

pub fn is_identity_on(space: &PowerSpace, g: &AutElement) -> bool {
    space.functions.iter().all(|f| &g.apply(space, f) == f)
}

/// Pins kept, bijective on `D`, and (in algebra mode) every operation of
/// the power commutes with `g`, checked over all argument tuples while
/// `|D|^arity <= limit`.
pub fn preserves_structure(space: &PowerSpace, g: &AutElement, limit: usize) -> Result<bool> {
    if space.functions.iter().any(|f| !space.contains(&g.apply(space, f))) {
        return Ok(false);
    }
    if g.as_permutation(space).is_err() {
        return Ok(false);
    }
    let Some(alg) = &space.algebra else { return Ok(true) };
    let d = &space.functions;
    for (j, op) in alg.ops().iter().enumerate() {
        if d.len().checked_pow(op.arity as u32).is_none_or(|c| c > limit) {
            return Err(Error::CapExceeded(format!("operation {j} over |D| = {}", d.len())));
        }
        let eval = |args: &[&Vec<usize>]| -> Vec<usize> {
            (0..space.x_size())
                .map(|x| alg.apply(j, &args.iter().map(|f| f[x]).collect::<Vec<_>>()))
                .collect()
        };
        for idx in tuples(d.len(), op.arity) {
            let args: Vec<&Vec<usize>> = idx.iter().map(|&k| &d[k]).collect();
            let mapped: Vec<Vec<usize>> = args.iter().map(|f| g.apply(space, f)).collect();
            let lhs = eval(&mapped.iter().collect::<Vec<_>>());
            let rhs = g.apply(space, &eval(&args));
            if lhs != rhs {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `h̄ ψ̂ h̄⁻¹ = (ψ ∘ h⁻¹)^` evaluated on every function of `D`.
pub fn conjugation_identity_check(space: &PowerSpace, psi: &[Vec<usize>], h: &[usize]) -> Result<bool> {
    let hb = hbar(space, h)?;
    let k = khat(space, psi)?;
    let lhs = AutElement::Product(vec![hb.clone(), k, hb.inverse()]);
    let hinv = invert(h);
    let shifted: Vec<Vec<usize>> = (0..space.x_size()).map(|x| psi[hinv[x]].clone()).collect();
    let rhs = khat(space, &shifted)?;
    Ok(equal_on(space, &lhs, &rhs))
}

/// If `h̄` and `χ̂` agree on `D` (with `|A| >= 2`, no marked points), both
/// must be trivial. Returns whether that implication holds for this pair.
pub fn k_cap_h_probe(space: &PowerSpace, h: &[usize], chi: &[Vec<usize>]) -> Result<bool> {
    let hb = hbar(space, h)?;
    let k = khat(space, chi)?;
    if !equal_on(space, &hb, &k) {
        return Ok(true);
    }
    let h_trivial = h.iter().enumerate().all(|(x, &y)| x == y);
    let k_trivial = chi
        .iter()
        .enumerate()
        .all(|(x, p)| space.space.is_marked(x) || p.iter().enumerate().all(|(a, &b)| a == b));
    Ok(h_trivial && k_trivial)
}

/// `g = d̄ ∘ ψ̂`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalForm {
    pub d: Vec<usize>,
    pub psi: Vec<Vec<usize>>,
}

impl NormalForm {
    pub fn h_part(&self) -> AutElement {
        AutElement::Hbar(self.d.clone())
    }

    pub fn k_part(&self) -> AutElement {
        AutElement::Khat(self.psi.clone())
    }

    /// `k'` with `g = k̂' ∘ d̄`, namely `k' = ψ ∘ d⁻¹`.
    pub fn left_k_part(&self) -> AutElement {
        let dinv = invert(&self.d);
        AutElement::Khat((0..self.d.len()).map(|x| self.psi[dinv[x]].clone()).collect())
    }

    pub fn element(&self) -> AutElement {
        AutElement::Product(vec![self.h_part(), self.k_part()])
    }
}

fn normal_form(space: &PowerSpace, g: &AutElement) -> NormalForm {
    let (xs, asz) = (space.x_size(), space.a_size);
    let id_k = || vec![(0..asz).collect::<Vec<usize>>(); xs];
    match g {
        AutElement::Hbar(h) => NormalForm { d: h.clone(), psi: id_k() },
        AutElement::Khat(psi) => NormalForm { d: (0..xs).collect(), psi: psi.clone() },
        AutElement::Product(gs) => {
            let start = NormalForm { d: (0..xs).collect(), psi: id_k() };
            gs.iter().fold(start, |acc, g| {
                let next = normal_form(space, g);
                // (d1 ψ1)(d2 ψ2) = (d1 d2) · (x ↦ ψ1(d2 x) ∘ ψ2(x))
                let psi = (0..xs).map(|x| compose(&acc.psi[next.d[x]], &next.psi[x])).collect();
                NormalForm { d: compose(&acc.d, &next.d), psi }
            })
        }
    }
}

/// Normal form `g = d̄ ∘ ψ̂` of a product of generators, re-verified by
/// evaluation on all of `D`.
pub fn decompose(space: &PowerSpace, g: &AutElement) -> Result<NormalForm> {
    let mut nf = normal_form(space, g);
    for x in space.space.marked.iter().copied() {
        nf.psi[x] = (0..space.a_size).collect();
    }
    if !equal_on(space, g, &nf.element()) {
        return Err(Error::Precondition("normal form disagrees with the element".into()));
    }
    Ok(nf)
}

/// A finite translate-to-conjugate instance.
///
/// `X` carries the relations `graph(h_i)` and the marked points as
/// constants; `ψ: X → Q` is a homomorphism, `φ2: Q → blocks` and
/// `φ2 ∘ ψ = proj`; on the block `v`, the translate `a_i` acts by the group
/// element `alpha[i][v]` and `λ(v)_i = alpha[i][v]⁻¹`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransconjInstance {
    pub x_size: usize,
    pub marked: Vec<usize>,
    pub pins: Vec<usize>,
    pub h: Vec<Vec<usize>>,
    pub blocks: FinStructure,
    pub proj: Vec<usize>,
    pub alpha: Vec<Vec<usize>>,
    pub action: GroupAction,
    pub q: FinStructure,
    pub phi2: StructMap,
    pub mu: Labelling,
    pub psi: Vec<usize>,
}

impl TransconjInstance {
    pub fn m(&self) -> usize {
        self.h.len()
    }

    pub fn partition(&self) -> Partition {
        Partition::from_labels(&self.proj)
    }

    /// `(X; graph h_1, …, graph h_m; marked)`.
    pub fn x_structure(&self) -> Result<FinStructure> {
        let relations = self.h.iter().map(|h| h.iter().enumerate().map(|(x, &y)| (x, y)).collect()).collect();
        FinStructure::new(self.x_size, relations, self.marked.clone())
    }

    pub fn lambda(&self) -> Labelling {
        let g = self.action.group();
        Labelling {
            width: self.m(),
            values: (0..self.blocks.size()).map(|v| (0..self.m()).map(|i| g.inv(self.alpha[i][v])).collect()).collect(),
        }
    }

    pub fn space(&self, cap: usize) -> Result<PowerSpace> {
        let bs = BooleanPowerSpace::new(self.x_size, self.marked.clone(), self.pins.clone())?;
        PowerSpace::set_mode(self.action.degree(), bs, cap)
    }

    /// Re-checks every hypothesis the conjugator relies on.
    pub fn check(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::Precondition(format!("instance: {what}")));
        for h in &self.h {
            if h.len() != self.x_size || !is_permutation(h) {
                return fail("h_i is not a permutation of X");
            }
            if let Some(&x) = self.marked.iter().find(|&&x| h[x] != x) {
                return Err(Error::MarkedPointMoved(x));
            }
        }
        if self.proj.len() != self.x_size || self.proj.iter().any(|&v| v >= self.blocks.size()) {
            return fail("projection does not land in the blocks");
        }
        if self.alpha.len() != self.m() || self.alpha.iter().any(|row| row.len() != self.blocks.size()) {
            return fail("alpha does not have one value per relation and block");
        }
        let psi = StructMap::new(self.x_structure()?, self.q.clone(), self.psi.clone())?;
        if !check_homomorphism(&psi)? {
            return fail("ψ is not a homomorphism X → Q");
        }
        if self.phi2.domain() != &self.q || self.phi2.codomain() != &self.blocks {
            return fail("φ2 is not a map Q → blocks");
        }
        if !check_homomorphism(&self.phi2)? {
            return fail("φ2 is not a homomorphism");
        }
        if (0..self.x_size).any(|x| self.phi2.apply(self.psi[x]) != self.proj[x]) {
            return fail("φ2 ∘ ψ differs from the projection");
        }
        let w = QpWitness {
            phi: self.phi2.clone(),
            lambda: self.lambda(),
            mu: self.mu.clone(),
            group: self.action.group().clone(),
        };
        let report = verify_qp(&w)?;
        if !report.holds {
            let v = report.violation.unwrap();
            return fail(&format!("QP fails on edge ({}, {}) of relation {}", v.from, v.to, v.relation + 1));
        }
        Ok(())
    }

    /// The translates `a_i`, acting on `x` by `alpha[i][proj x]`.
    pub fn translates(&self, space: &PowerSpace) -> Result<Vec<AutElement>> {
        (0..self.m())
            .map(|i| {
                let vals: Vec<Vec<usize>> =
                    (0..self.x_size).map(|x| self.action.perm(self.alpha[i][self.proj[x]]).to_vec()).collect();
                khat(space, &vals)
            })
            .collect()
    }

    pub fn hbars(&self, space: &PowerSpace) -> Result<Vec<AutElement>> {
        self.h.iter().map(|h| hbar(space, h)).collect()
    }
}

/// `c = (x ↦ μ(ψ(x)))^`, after re-verifying the instance.
pub fn qp_conjugator(inst: &TransconjInstance, space: &PowerSpace) -> Result<AutElement> {
    inst.check()?;
    let vals: Vec<Vec<usize>> =
        (0..inst.x_size).map(|x| inst.action.perm(inst.mu.scalar_at(inst.psi[x])).to_vec()).collect();
    khat(space, &vals)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransconjReport {
    pub functions: usize,
    /// `a_i h̄_i = c⁻¹ h̄_i c` on all of `D`, per relation.
    pub per_relation: Vec<bool>,
}

impl TransconjReport {
    pub fn holds(&self) -> bool {
        self.per_relation.iter().all(|&b| b)
    }
}

/// Builds the conjugator and checks `a_i ∘ h̄_i = c⁻¹ ∘ h̄_i ∘ c` for every
/// `i` by evaluation on every function of `D`.
pub fn verify_transconj(inst: &TransconjInstance, space: &PowerSpace) -> Result<(AutElement, TransconjReport)> {
    let c = qp_conjugator(inst, space)?;
    let cinv = c.inverse();
    let a = inst.translates(space)?;
    let hb = inst.hbars(space)?;
    let per_relation = (0..inst.m())
        .map(|i| {
            let lhs = AutElement::Product(vec![a[i].clone(), hb[i].clone()]);
            let rhs = AutElement::Product(vec![cinv.clone(), hb[i].clone(), c.clone()]);
            equal_on(space, &lhs, &rhs)
        })
        .collect();
    Ok((c, TransconjReport { functions: space.len(), per_relation }))
}

/// The `m = 1` instance over the spiral cover S(tp,q,tr) → S(p,q,r):
/// `X = Z_{ℓtp}`, `h = +1`, `ψ(k) = a_{(k mod tp)+1}`, μ the QP labelling
/// from `μ(a_1) = 1`, and `a` acting on the block of `v` by `λ(v)⁻¹`.
pub fn cycle_cover_instance(
    p: usize,
    q: usize,
    r: usize,
    action: &GroupAction,
    lambda: &Labelling,
    ell: usize,
) -> Result<TransconjInstance> {
    if ell == 0 {
        return Err(Error::Precondition("winding multiplier must be positive".into()));
    }
    let group = action.group();
    let base = make_spiral(p, q, r)?;
    let t = group.exponent();
    let w = spiral_qp_labelling(&base, lambda, 0, group, t, 0, group.identity())?;
    let tp = t * p;
    let x_size = ell * tp;
    let h = vec![(0..x_size).map(|k| (k + 1) % x_size).collect()];
    let psi: Vec<usize> = (0..x_size).map(|k| k % tp).collect();
    let proj = psi.iter().map(|&y| w.phi.apply(y)).collect();
    let alpha = vec![(0..base.size()).map(|v| group.inv(w.lambda.scalar_at(v))).collect()];
    let inst = TransconjInstance {
        x_size,
        marked: Vec::new(),
        pins: Vec::new(),
        h,
        blocks: base.structure().clone(),
        proj,
        alpha,
        action: action.clone(),
        q: w.phi.domain().clone(),
        phi2: w.phi.clone(),
        mu: w.mu,
        psi,
    };
    inst.check()?;
    Ok(inst)
}

/// Parameters of one winding block of a marked instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSpec {
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub lambda: Labelling,
    pub ell: usize,
}

/// An `n = 1` instance: a marked point `x_1 = 0` pinned at `e1`, fixed by
/// `h`, plus two `h`-invariant blocks, each a cycle-cover instance. `Q` and
/// the block structure get a loop constant for the marked point.
pub fn marked_instance(action: &GroupAction, e1: usize, blocks: [&BlockSpec; 2]) -> Result<TransconjInstance> {
    if e1 >= action.degree() {
        return Err(Error::UnknownVertex(e1));
    }
    let parts: Vec<TransconjInstance> = blocks
        .iter()
        .map(|b| cycle_cover_instance(b.p, b.q, b.r, action, &b.lambda, b.ell))
        .collect::<Result<_>>()?;
    let x_off = [1, 1 + parts[0].x_size];
    let x_size = 1 + parts[0].x_size + parts[1].x_size;
    let q_off = [0, parts[0].q.size()];
    let q_star = parts[0].q.size() + parts[1].q.size();
    let b_off = [0, parts[0].blocks.size()];
    let b_star = parts[0].blocks.size() + parts[1].blocks.size();

    let glue = |a: &FinStructure, b: &FinStructure, tag: &str| -> Result<FinStructure> {
        let mut names: Vec<String> = a.names().iter().map(|n| format!("1.{n}")).collect();
        names.extend(b.names().iter().map(|n| format!("2.{n}")));
        names.push(tag.to_string());
        let star = a.size() + b.size();
        let mut rel: Vec<(usize, usize)> = a.relations()[0].clone();
        rel.extend(b.relations()[0].iter().map(|&(u, v)| (u + a.size(), v + a.size())));
        rel.push((star, star));
        FinStructure::with_names(names, vec![rel], vec![star])
    };
    let q = glue(&parts[0].q, &parts[1].q, "q*")?;
    let block_structure = glue(&parts[0].blocks, &parts[1].blocks, "*")?;

    let mut phi2: Vec<usize> = Vec::with_capacity(q.size());
    let mut mu: Vec<usize> = Vec::with_capacity(q.size());
    for (k, part) in parts.iter().enumerate() {
        phi2.extend(part.phi2.map().iter().map(|&v| v + b_off[k]));
        mu.extend((0..part.q.size()).map(|y| part.mu.scalar_at(y)));
    }
    phi2.push(b_star);
    mu.push(action.group().identity());

    let mut h = vec![0usize; x_size];
    let mut psi = vec![q_star; x_size];
    let mut proj = vec![b_star; x_size];
    for (k, part) in parts.iter().enumerate() {
        for x in 0..part.x_size {
            h[x + x_off[k]] = part.h[0][x] + x_off[k];
            psi[x + x_off[k]] = part.psi[x] + q_off[k];
            proj[x + x_off[k]] = part.proj[x] + b_off[k];
        }
    }
    let mut alpha: Vec<usize> = parts[0].alpha[0].clone();
    alpha.extend(parts[1].alpha[0].iter().copied());
    alpha.push(action.group().identity());

    let inst = TransconjInstance {
        x_size,
        marked: vec![0],
        pins: vec![e1],
        h: vec![h],
        proj,
        alpha: vec![alpha],
        action: action.clone(),
        phi2: StructMap::new(q.clone(), block_structure.clone(), phi2)?,
        blocks: block_structure,
        q,
        mu: Labelling::scalar(mu),
        psi,
    };
    inst.check()?;
    Ok(inst)
}
