//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any of them fails.

mod common;

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fraisse_core::algebra::{
    closure_violation, congruence_lattice, filtered_boolean_power, is_simple, malcev_term_exists,
    principal_congruence, tuples, BooleanPowerSpace, FinAlgebra, DEFAULT_CLONE_CAP,
};
use fraisse_core::autgroup::{
    conjugation_identity_check, cycle_cover_instance, decompose, equal_on, hbar, k_cap_h_probe, khat,
    marked_instance, preserves_structure, verify_transconj, AutElement, BlockSpec, PowerSpace, TransconjInstance,
    DEFAULT_D_CAP,
};
use fraisse_core::gen::{random_f0, random_permutation, random_permutation_fixing, random_structure, rng};
use fraisse_core::groups::{compose, invert};
use fraisse_core::maps::{check_epimorphism, f_cover, find_epimorphism, DEFAULT_BUDGET};
use fraisse_core::spirals::{make_spiral, spiral_qp_labelling, surj_qp_cover, verify_qp};
use fraisse_core::structures::{expand_constants, in_family};
use fraisse_core::tower::{grow, GrowStatus, Task, TaskOutcome, Tower};
use fraisse_core::{Error, Family, FinGroup, FinStructure, GroupAction, Labelling, SearchOutcome, StructMap};
use rand::Rng;

use common::{epi_exists_brute_force, is_epi_by_definition, permutations, qp_holds, spiral_edges};

struct Outcome {
    pass: bool,
    detail: String,
    limit: Option<Duration>,
}

fn outcome(failures: &[String], detail: String) -> Outcome {
    let pass = failures.is_empty();
    let detail = if pass { detail } else { format!("{detail}; first failure: {}", failures[0]) };
    Outcome { pass, detail, limit: None }
}

fn groups() -> Vec<(&'static str, FinGroup)> {
    ["Z2", "Z3", "Z4", "S3"].iter().map(|&n| (n, FinGroup::preset(n).unwrap())).collect()
}

fn sweep() -> impl Iterator<Item = (usize, usize, usize)> {
    (2..=5).flat_map(|p| (1..=4).flat_map(move |q| (2..=5).map(move |r| (p, q, r))))
}

const PER_CONFIG: usize = 250;

fn criterion_1() -> Outcome {
    let mut rng = rng(1);
    let mut failures = Vec::new();
    let mut instances = 0;
    for (gname, g) in groups() {
        let t = g.exponent();
        for (p, q, r) in sweep() {
            let base = make_spiral(p, q, r).unwrap();
            let top = make_spiral(t * p, q, t * r).unwrap();
            let expected: HashSet<(usize, usize)> = spiral_edges(t * p, q, t * r).into_iter().collect();
            let wraps = [(top.a(t * p), top.a(1)), (top.c(t * r), top.c(1))];
            for _ in 0..PER_CONFIG {
                instances += 1;
                let lambda = Labelling::random(base.size(), 1, &g, &mut rng);
                let x0 = rng.gen_range(0..top.size());
                let alpha = g.random_element(&mut rng);
                let w = spiral_qp_labelling(&base, &lambda, 0, &g, t, x0, alpha).unwrap();
                let dom = w.phi.domain();
                let edges: HashSet<(usize, usize)> = dom.relations()[0].iter().copied().collect();
                let report = verify_qp(&w).unwrap();
                let image_ok = (1..=t * p).all(|k| w.phi.apply(top.a(k)) == base.a((k - 1) % p + 1))
                    && (1..=q).all(|k| w.phi.apply(top.b(k)) == base.b(k))
                    && (1..=t * r).all(|k| w.phi.apply(top.c(k)) == base.c((k - 1) % r + 1));
                let ok = report.holds
                    && report.edges_checked == expected.len()
                    && edges == expected
                    && wraps.iter().all(|e| edges.contains(e))
                    && image_ok
                    && qp_holds(&w.phi, &w.lambda, &w.mu, &g)
                    && w.mu.scalar_at(x0) == alpha;
                if !ok && failures.len() < 3 {
                    failures.push(format!("{gname} S({p},{q},{r}) x0={x0} α={alpha}"));
                }
            }
        }
    }
    let mut o = outcome(&failures, format!("{instances} labellings"));
    o.limit = Some(Duration::from_secs(30));
    o
}

fn criterion_2() -> Outcome {
    let mut rng = rng(2);
    let mut failures = Vec::new();
    let mut instances = 0;
    for (gname, g) in groups() {
        let t = g.exponent();
        let power = |x: usize, k: usize| (0..k).fold(g.identity(), |acc, _| g.mul(acc, x));
        for (p, q, r) in sweep() {
            let base = make_spiral(p, q, r).unwrap();
            let top = make_spiral(t * p, q, t * r).unwrap();
            for _ in 0..PER_CONFIG {
                instances += 1;
                let lambda = Labelling::random(base.size(), 1, &g, &mut rng);
                let lam = |v: usize| lambda.values[v][0];
                let x0 = rng.gen_range(0..top.size());
                let alpha = g.random_element(&mut rng);
                let w = spiral_qp_labelling(&base, &lambda, 0, &g, t, x0, alpha).unwrap();
                let mu = |v: usize| w.mu.values[v][0];

                let mut ok = true;
                for (cycle, len, head, tail) in [
                    ((1..=p).map(|i| base.a(i)).collect::<Vec<_>>(), p, top.a(1), top.a(t * p)),
                    ((1..=r).map(|i| base.c(i)).collect::<Vec<_>>(), r, top.c(1), top.c(t * r)),
                ] {
                    let total = cycle.iter().fold(g.identity(), |acc, &v| g.mul(acc, lam(v)));
                    ok &= power(total, t) == g.identity();
                    // walking once around from the head: λ(v_2)…λ(v_len) · P^(t-1)
                    let rest = cycle[1..len].iter().fold(g.identity(), |acc, &v| g.mul(acc, lam(v)));
                    let walked = g.mul(rest, power(total, t - 1));
                    ok &= g.inv(walked) == lam(cycle[0]);
                    ok &= g.mul(g.inv(mu(tail)), mu(head)) == lam(cycle[0]);
                }
                if !ok && failures.len() < 3 {
                    failures.push(format!("{gname} S({p},{q},{r})"));
                }
            }
        }
    }
    outcome(&failures, format!("{instances} labellings"))
}

fn in_f0_by_definition(s: &FinStructure) -> bool {
    (0..s.m()).all(|i| {
        let (mut out, mut inc) = (vec![false; s.size()], vec![false; s.size()]);
        for &(x, y) in &s.relations()[i] {
            out[x] = true;
            inc[y] = true;
        }
        out.iter().chain(&inc).all(|&b| b)
    })
}

fn criterion_3() -> Outcome {
    let mut rng = rng(3);
    let mut failures = Vec::new();
    let mut largest = 0;
    for k in 0..200 {
        let g = FinGroup::preset(if k % 2 == 0 { "Z2" } else { "S3" }).unwrap();
        let size = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=3);
        let density = rng.gen_range(0.05..0.7);
        let a = random_f0(&mut rng, size, m, density);
        let lambda = Labelling::random(size, m, &g, &mut rng);
        let cover = surj_qp_cover(&a, &lambda, &g).unwrap();
        let w = &cover.witness;
        let b = w.phi.domain();
        largest = largest.max(b.size());
        let rich = (0..m).all(|i| {
            let seen: HashSet<(usize, usize)> =
                cover.blocks[i].clone().map(|v| (w.phi.apply(v), w.mu.values[v][0])).collect();
            (0..size).all(|x| g.elements().all(|alpha| seen.contains(&(x, alpha))))
        });
        let ok = verify_qp(w).unwrap().holds
            && qp_holds(&w.phi, &w.lambda, &w.mu, &g)
            && check_epimorphism(&w.phi).unwrap()
            && is_epi_by_definition(b, &a, w.phi.map())
            && in_family(b, Family::F0).member
            && in_f0_by_definition(b)
            && cover.blocks.len() == m
            && rich;
        if !ok && failures.len() < 3 {
            failures.push(format!("instance {k}: |A|={size}, m={m}"));
        }
    }
    let mut o = outcome(&failures, format!("200 covers, largest |B| = {largest}"));
    o.limit = Some(Duration::from_secs(60));
    o
}

fn criterion_4() -> Outcome {
    let mut rng = rng(4);
    let mut failures = Vec::new();
    let mut positives = 0;
    for k in 0..100 {
        let m = rng.gen_range(1..=2);
        let n = rng.gen_range(0..=1);
        let size_a = rng.gen_range(1..=5);
        let size_b = rng.gen_range(1..=4);
        let density = rng.gen_range(0.1..0.6);
        let a = random_structure(&mut rng, size_a, m, density, n);
        // half of the pairs are planted: B is an image of A
        let b = if k % 2 == 0 && size_b <= size_a {
            let mut f: Vec<usize> = (0..size_a).map(|v| if v < size_b { v } else { rng.gen_range(0..size_b) }).collect();
            f.reverse();
            let relations = a.relations().iter().map(|rel| rel.iter().map(|&(x, y)| (f[x], f[y])).collect()).collect();
            FinStructure::new(size_b, relations, a.constants().iter().map(|&c| f[c]).collect()).unwrap()
        } else {
            let density = rng.gen_range(0.1..0.6);
            random_structure(&mut rng, size_b, m, density, n)
        };
        let truth = epi_exists_brute_force(&a, &b);
        positives += truth as usize;
        let verdict = match find_epimorphism(&a, &b, DEFAULT_BUDGET).unwrap() {
            SearchOutcome::Found(phi) => is_epi_by_definition(&a, &b, phi.map()).then_some(true),
            SearchOutcome::NoWitness => Some(false),
            SearchOutcome::Exhausted => None,
        };
        if verdict != Some(truth) && failures.len() < 3 {
            failures.push(format!("instance {k}: solver {verdict:?}, enumeration {truth}"));
        }
    }
    outcome(&failures, format!("100 pairs, {positives} with an epimorphism"))
}

fn f_members(rng: &mut impl Rng) -> Vec<FinStructure> {
    let f = FinStructure::two_point_f_example();
    let (double, _) = FinStructure::disjoint_union(&[&f, &f]).unwrap();
    let mut out = vec![f, double, f_cover(&FinStructure::directed_cycle(2)).unwrap().domain().clone()];
    for _ in 0..6 {
        let size = rng.gen_range(1..=3);
        let m = rng.gen_range(1..=2);
        let s = random_f0(rng, size, m, 0.4);
        out.push(f_cover(&s).unwrap().domain().clone());
    }
    out
}

fn criterion_5() -> Outcome {
    let mut rng = rng(5);
    let mut failures = Vec::new();
    let f = FinStructure::two_point_f_example();
    let cycle = FinStructure::directed_cycle(2);
    let f_edges: HashSet<(usize, usize)> = f.relations()[0].iter().copied().collect();
    let (x, y) = (f.vertex_by_name("x").unwrap(), f.vertex_by_name("y").unwrap());
    if f.size() != 2 || f_edges != HashSet::from([(x, x), (x, y), (y, y)]) {
        failures.push("F example has the wrong shape".into());
    }
    if !in_family(&f, Family::F).member {
        failures.push("F example rejected from F".into());
    }
    if !in_family(&cycle, Family::F0).member || in_family(&cycle, Family::F).member {
        failures.push("2-cycle misclassified".into());
    }

    let members = f_members(&mut rng);
    let mut expanded = 0;
    for s in &members {
        if !in_family(s, Family::F).member {
            failures.push(format!("F member of size {} rejected", s.size()));
        }
        for k in 1..=3 {
            expanded += 1;
            if !in_family(&expand_constants(s, k).unwrap(), Family::Fn).member {
                failures.push(format!("expansion by {k} of a member of size {} rejected from Fn", s.size()));
            }
        }
    }

    let mut mixed = 0;
    for k in 0..100 {
        let parts: Vec<FinStructure> = (0..rng.gen_range(1..=3))
            .map(|_| {
                let size = rng.gen_range(1..=4);
                match rng.gen_range(0..3) {
                    0 => members[rng.gen_range(0..members.len())].clone(),
                    1 => random_f0(&mut rng, size, 1, 0.4),
                    _ => random_structure(&mut rng, size, 1, 0.4, 0),
                }
            })
            .collect();
        // unions need a common signature; lift every part to the widest one
        let m = parts.iter().map(FinStructure::m).max().unwrap();
        let parts: Vec<FinStructure> = parts
            .into_iter()
            .map(|p| {
                if p.m() == m {
                    p
                } else {
                    let mut rel = p.relations().to_vec();
                    while rel.len() < m {
                        rel.push(rel[0].clone());
                    }
                    FinStructure::new(p.size(), rel, Vec::new()).unwrap()
                }
            })
            .collect();
        let refs: Vec<&FinStructure> = parts.iter().collect();
        let (union, _) = FinStructure::disjoint_union(&refs).unwrap();
        for fam in [Family::F0, Family::F] {
            let each: Vec<bool> = parts.iter().map(|p| in_family(p, fam).member).collect();
            mixed += (each.iter().any(|&b| b) && !each.iter().all(|&b| b)) as usize;
            if in_family(&union, fam).member != each.iter().all(|&b| b) && failures.len() < 3 {
                failures.push(format!("union {k} breaks locality for {fam}"));
            }
        }
    }
    outcome(
        &failures,
        format!("{} F members, {expanded} expansions, 100 unions ({mixed} mixed verdicts)", members.len()),
    )
}

/// Evaluates `a_i h̄_i = c⁻¹ h̄_i c` on every pinned function, straight from
/// the instance data.
fn transconj_by_hand(inst: &TransconjInstance) -> (usize, bool) {
    let act = &inst.action;
    let g = act.group();
    let xs = inst.x_size;
    let marked = |x: usize| inst.marked.contains(&x);
    let pointwise = |f: &[usize], by: &dyn Fn(usize) -> usize| -> Vec<usize> {
        (0..xs).map(|x| if marked(x) { f[x] } else { act.act(by(x), f[x]) }).collect()
    };
    let shift = |f: &[usize], h: &[usize]| {
        let mut out = vec![0; xs];
        for x in 0..xs {
            out[h[x]] = f[x];
        }
        out
    };
    let c = |x: usize| inst.mu.values[inst.psi[x]][0];
    let mut count = 0;
    let mut ok = true;
    for f in tuples(act.degree(), xs) {
        if inst.marked.iter().zip(&inst.pins).any(|(&x, &e)| f[x] != e) {
            continue;
        }
        count += 1;
        for (i, h) in inst.h.iter().enumerate() {
            let lhs = pointwise(&shift(&f, h), &|x| inst.alpha[i][inst.proj[x]]);
            let rhs = pointwise(&shift(&pointwise(&f, &c), h), &|x| g.inv(c(x)));
            ok &= lhs == rhs;
        }
    }
    (count, ok)
}

fn criterion_6() -> Outcome {
    let mut rng = rng(6);
    let mut failures = Vec::new();
    let mut small = 0;
    let check = |inst: &TransconjInstance, cap: usize, label: String, failures: &mut Vec<String>| {
        let space = inst.space(cap).unwrap();
        let (_, report) = verify_transconj(inst, &space).unwrap();
        let (count, by_hand) = transconj_by_hand(inst);
        if !(report.holds() && by_hand && count == space.len() && count == report.functions) {
            failures.push(label);
        }
    };
    let actions = ["z2-flip", "z2-transposition", "z3-rotation"];
    for name in actions {
        let action = GroupAction::preset(name).unwrap();
        let t = action.group().exponent();
        for p in 2..=4 {
            for ell in 1..=2 {
                if ell * t * p > 8 {
                    continue;
                }
                for q in 1..=3 {
                    for r in 2..=3 {
                        let draws = if t == 3 { 2 } else { 1 };
                        for _ in 0..draws {
                            let lambda = Labelling::random(p + q + r - 2, 1, action.group(), &mut rng);
                            let inst = cycle_cover_instance(p, q, r, &action, &lambda, ell).unwrap();
                            assert!(inst.x_size <= 8);
                            small += 1;
                            check(&inst, DEFAULT_D_CAP, format!("{name} S({p},{q},{r}) ℓ={ell}"), &mut failures);
                        }
                    }
                }
            }
        }
    }

    // one marked point fixed by h, two cycle blocks; |D| stays within the cap
    let mut marked = 0;
    for name in ["z2-flip", "z2-transposition"] {
        let action = GroupAction::preset(name).unwrap();
        for _ in 0..2 {
            let spec = |rng: &mut rand_chacha::ChaCha8Rng| {
                let q = rng.gen_range(1..=2);
                BlockSpec { p: 2, q, r: 2, lambda: Labelling::random(q + 2, 1, action.group(), rng), ell: 1 }
            };
            let (b1, b2) = (spec(&mut rng), spec(&mut rng));
            let inst = marked_instance(&action, 0, [&b1, &b2]).unwrap();
            marked += 1;
            check(&inst, DEFAULT_D_CAP, format!("{name} marked"), &mut failures);
        }
    }

    // S3 has exponent 6, so its smallest cycle cover already has |X| = 12
    let s3 = GroupAction::preset("s3-natural").unwrap();
    let lambda = Labelling::random(3, 1, s3.group(), &mut rng);
    let inst = cycle_cover_instance(2, 1, 2, &s3, &lambda, 1).unwrap();
    let default_rejects = matches!(inst.space(DEFAULT_D_CAP), Err(Error::CapExceeded(_)));
    if !default_rejects {
        failures.push("S3 instance fits under the default cap".into());
    }
    check(&inst, 3usize.pow(12), "s3-natural S(2,1,2)".into(), &mut failures);

    let mut o = outcome(
        &failures,
        format!("{small} cycle covers with |X| <= 8, {marked} marked, 1 S3 cover with |X| = 12 and |D| = 531441"),
    );
    o.limit = Some(Duration::from_secs(60));
    o
}

fn random_psi(rng: &mut impl Rng, a: usize, xs: usize) -> Vec<Vec<usize>> {
    (0..xs).map(|_| random_permutation(rng, a)).collect()
}

fn criterion_7() -> Outcome {
    let mut rng = rng(7);
    let mut failures = Vec::new();
    let mut probes = 0;
    for k in 0..500 {
        let a = rng.gen_range(2..=3);
        let xs = rng.gen_range(1..=4);
        let n = rng.gen_range(0..=1);
        let marked: Vec<usize> = if n == 1 { vec![rng.gen_range(0..xs)] } else { Vec::new() };
        let pins: Vec<usize> = marked.iter().map(|_| rng.gen_range(0..a)).collect();
        let space = PowerSpace::set_mode(a, BooleanPowerSpace::new(xs, marked.clone(), pins.clone()).unwrap(), DEFAULT_D_CAP)
            .unwrap();
        let d = space.functions().to_vec();
        let pinned = |f: &[usize]| marked.iter().zip(&pins).all(|(&x, &e)| f[x] == e);
        let mut fail = |what: &str| {
            if failures.len() < 3 {
                failures.push(format!("instance {k} (|A|={a}, |X|={xs}, n={n}): {what}"));
            }
        };
        if d.len() != a.pow((xs - n) as u32) || !d.iter().all(|f| pinned(f)) {
            fail("wrong function set");
        }

        let h1 = random_permutation_fixing(&mut rng, xs, &marked);
        let h2 = random_permutation_fixing(&mut rng, xs, &marked);
        let (p1, p2) = (random_psi(&mut rng, a, xs), random_psi(&mut rng, a, xs));
        let (hb1, hb2) = (hbar(&space, &h1).unwrap(), hbar(&space, &h2).unwrap());
        let (k1, k2) = (khat(&space, &p1).unwrap(), khat(&space, &p2).unwrap());

        // h̄ ψ̂ h̄⁻¹ = (ψ ∘ h⁻¹)^, by the library and by direct evaluation
        if !conjugation_identity_check(&space, &p1, &h1).unwrap() {
            fail("conjugation identity");
        }
        let h1inv = invert(&h1);
        for f in &d {
            let mut g = vec![0; xs];
            for x in 0..xs {
                g[x] = f[h1[x]]; // h̄⁻¹ f = f ∘ h
            }
            let g: Vec<usize> = (0..xs).map(|x| if marked.contains(&x) { g[x] } else { p1[x][g[x]] }).collect();
            let lhs: Vec<usize> = (0..xs).map(|x| g[h1inv[x]]).collect();
            let rhs: Vec<usize> =
                (0..xs).map(|x| if marked.contains(&x) { f[x] } else { p1[h1inv[x]][f[x]] }).collect();
            if lhs != rhs {
                fail("conjugation identity by hand");
                break;
            }
        }

        // embeddings are homomorphisms and respect inverses
        let laws = [
            equal_on(&space, &hb1.then_after(&hb2), &hbar(&space, &compose(&h1, &h2)).unwrap()),
            equal_on(&space, &hb1.inverse(), &hbar(&space, &h1inv).unwrap()),
            equal_on(&space, &k1.then_after(&k2), &khat(&space, &(0..xs).map(|x| compose(&p1[x], &p2[x])).collect::<Vec<_>>()).unwrap()),
            equal_on(&space, &k1.then_after(&k1.inverse()), &AutElement::identity_k(&space)),
            equal_on(&space, &AutElement::identity_h(&space), &AutElement::identity_k(&space)),
        ];
        if laws.iter().any(|&b| !b) {
            fail("embedding law");
        }

        // pins survive; moving a marked point is refused
        let mixed = AutElement::Product(vec![hb1.clone(), k2.clone(), hb2.inverse(), k1.clone()]);
        for g in [&hb1, &k1, &mixed] {
            if !preserves_structure(&space, g, usize::MAX).unwrap() || !d.iter().all(|f| pinned(&g.apply(&space, f))) {
                fail("pin preservation");
            }
        }
        if n == 1 && xs >= 2 {
            let mut moving: Vec<usize> = (0..xs).collect();
            let other = (marked[0] + 1) % xs;
            moving.swap(marked[0], other);
            if !matches!(hbar(&space, &moving), Err(Error::MarkedPointMoved(_))) {
                fail("marked point moved without complaint");
            }
        }

        // K ∩ H = 1: exhaustive over all (h, χ) when small, sampled otherwise
        let hs: Vec<Vec<usize>> =
            permutations(xs).into_iter().filter(|h| marked.iter().all(|&x| h[x] == x)).collect();
        let perms_a = permutations(a);
        let chi_count = perms_a.len().pow(xs as u32);
        if hs.len() * chi_count <= 2_000 {
            for h in &hs {
                for code in 0..chi_count {
                    let mut c = code;
                    let chi: Vec<Vec<usize>> = (0..xs)
                        .map(|_| {
                            let p = perms_a[c % perms_a.len()].clone();
                            c /= perms_a.len();
                            p
                        })
                        .collect();
                    probes += 1;
                    if !k_cap_h_probe(&space, h, &chi).unwrap() {
                        fail("K ∩ H probe");
                    }
                }
            }
        } else {
            for _ in 0..200 {
                let h = &hs[rng.gen_range(0..hs.len())];
                let chi = random_psi(&mut rng, a, xs);
                probes += 1;
                if !k_cap_h_probe(&space, h, &chi).unwrap() {
                    fail("K ∩ H probe");
                }
            }
        }

        // normal forms of a random word: g = d̄ ψ̂ = k̂' d̄, and d̄⁻¹ g ∈ K
        let word: Vec<AutElement> = (0..rng.gen_range(2..=5))
            .map(|_| {
                let g = if rng.gen_bool(0.5) {
                    hbar(&space, &random_permutation_fixing(&mut rng, xs, &marked)).unwrap()
                } else {
                    khat(&space, &random_psi(&mut rng, a, xs)).unwrap()
                };
                if rng.gen_bool(0.3) { g.inverse() } else { g }
            })
            .collect();
        let g = AutElement::Product(word);
        let nf = decompose(&space, &g).unwrap();
        let left = AutElement::Product(vec![nf.left_k_part(), nf.h_part()]);
        let residue = AutElement::Product(vec![nf.h_part().inverse(), g.clone()]);
        if !equal_on(&space, &g, &nf.element())
            || !equal_on(&space, &g, &left)
            || !equal_on(&space, &residue, &nf.k_part())
            || marked.iter().any(|&x| nf.d[x] != x)
        {
            fail("normal form");
        }
    }
    outcome(&failures, format!("500 instances, {probes} K ∩ H probes"))
}

fn criterion_8() -> Outcome {
    let mut failures = Vec::new();
    let (mut closed, mut violations) = (0, 0);
    for name in ["Z3", "Z4", "2elt-semilattice"] {
        let alg = FinAlgebra::preset(name).unwrap();
        let size = alg.size();
        // idempotents straight from the tables
        let idem: Vec<bool> =
            (0..size).map(|e| (0..alg.ops().len()).all(|j| alg.apply(j, &vec![e; alg.ops()[j].arity]) == e)).collect();
        for xs in 1..=3usize {
            for mask in 0..(1usize << xs) {
                let marked: Vec<usize> = (0..xs).filter(|&x| mask >> x & 1 == 1).collect();
                for pins in tuples(size, marked.len()) {
                    let space = BooleanPowerSpace::new(xs, marked.clone(), pins.clone()).unwrap();
                    let funcs = space.functions(size);
                    let keeps = |f: &[usize]| marked.iter().zip(&pins).all(|(&x, &e)| f[x] == e);
                    let label = format!("{name} |X|={xs} marked={marked:?} pins={pins:?}");
                    if pins.iter().all(|&e| idem[e]) {
                        closed += 1;
                        let pa = filtered_boolean_power(&alg, &space);
                        let by_hand = (0..alg.ops().len()).all(|j| {
                            tuples(funcs.len(), alg.ops()[j].arity).all(|args| {
                                let out: Vec<usize> = (0..xs)
                                    .map(|x| alg.apply(j, &args.iter().map(|&k| funcs[k][x]).collect::<Vec<_>>()))
                                    .collect();
                                keeps(&out)
                            })
                        });
                        let ok = pa.is_ok_and(|p| p.functions == funcs)
                            && closure_violation(&alg, &space).is_none()
                            && by_hand;
                        if !ok {
                            failures.push(label);
                        }
                    } else {
                        violations += 1;
                        let refused = matches!(filtered_boolean_power(&alg, &space), Err(Error::NonIdempotentPin { .. }));
                        let exhibited = closure_violation(&alg, &space).is_some_and(|v| {
                            let recomputed: Vec<usize> = (0..xs)
                                .map(|x| alg.apply(v.op, &v.args.iter().map(|f| f[x]).collect::<Vec<_>>()))
                                .collect();
                            let i = marked.iter().position(|&x| x == v.point);
                            v.args.len() == alg.ops()[v.op].arity
                                && v.args.iter().all(|f| f.len() == xs && keeps(f))
                                && recomputed == v.result
                                && i.is_some_and(|i| v.result[v.point] != pins[i])
                        });
                        if !(refused && exhibited) {
                            failures.push(label);
                        }
                    }
                }
            }
        }
    }
    outcome(&failures, format!("{closed} closed filters, {violations} violations exhibited"))
}

fn criterion_9() -> Outcome {
    let mut failures = Vec::new();
    let f = FinStructure::two_point_f_example();
    let seed = expand_constants(&f, 1).unwrap();
    let (double, _) = FinStructure::disjoint_union(&[&f, &f]).unwrap();
    let cycle_cover = f_cover(&FinStructure::directed_cycle(2)).unwrap().domain().clone();
    let loop_cover = f_cover(&FinStructure::directed_cycle(1)).unwrap().domain().clone();
    let targets: Vec<FinStructure> =
        [&double, &cycle_cover, &loop_cover].iter().map(|s| expand_constants(s, 1).unwrap()).collect();
    let id = StructMap::identity(&seed);
    let onto_seed = |b: &FinStructure| find_epimorphism(b, &seed, DEFAULT_BUDGET).unwrap().found().unwrap();
    let mut tasks: Vec<Task> = targets.iter().map(|t| Task::Universality { target: t.clone() }).collect();
    tasks.push(Task::Extension { stage: 0, phi1: id.clone(), phi2: id.clone() });
    tasks.push(Task::Extension { stage: 0, phi1: id.clone(), phi2: onto_seed(&targets[0]) });
    tasks.push(Task::Extension { stage: 0, phi1: id.clone(), phi2: onto_seed(&targets[1]) });

    // scripted: tasks in order, cap doubled on exhaustion, witnesses checked
    let mut tower = Tower::new(seed.clone()).unwrap();
    for (k, task) in tasks.iter().enumerate() {
        let mut cap = 64;
        let witness = loop {
            match tower.discharge(task, cap).unwrap() {
                TaskOutcome::Discharged { witness, .. } => break Some(witness),
                TaskOutcome::CapExhausted if cap < 4096 => cap *= 2,
                other => {
                    failures.push(format!("task {k}: {other:?}"));
                    break None;
                }
            }
        };
        let Some(w) = witness else { continue };
        let top = tower.height() - 1;
        let ok = match task {
            Task::Universality { target } => w.domain() == tower.top() && is_epi_by_definition(w.domain(), target, w.map()),
            Task::Extension { stage, phi1, phi2 } => {
                let down = tower.composite(top, *stage).unwrap();
                is_epi_by_definition(w.domain(), phi2.domain(), w.map())
                    && (0..w.domain().size()).all(|v| phi2.apply(w.apply(v)) == phi1.apply(down.apply(v)))
            }
        };
        if !ok {
            failures.push(format!("task {k}: witness fails"));
        }
    }

    let report = tower.check().unwrap();
    if !report.ok() {
        failures.push(format!("tower check: {report:?}"));
    }
    let stages = tower.stages();
    for (k, bond) in tower.bonds().iter().enumerate() {
        if bond.domain() != &stages[k + 1] || bond.codomain() != &stages[k] {
            failures.push(format!("bond {k} has the wrong ends"));
        }
    }
    for from in 0..stages.len() {
        // composite by hand, down to every lower stage
        let mut image: Vec<usize> = (0..stages[from].size()).collect();
        for to in (0..from).rev() {
            image = image.iter().map(|&v| tower.bonds()[to].apply(v)).collect();
            if !is_epi_by_definition(&stages[from], &stages[to], &image) {
                failures.push(format!("composite {from} → {to}"));
            }
        }
        if !in_family(&stages[from], Family::Fn).member {
            failures.push(format!("stage {from} not in Fn"));
        }
        let through_constants = image.iter().filter(|v| stages[0].constants().contains(v)).count();
        if through_constants != tower.n() || tower.constant_threads(from).unwrap() != tower.n() {
            failures.push(format!("stage {from}: {through_constants} constant threads"));
        }
    }
    let sizes: Vec<usize> = stages.iter().map(FinStructure::size).collect();

    // the same tasks through the round-robin driver
    let mut driven = Tower::new(seed).unwrap();
    let grown = grow(&mut driven, &tasks, 16, 64, 6).unwrap();
    if grown.status != GrowStatus::Complete || !driven.check().unwrap().ok() {
        failures.push(format!("grow: {:?}", grown.tasks));
    }

    let mut o = outcome(&failures, format!("{} stages of sizes {sizes:?}, {} composites", sizes.len(), report.composites_checked));
    o.limit = Some(Duration::from_secs(120));
    o
}

fn is_congruence(alg: &FinAlgebra, labels: &[usize]) -> bool {
    (0..alg.ops().len()).all(|j| {
        let k = alg.ops()[j].arity;
        tuples(alg.size(), k).all(|xs| {
            tuples(alg.size(), k).all(|ys| {
                !xs.iter().zip(&ys).all(|(&x, &y)| labels[x] == labels[y])
                    || labels[alg.apply(j, &xs)] == labels[alg.apply(j, &ys)]
            })
        })
    })
}

fn criterion_10() -> Outcome {
    let mut failures = Vec::new();
    let z3 = FinAlgebra::preset("Z3").unwrap();
    let z4 = FinAlgebra::preset("Z4").unwrap();
    let semilattice = FinAlgebra::preset("2elt-semilattice").unwrap();

    // every labelling of 3 points: only the two trivial partitions are congruences
    let proper = tuples(3, 3)
        .filter(|l| {
            let classes: HashSet<usize> = l.iter().copied().collect();
            classes.len() == 2 && is_congruence(&z3, l)
        })
        .count();
    if is_simple(&z3).unwrap() != true || proper != 0 {
        failures.push("Z3 is not simple".into());
    }

    let expected = [0, 1, 0, 1];
    let theta = principal_congruence(&z4, 0, 2).unwrap();
    let exhibited = theta.labels() == expected
        && congruence_lattice(&z4).iter().any(|p| p.labels() == expected)
        && is_congruence(&z4, &expected);
    if is_simple(&z4).unwrap() || !exhibited {
        failures.push("Z4: {0,2} congruence not exhibited".into());
    }

    match malcev_term_exists(&z3, DEFAULT_CLONE_CAP) {
        SearchOutcome::Found(table) => {
            let want: Vec<usize> = tuples(3, 3).map(|t| (t[0] + 3 - t[1] + t[2]) % 3).collect();
            if table != want {
                failures.push("Z3 Mal'cev table differs from x - y + z".into());
            }
        }
        other => failures.push(format!("Z3 Mal'cev search: {other:?}")),
    }
    if !matches!(malcev_term_exists(&semilattice, DEFAULT_CLONE_CAP), SearchOutcome::NoWitness) {
        failures.push("semilattice reported a Mal'cev term".into());
    }
    outcome(&failures, "Z3 simple, Z4 {0,2}, Mal'cev x - y + z, semilattice none".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("spiral QP labellings", criterion_1),
        ("Lagrange telescoping", criterion_2),
        ("surjective QP cover", criterion_3),
        ("epimorphism solver vs enumeration", criterion_4),
        ("family predicates", criterion_5),
        ("translate to conjugate", criterion_6),
        ("semidirect identities", criterion_7),
        ("filtered power closure", criterion_8),
        ("tower integrity", criterion_9),
        ("simplicity and Mal'cev", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut o = run();
        let took = start.elapsed();
        if let Some(limit) = o.limit {
            if took > limit {
                o.pass = false;
                o.detail = format!("{}; over the {}s budget", o.detail, limit.as_secs());
            }
        }
        failed += !o.pass as usize;
        println!(
            "criterion {:>2} {:<36} {} ({:.2}s) {}",
            k + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
