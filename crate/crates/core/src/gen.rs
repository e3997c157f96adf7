//! Seeded random generators for structures, labellings and permutations.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::structures::FinStructure;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Each ordered pair lands in each relation with probability `density`;
/// constants are uniform vertices.
pub fn random_structure<R: Rng + ?Sized>(rng: &mut R, size: usize, m: usize, density: f64, n: usize) -> FinStructure {
    let relations = (0..m)
        .map(|_| {
            let mut rel = Vec::new();
            for u in 0..size {
                for v in 0..size {
                    if rng.gen_bool(density) {
                        rel.push((u, v));
                    }
                }
            }
            rel
        })
        .collect();
    let constants = (0..n).map(|_| rng.gen_range(0..size)).collect();
    FinStructure::new(size, relations, constants).expect("generated pairs are in range")
}

/// A random member of F0: a random structure, then every vertex lacking an
/// in- or out-neighbour in some relation gets a random one.
pub fn random_f0<R: Rng + ?Sized>(rng: &mut R, size: usize, m: usize, density: f64) -> FinStructure {
    let s = random_structure(rng, size, m, density, 0);
    let mut relations = s.relations().to_vec();
    for (i, rel) in relations.iter_mut().enumerate() {
        for v in 0..size {
            if s.out_neighbors(i, v).is_empty() {
                rel.push((v, rng.gen_range(0..size)));
            }
            if s.in_neighbors(i, v).is_empty() {
                rel.push((rng.gen_range(0..size), v));
            }
        }
    }
    FinStructure::new(size, relations, Vec::new()).expect("repaired pairs are in range")
}

pub fn random_permutation<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..k).collect();
    p.shuffle(rng);
    p
}

/// A random permutation of `0..k` fixing every point of `fixed`.
pub fn random_permutation_fixing<R: Rng + ?Sized>(rng: &mut R, k: usize, fixed: &[usize]) -> Vec<usize> {
    let free: Vec<usize> = (0..k).filter(|x| !fixed.contains(x)).collect();
    let mut shuffled = free.clone();
    shuffled.shuffle(rng);
    let mut p: Vec<usize> = (0..k).collect();
    for (&x, &y) in free.iter().zip(&shuffled) {
        p[x] = y;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{in_family, Family};

    #[test]
    fn same_seed_same_output() {
        let a = random_f0(&mut rng(7), 5, 2, 0.3);
        let b = random_f0(&mut rng(7), 5, 2, 0.3);
        assert_eq!(a, b);
    }

    #[test]
    fn repaired_structures_are_surjective() {
        let mut r = rng(1);
        for _ in 0..50 {
            let size = r.gen_range(1..7);
            let s = random_f0(&mut r, size, 3, 0.1);
            assert!(in_family(&s, Family::F0).member);
        }
    }

    #[test]
    fn fixing_permutations() {
        let mut r = rng(3);
        for _ in 0..20 {
            let p = random_permutation_fixing(&mut r, 6, &[0, 4]);
            assert_eq!((p[0], p[4]), (0, 4));
            assert!(crate::groups::is_permutation(&p));
        }
    }
}
