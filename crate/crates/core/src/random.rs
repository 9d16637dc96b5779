//! Seeded generators for randomized property suites: spaces, observables,
//! consistent pairs, PVMs and wavefunctions. All randomness flows through
//! an explicit `StdRng` so suite runs are reproducible.

use crate::linalg::{dot, norm, Mat, C64};
use crate::observables::{FiniteSampleSpace, Observable};
use crate::quantum::{ProjectionValuedMeasure, Wavefunction};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_complex_vector(rng: &mut StdRng, len: usize) -> Vec<C64> {
    (0..len)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

/// Random unit vector in L2(mu).
pub fn random_unit_function(rng: &mut StdRng, space: &FiniteSampleSpace) -> Vec<C64> {
    loop {
        let raw = random_complex_vector(rng, space.atoms());
        let n = space.norm(&raw);
        if n > 1e-6 {
            return raw.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn random_unitary(rng: &mut StdRng, d: usize) -> Mat {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    while basis.len() < d {
        let mut v = random_complex_vector(rng, d);
        for b in &basis {
            let c = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let n = norm(&v);
        if n > 1e-6 {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    Mat::from_fn(d, d, |i, j| basis[j][i])
}

/// Random PVM on dimension d with the given number of outcomes (each
/// outcome receives at least one basis vector when d >= outcomes).
pub fn random_pvm(rng: &mut StdRng, d: usize, outcomes: usize) -> ProjectionValuedMeasure {
    assert!(outcomes >= 1 && d >= outcomes);
    let u = random_unitary(rng, d);
    let mut groups = vec![Vec::new(); outcomes];
    for j in 0..d {
        groups[j % outcomes].push(u.col(j));
    }
    let projections = groups
        .into_iter()
        .map(|g| {
            let mut p = Mat::zeros(d, d);
            for v in g {
                p = p.add(&Mat::outer(&v, &v));
            }
            p
        })
        .collect();
    ProjectionValuedMeasure::new(projections).expect("grouped unitary columns form a PVM")
}

pub fn random_wavefunction(rng: &mut StdRng, d: usize) -> Wavefunction {
    Wavefunction::normalized(random_complex_vector(rng, d)).expect("nonzero vector")
}

/// A consistent observable pair: block structure of n x m grids with
/// shuffled ambient atom order, random per-block weights (uniform within a
/// block) and random per-block label bijections.
#[derive(Debug, Clone)]
pub struct ConsistentPair {
    pub space: FiniteSampleSpace,
    pub alpha: Observable,
    pub beta: Observable,
}

pub fn random_consistent_pair(
    rng: &mut StdRng,
    n: usize,
    m: usize,
    blocks: usize,
) -> ConsistentPair {
    let atoms = n * m * blocks;
    // Shuffled ambient order of grid points.
    let mut points: Vec<(usize, usize, usize)> = Vec::with_capacity(atoms);
    for b in 0..blocks {
        for i in 0..n {
            for j in 0..m {
                points.push((b, i, j));
            }
        }
    }
    points.shuffle(rng);

    let mut block_weight: Vec<f64> = (0..blocks).map(|_| rng.gen_range(0.5..2.0)).collect();
    let total: f64 = block_weight.iter().sum::<f64>() * (n * m) as f64;
    block_weight.iter_mut().for_each(|w| *w /= total);

    let weights: Vec<f64> = points.iter().map(|&(b, _, _)| block_weight[b]).collect();
    let space = FiniteSampleSpace::new(weights).expect("valid space");

    let sigma: Vec<Vec<usize>> = (0..blocks)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(rng);
            p
        })
        .collect();
    let tau: Vec<Vec<usize>> = (0..blocks)
        .map(|_| {
            let mut p: Vec<usize> = (0..m).collect();
            p.shuffle(rng);
            p
        })
        .collect();

    let mut alpha_classes: Vec<Vec<usize>> = vec![Vec::new(); blocks * m];
    let mut beta_classes: Vec<Vec<usize>> = vec![Vec::new(); blocks * n];
    let mut alpha_labels = vec![0usize; atoms];
    let mut beta_labels = vec![0usize; atoms];
    for (atom, &(b, i, j)) in points.iter().enumerate() {
        alpha_classes[b * m + j].push(atom);
        beta_classes[b * n + i].push(atom);
        alpha_labels[atom] = sigma[b][i];
        beta_labels[atom] = tau[b][j];
    }

    let alpha = Observable::new(&space, n, alpha_classes, alpha_labels).expect("valid alpha");
    let beta = Observable::new(&space, m, beta_classes, beta_labels).expect("valid beta");
    ConsistentPair { space, alpha, beta }
}

/// A random observable: `classes` classes of size `n`, random per-class
/// weights (equal within a class), shuffled ambient order, random labels.
pub fn random_observable(rng: &mut StdRng, n: usize, classes: usize) -> (FiniteSampleSpace, Observable) {
    let atoms = n * classes;
    let mut points: Vec<(usize, usize)> = Vec::with_capacity(atoms);
    for c in 0..classes {
        for i in 0..n {
            points.push((c, i));
        }
    }
    points.shuffle(rng);
    let mut class_weight: Vec<f64> = (0..classes).map(|_| rng.gen_range(0.5..2.0)).collect();
    let total: f64 = class_weight.iter().sum::<f64>() * n as f64;
    class_weight.iter_mut().for_each(|w| *w /= total);
    let weights: Vec<f64> = points.iter().map(|&(c, _)| class_weight[c]).collect();
    let space = FiniteSampleSpace::new(weights).expect("valid space");

    let perms: Vec<Vec<usize>> = (0..classes)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(rng);
            p
        })
        .collect();
    let mut class_atoms: Vec<Vec<usize>> = vec![Vec::new(); classes];
    let mut labels = vec![0usize; atoms];
    for (atom, &(c, i)) in points.iter().enumerate() {
        class_atoms[c].push(atom);
        labels[atom] = perms[c][i];
    }
    let obs = Observable::new(&space, n, class_atoms, labels).expect("valid observable");
    (space, obs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::check_consistency;

    #[test]
    fn consistent_pairs_pass_the_consistency_check() {
        let mut r = rng(7);
        for _ in 0..20 {
            let n = r.gen_range(1..=4);
            let m = r.gen_range(1..=4);
            let blocks = r.gen_range(1..=3);
            let pair = random_consistent_pair(&mut r, n, m, blocks);
            let witness = check_consistency(&pair.space, &pair.alpha, &pair.beta).unwrap();
            assert_eq!(witness.blocks.len(), blocks);
        }
    }

    #[test]
    fn random_pvms_validate_and_wavefunctions_are_unit() {
        let mut r = rng(11);
        for _ in 0..10 {
            let d = r.gen_range(2..6);
            let outcomes = r.gen_range(1..=d);
            let pvm = random_pvm(&mut r, d, outcomes);
            pvm.validate(1e-10).unwrap();
            let psi = random_wavefunction(&mut r, d);
            assert!((norm(psi.amplitudes()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let a = random_complex_vector(&mut rng(5), 6);
        let b = random_complex_vector(&mut rng(5), 6);
        assert_eq!(a, b);
    }
}
