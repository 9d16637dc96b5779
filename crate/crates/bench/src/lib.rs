//! Shared fixtures for the criterion benchmarks.

use entangle_core::gauss::{build_kernel, enumerate_words, ChshGaussSetup, CovarianceKernel};
use entangle_core::random::{self, ConsistentPair};
use entangle_core::C64;

/// A mid-size consistent pair with a wavefunction, for duality benchmarks.
pub fn duality_fixture() -> (ConsistentPair, Vec<C64>) {
    let mut rng = random::rng(0xBE);
    let pair = random::random_consistent_pair(&mut rng, 4, 3, 2);
    let f = random::random_unit_function(&mut rng, &pair.space);
    (pair, f)
}

/// The CHSH covariance kernel over words of length at most 2.
pub fn chsh_kernel() -> (ChshGaussSetup, CovarianceKernel) {
    let setup = ChshGaussSetup::new();
    let words = enumerate_words(&setup.group_a, 2).expect("small word set");
    let kernel =
        build_kernel(&setup.group_a, &setup.rep_a(), &setup.rho, &words).expect("valid kernel");
    (setup, kernel)
}
