//! Property tests for the structural invariants: Fourier roundtrips,
//! affinity of the game functional, word-group laws and partial-averaging
//! idempotence.

use entangle_core::games::{
    evaluate_game, fourier_transform_2d, inverse_fourier_transform_2d, BareStrategy,
    NonlocalGame,
};
use entangle_core::gauss::{enumerate_words, word_inverse, word_multiply, FreeProduct};
use entangle_core::linalg::{Mat, C64};
use entangle_core::observables::partial_average;
use proptest::prelude::*;

fn complex_table(n: usize, m: usize) -> impl Strategy<Value = Mat> {
    prop::collection::vec(
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), m),
        n,
    )
    .prop_map(move |rows| {
        Mat::from_rows(
            rows.into_iter()
                .map(|row| row.into_iter().map(|(re, im)| C64::new(re, im)).collect())
                .collect(),
        )
    })
}

proptest! {
    #[test]
    fn fourier_roundtrip_is_the_identity(
        n in 1usize..5,
        m in 1usize..5,
        seed in 0u64..1000,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let phi = Mat::from_fn(n, m, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let back = inverse_fourier_transform_2d(&fourier_transform_2d(&phi));
        prop_assert!(back.max_abs_diff(&phi) < 1e-12);
    }

    #[test]
    fn fourier_roundtrip_on_structured_tables(phi in complex_table(3, 4)) {
        let back = inverse_fourier_transform_2d(&fourier_transform_2d(&phi));
        prop_assert!(back.max_abs_diff(&phi) < 1e-12);
    }

    #[test]
    fn game_value_is_affine_in_the_strategy(t in 0.0..1.0f64, f in 0usize..4, g in 0usize..4) {
        let game = NonlocalGame::chsh();
        let s1 = BareStrategy::uniform(&game);
        let s2 = BareStrategy::deterministic(&game, &[f % 2, f / 2], &[g % 2, g / 2]);
        let mixed = s1.mix(&s2, t);
        let lhs = evaluate_game(&game, &mixed).unwrap().0;
        let rhs = t * evaluate_game(&game, &s1).unwrap().0
            + (1.0 - t) * evaluate_game(&game, &s2).unwrap().0;
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn word_group_laws(a in 0usize..30, b in 0usize..30, c in 0usize..30) {
        let group = FreeProduct::new(vec![2, 3]);
        let words = enumerate_words(&group, 4).unwrap();
        let (a, b, c) = (&words[a % words.len()], &words[b % words.len()], &words[c % words.len()]);
        // Associativity.
        let left = word_multiply(&group, &word_multiply(&group, a, b), c);
        let right = word_multiply(&group, a, &word_multiply(&group, b, c));
        prop_assert_eq!(&left, &right);
        // Inverses.
        prop_assert!(word_multiply(&group, a, &word_inverse(&group, a)).is_identity());
    }

    #[test]
    fn partial_averaging_is_idempotent(k in 0usize..6, seed in 0u64..500) {
        use rand::{Rng, SeedableRng};
        let n = 5usize;
        let k = k.min(n);
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let f: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let once = partial_average(k, n, &f).unwrap();
        let twice = partial_average(k, n, &once).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).norm() < 1e-14);
        }
    }
}
