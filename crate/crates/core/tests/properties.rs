//! Randomized structural properties over seeded states.

use enthier::classify::{
    classify_tripartite, monoid_product, permute_triple, predict_product_class, theorem_violations, EQUAL_WEIGHTS,
    PERMUTATIONS,
};
use enthier::criteria::{CriteriaBundle, Settings};
use enthier::linalg::DEFAULT_TOL;
use enthier::qstate::{entropy, reduce};
use enthier::sampling::random_pure_state;
use enthier::statefile::StateFile;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dims3() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(2usize..=3, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hierarchy_chain_is_never_broken(dims in dims3(), seed in any::<u64>()) {
        let psi = random_pure_state(&dims, &mut ChaCha8Rng::seed_from_u64(seed));
        for keep in [[0, 1], [1, 2], [2, 0]] {
            let rho = reduce(&psi, &keep).unwrap();
            let bundle = CriteriaBundle::evaluate(&rho, DEFAULT_TOL).unwrap();
            prop_assert!(bundle.chain_violations().is_empty(), "{:?}", bundle.chain_violations());
        }
    }

    #[test]
    fn complementary_entropies_agree(dims in dims3(), seed in any::<u64>()) {
        let psi = random_pure_state(&dims, &mut ChaCha8Rng::seed_from_u64(seed));
        let a = entropy(&reduce(&psi, &[0]).unwrap()).unwrap();
        let bc = entropy(&reduce(&psi, &[1, 2]).unwrap()).unwrap();
        prop_assert!((a - bc).abs() < 1e-9);
    }

    #[test]
    fn classification_is_permutation_covariant(dims in dims3(), seed in any::<u64>(), k in 0usize..6) {
        let psi = random_pure_state(&dims, &mut ChaCha8Rng::seed_from_u64(seed));
        let perm = PERMUTATIONS[k];
        let settings = Settings::default();
        let t = classify_tripartite(&psi, None, &settings).unwrap();
        let moved = classify_tripartite(&psi.permute_parties(&perm).unwrap(), None, &settings).unwrap();
        prop_assert_eq!(moved.raw, permute_triple(&t.raw, perm));
        prop_assert_eq!(moved.canonical, t.canonical);
        prop_assert!(theorem_violations(&t.raw).is_empty());
    }

    #[test]
    fn direct_sums_follow_the_max_rule(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_pure_state(&[2, 2, 2], &mut rng);
        let b = random_pure_state(&[2, 2, 2], &mut rng);
        let settings = Settings::default();
        let ta = classify_tripartite(&a, None, &settings).unwrap();
        let tb = classify_tripartite(&b, None, &settings).unwrap();
        let sum = monoid_product(&a, &b, EQUAL_WEIGHTS).unwrap();
        let ts = classify_tripartite(&sum, None, &settings).unwrap();
        prop_assert_eq!(ts.raw, predict_product_class(&ta.raw, &tb.raw));
    }

    #[test]
    fn state_files_round_trip(dims in prop::collection::vec(1usize..=3, 2..=4), seed in any::<u64>()) {
        let psi = random_pure_state(&dims, &mut ChaCha8Rng::seed_from_u64(seed));
        let text = StateFile::from_state(&psi, None).to_canonical_string();
        let back = StateFile::parse(&text).unwrap().to_state(false).unwrap();
        prop_assert_eq!(back.amps(), psi.amps());
        prop_assert_eq!(StateFile::from_state(&back, None).to_canonical_string(), text);
    }
}
