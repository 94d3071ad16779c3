//! Property-based invariants across the public API. Random operators are
//! drawn from seeds so that failing cases shrink to a reproducible seed.

use ccr_fock::bogoliubov::BogoliubovOperator;
use ccr_fock::decomposition::{canonical_decomposition, free_part, general_z, general_z_matrix, w_explicit_check};
use ccr_fock::disk::{self, DiskPoint};
use ccr_fock::exec::Execution;
use ccr_fock::fock::{FockSpace, MultiIndex};
use ccr_fock::implementer::{
    gaussian_vacuum_norm_check, h_expanded, h_from_vz, intertwining_relations, wick_exp_factored, wick_exp_series,
    QuadraticHamiltonian,
};
use ccr_fock::corpus::case_rng;
use ccr_fock::linalg::{diff, op_norm};
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = (usize, usize)> {
    prop_oneof![Just((1, 1)), Just((1, 2)), Just((2, 2)), Just((1, 3)), Just((2, 3))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decomposition_reconstructs_and_preserves_index((m, big) in shape(), bound in 0.0f64..0.9, seed in any::<u64>()) {
        let v = BogoliubovOperator::random(m, big, bound, seed).unwrap();
        let d = canonical_decomposition(&v).unwrap();
        let r = d.residuals(&v);
        prop_assert!(r.max_identity() < 1e-9, "{r:?}");
        prop_assert!(r.index_preserved);
        prop_assert!(w_explicit_check(&v, &d) < 1e-9);
        prop_assert!(d.z_v.norm() < 1.0);
        prop_assert_eq!(v.index(), -2 * (big as i64 - m as i64));
    }

    #[test]
    fn z_v_is_the_general_solution_with_its_free_part((m, big) in shape(), seed in any::<u64>()) {
        let v = BogoliubovOperator::random(m, big, 0.7, seed).unwrap();
        let d = canonical_decomposition(&v).unwrap();
        let zp = free_part(&v, d.z_v.z()).unwrap();
        let z = general_z(&v, Some(&zp)).unwrap();
        prop_assert!(diff(z.z(), d.z_v.z()) < 1e-9);
        let z0 = general_z_matrix(&v, None).unwrap();
        prop_assert!(diff(&(z0 * v.v11()), &v.v21()) < 1e-9);
    }

    #[test]
    fn hamiltonian_intertwines((m, big) in shape(), seed in any::<u64>()) {
        let v = BogoliubovOperator::random(m, big, 0.8, seed).unwrap();
        let d = canonical_decomposition(&v).unwrap();
        let h = h_from_vz(&v, &d.z_v).unwrap();
        for r in intertwining_relations(&v, &h) {
            prop_assert!(r < 1e-9, "{r}");
        }
        let zp = free_part(&v, d.z_v.z()).unwrap();
        prop_assert!(h.distance(&h_expanded(&v, Some(&zp)).unwrap()) < 1e-9);
        prop_assert!(op_norm(h.h12()) < 1.0);
    }

    #[test]
    fn mobius_action_composes(modes in 1usize..4, seed in any::<u64>()) {
        let mut rng = case_rng(seed, 0);
        let z = DiskPoint::random(modes, 0.8, &mut rng).unwrap();
        let a = BogoliubovOperator::random(modes, modes, 0.6, seed ^ 1).unwrap();
        let b = BogoliubovOperator::random(modes, modes, 0.6, seed ^ 2).unwrap();
        let ab = a.compose(&b).unwrap();
        let lhs = disk::mobius_action(&ab, &z).unwrap();
        let rhs = disk::mobius_action(&a, &disk::mobius_action(&b, &z).unwrap()).unwrap();
        prop_assert!(diff(lhs.z(), rhs.z()) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn wick_series_matches_factored(big in 1usize..3, seed in any::<u64>(), cutoff in 2usize..6) {
        let m = 1 + (seed as usize) % big;
        let mut rng = case_rng(seed, 1);
        let h = QuadraticHamiltonian::random(m, big, 0.7, &mut rng).unwrap();
        let s = FockSpace::new(m, cutoff).unwrap();
        let t = FockSpace::new(big, cutoff).unwrap();
        let a = wick_exp_series(&h, &s, &t).unwrap();
        let b = wick_exp_factored(&h, &s, &t, Execution::Sequential).unwrap();
        prop_assert!(diff(a.matrix(), b.matrix()) < 1e-10);
    }

    #[test]
    fn gaussian_norm_within_tail(big in 1usize..3, seed in any::<u64>()) {
        let mut rng = case_rng(seed, 2);
        let h = QuadraticHamiltonian::random(big, big, 0.5, &mut rng).unwrap();
        let t = FockSpace::new(big, 16).unwrap();
        let c = gaussian_vacuum_norm_check(&h, &t).unwrap();
        prop_assert!(c.within_tail(), "{c:?}");
        prop_assert!(c.lhs <= c.rhs + 1e-12);
    }

    #[test]
    fn multi_index_round_trips(entries in proptest::collection::vec(1usize..4, 0..5)) {
        let mut sorted = entries.clone();
        sorted.sort();
        let a = MultiIndex::new(sorted).unwrap();
        let parsed = MultiIndex::parse(&a.to_string()).unwrap();
        prop_assert_eq!(a, parsed);
    }
}
