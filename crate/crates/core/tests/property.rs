//! Property tests for the algebraic invariants of the kernel and parameter
//! modules.

use proptest::prelude::*;

use startri::growth::{check_stochastic_domination, FiniteLaw};
use startri::star_triangle::{
    apply_kernel, connection_partition, kernel_s_distribution, kernel_t_distribution, CellConfig,
    CellFamily,
};
use startri::{complete_self_dual, kappa_hexagonal, kappa_square, kappa_triangular, Triplet};

fn prob() -> impl Strategy<Value = f64> {
    0.0..1.0f64
}

/// A strictly interior self-dual triplet.
fn self_dual_triplet() -> impl Strategy<Value = Triplet> {
    (0.01..0.99f64, 0.0..1.0f64).prop_filter_map("no self-dual completion", |(p0, frac)| {
        let p1 = (1.0 - p0) * frac;
        complete_self_dual(p0, p1)
            .ok()
            .map(|p2| Triplet::new(p0, p1, p2))
    })
}

proptest! {
    #[test]
    fn hexagonal_kappa_is_negated_complement(p0 in prob(), p1 in prob(), p2 in prob()) {
        let p = Triplet::new(p0, p1, p2);
        let lhs = kappa_hexagonal(&p.complement());
        prop_assert!((lhs + kappa_triangular(&p)).abs() < 1e-12);
    }

    #[test]
    fn square_kappa_reduces_triangular(ph in prob(), pv in prob()) {
        // setting one triangular parameter to zero recovers the square rule
        let p = Triplet::new(ph, pv, 0.0);
        prop_assert!((kappa_triangular(&p) - kappa_square(ph, pv)).abs() < 1e-12);
    }

    #[test]
    fn completion_lands_on_surface(p0 in prob(), p1 in prob()) {
        if let Ok(p2) = complete_self_dual(p0, p1) {
            prop_assert!((0.0..1.0).contains(&p2));
            prop_assert!(kappa_triangular(&Triplet::new(p0, p1, p2)).abs() <= 1e-12);
        }
    }

    #[test]
    fn kernel_rows_are_distributions(p in self_dual_triplet(), omega in 0u8..8) {
        let omega = CellConfig(omega);
        for dist in [
            kernel_t_distribution(omega, &p).unwrap(),
            kernel_s_distribution(omega, &p).unwrap(),
        ] {
            prop_assert!((dist.total() - 1.0).abs() < 1e-12);
            for &(_, prob) in &dist.outcomes {
                prop_assert!(prob >= -1e-15);
            }
        }
    }

    #[test]
    fn kernels_preserve_connections_branchwise(p in self_dual_triplet(), omega in 0u8..8) {
        let omega = CellConfig(omega);
        let before = connection_partition(omega, CellFamily::Triangle);
        for &(out, _) in &kernel_t_distribution(omega, &p).unwrap().outcomes {
            prop_assert_eq!(connection_partition(out, CellFamily::Star), before);
        }
        let before = connection_partition(omega, CellFamily::Star);
        for &(out, _) in &kernel_s_distribution(omega, &p).unwrap().outcomes {
            prop_assert_eq!(connection_partition(out, CellFamily::Triangle), before);
        }
    }

    #[test]
    fn sampling_stays_in_support(p in self_dual_triplet(), omega in 0u8..8, u in 0.0..1.0f64) {
        let dist = kernel_t_distribution(CellConfig(omega), &p).unwrap();
        let picked = apply_kernel(&dist, u);
        prop_assert!(dist.outcomes.iter().any(|&(c, _)| c == picked));
    }

    #[test]
    fn domination_is_reflexive_and_monotone(vals in proptest::collection::vec(0.0..1.0f64, 2..6)) {
        let total: f64 = vals.iter().sum();
        let law: FiniteLaw = vals
            .iter()
            .enumerate()
            .map(|(i, &w)| (i as f64, w / total.max(1e-9)))
            .collect();
        prop_assert!(check_stochastic_domination(&law, &law));
        let shifted: FiniteLaw = law.iter().map(|&(v, p)| (v + 1.0, p)).collect();
        prop_assert!(check_stochastic_domination(&law, &shifted));
        prop_assert!(!check_stochastic_domination(&shifted, &law));
    }
}
