//! Randomised invariants of the model, the Born map, the metrics and the
//! seed splitter.

use num_complex::Complex64;
use proptest::prelude::*;

use qtomo::estimate::{linear_inversion, maee, mse};
use qtomo::linalg::{hermitian_eigenvalues, trace};
use qtomo::model::{loss_prob, rho_from_params, StateParams};
use qtomo::qcore::born_probabilities;
use qtomo::rng::derive_seed;
use qtomo::samplers::{adaptive_propose, ProposalDraw};

/// Parameters for `n` in 1..=3 with weights and vector entries in sane ranges.
fn params() -> impl Strategy<Value = StateParams> {
    (1usize..=3).prop_flat_map(|n| {
        let d = 1 << n;
        (
            prop::collection::vec(1e-3f64..10.0, d),
            prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), d * d),
        )
            .prop_filter_map("zero vector", move |(y, z)| {
                let z = z.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
                StateParams::new(d, y, z).ok()
            })
    })
}

fn scaled(x: &StateParams, cy: f64, cz: Complex64) -> StateParams {
    let y = x.weights().iter().map(|w| w * cy).collect();
    let z = x.vectors().iter().map(|v| v * cz).collect();
    StateParams::new(x.dim(), y, z).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rho_is_a_density_matrix(x in params()) {
        let rho = rho_from_params(&x);
        let m = rho.matrix();
        prop_assert_eq!(m, &m.adjoint());
        prop_assert!((trace(m).re - 1.0).abs() < 1e-12);
        let eig = hermitian_eigenvalues(m, 1e-12).unwrap();
        prop_assert!(*eig.last().unwrap() >= -1e-10);
    }

    #[test]
    fn rho_ignores_weight_and_vector_scale(x in params(), cy in 0.01f64..100.0, re in 0.1f64..3.0, im in -3.0f64..3.0) {
        let a = rho_from_params(&x).into_matrix();
        let b = rho_from_params(&scaled(&x, cy, Complex64::new(re, im))).into_matrix();
        prop_assert!(mse(&a, &b).unwrap() < 1e-26);
    }

    #[test]
    fn born_rows_are_distributions(x in params()) {
        let p = born_probabilities(&rho_from_params(&x));
        for row in p.rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(row.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        }
    }

    #[test]
    fn linear_inversion_inverts_the_born_map(x in params()) {
        let rho = rho_from_params(&x);
        let back = linear_inversion(&born_probabilities(&rho));
        prop_assert!(mse(&back, rho.matrix()).unwrap() < 1e-24);
    }

    #[test]
    fn loss_is_symmetric_and_its_root_is_a_metric(a in params(), b in params(), c in params()) {
        prop_assume!(a.dim() == b.dim() && b.dim() == c.dim());
        let (pa, pb, pc) = (
            born_probabilities(&rho_from_params(&a)),
            born_probabilities(&rho_from_params(&b)),
            born_probabilities(&rho_from_params(&c)),
        );
        let ab = loss_prob(&pa, &pb).unwrap();
        prop_assert_eq!(ab, loss_prob(&pb, &pa).unwrap());
        let (ac, cb) = (loss_prob(&pa, &pc).unwrap(), loss_prob(&pc, &pb).unwrap());
        prop_assert!(ab.sqrt() <= ac.sqrt() + cb.sqrt() + 1e-12);
    }

    #[test]
    fn metrics_are_symmetric_and_vanish_on_the_diagonal(a in params(), b in params()) {
        prop_assume!(a.dim() == b.dim());
        let (ra, rb) = (rho_from_params(&a).into_matrix(), rho_from_params(&b).into_matrix());
        prop_assert_eq!(mse(&ra, &ra).unwrap(), 0.0);
        prop_assert!(maee(&ra, &ra).unwrap() < 1e-12);
        prop_assert_eq!(mse(&ra, &rb).unwrap(), mse(&rb, &ra).unwrap());
        prop_assert!((maee(&ra, &rb).unwrap() - maee(&rb, &ra).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn adaptive_proposal_keeps_weights_in_the_step_window(
        x in params(), beta_y in 0.0001f64..0.999, beta_z in 0.0001f64..0.999, seed in any::<u64>(),
    ) {
        let draw = ProposalDraw::sample(x.dim(), &mut qtomo::rng::rng_from_seed(seed));
        let x2 = adaptive_propose(&x, beta_y, beta_z, &draw).unwrap();
        for (a, b) in x.weights().iter().zip(x2.weights()) {
            prop_assert!(*b > 0.0);
            prop_assert!((b / a).ln().abs() <= beta_y / 2.0 + 1e-12);
        }
    }

    #[test]
    fn derived_seeds_differ_across_indices(master in any::<u64>(), i in any::<u64>(), j in any::<u64>()) {
        prop_assume!(i != j);
        prop_assert_ne!(derive_seed(master, i), derive_seed(master, j));
    }
}
