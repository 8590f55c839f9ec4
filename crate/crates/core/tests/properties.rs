//! Property tests of the crate-wide invariants.

use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;

use propuq::pce::{ols_fit, total_order_cardinality, total_order_set};
use propuq::pwe::{step_backward, step_forward, GroundModel, PweConfig};
use propuq::stochastic::{beta_cdf, beta_inverse_cdf, RandomInputSpec};

fn pwe_cfg() -> PweConfig {
    PweConfig {
        delta_range_m: 50.0,
        delta_height_m: 0.5,
        max_height_m: 128.0,
        frequency_hz: 435e6,
        total_range_m: 1000.0,
        ground: GroundModel::Pec,
        absorber_fraction: 0.25,
        max_reflections: 1,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn free_space_step_preserves_norm_and_inverts(seed in 0u64..1_000_000) {
        let cfg = pwe_cfg();
        let n = cfg.n_height_points();
        let col: Vec<Complex64> = (0..n)
            .map(|j| {
                let a = ((j as f64 + 1.0) * (seed as f64 + 1.0) * 0.61803).sin();
                let b = ((j as f64 + 2.0) * (seed as f64 + 1.0) * 0.3292).cos();
                Complex64::new(a, b)
            })
            .collect();
        let norm = |c: &[Complex64]| c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let fwd = step_forward(&col, &cfg).unwrap();
        prop_assert!(((norm(&fwd) - norm(&col)) / norm(&col)).abs() <= 1e-12);
        let back = step_backward(&fwd, &cfg).unwrap();
        let err: f64 = col.iter().zip(&back).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
            / norm(&col);
        prop_assert!(err <= 1e-12, "round trip error {err}");
    }

    #[test]
    fn inverse_cdf_round_trips_and_respects_symmetry(
        alpha in 0.5f64..6.0,
        beta in 0.5f64..6.0,
        p in 0.001f64..0.999,
        lower in -50.0f64..50.0,
        width in 0.1f64..100.0,
    ) {
        let spec = RandomInputSpec::new("x", alpha, beta, lower, lower + width, "-").unwrap();
        let x = beta_inverse_cdf(p, &spec);
        prop_assert!(x >= spec.lower && x <= spec.upper);
        prop_assert!((beta_cdf(x, &spec) - p).abs() <= 1e-11);
        if (alpha - beta).abs() < 1e-12 {
            let mirror = beta_inverse_cdf(1.0 - p, &spec);
            prop_assert!((x + mirror - (spec.lower + spec.upper)).abs() <= 1e-9);
        }
    }

    #[test]
    fn total_order_sets_are_graded_sorted_with_binomial_size(
        n_dims in 1usize..6,
        order in 0u32..6,
    ) {
        let set = total_order_set(n_dims, order);
        prop_assert_eq!(set.len(), total_order_cardinality(n_dims, order));
        prop_assert!(set.is_downward_closed());
        let sorted = set.sorted();
        prop_assert_eq!(sorted.as_slice(), set.indices());
        for idx in set.iter() {
            prop_assert!(idx.total_order() <= order);
        }
    }

    #[test]
    fn ols_is_invariant_under_row_permutations(seed in 0u64..100_000) {
        use rand::seq::SliceRandom;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let n_s = rng.gen_range(12..28);
        let n_p = rng.gen_range(2..8);
        let psi = Array2::from_shape_fn((n_s, n_p), |_| rng.gen::<f64>() - 0.5);
        let q = Array2::from_shape_fn((n_s, 2), |_| rng.gen::<f64>());
        let fit = ols_fit(&psi, &q).unwrap();
        let mut perm: Vec<usize> = (0..n_s).collect();
        perm.shuffle(&mut rng);
        let fit_p = ols_fit(
            &psi.select(ndarray::Axis(0), &perm),
            &q.select(ndarray::Axis(0), &perm),
        )
        .unwrap();
        for (a, b) in fit.iter().zip(fit_p.iter()) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }
}
