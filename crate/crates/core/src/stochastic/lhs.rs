//! Latin hypercube sampling mapped through the input marginals.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::{beta_inverse_cdf, InputSpace};

/// `n`-point Latin hypercube design in physical units.
///
/// Per dimension, each of the `n` equiprobable CDF strata receives exactly
/// one point, uniformly jittered inside its stratum, then mapped through the
/// inverse CDF. Deterministic for a given seed.
pub fn lhs_sample(space: &InputSpace, n: usize, seed: u64) -> Array2<f64> {
    assert!(n >= 1, "LHS needs at least one sample");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut xi = Array2::zeros((n, space.dim()));
    for (d, spec) in space.inputs().iter().enumerate() {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        for (i, &s) in strata.iter().enumerate() {
            let p = (s as f64 + rng.gen::<f64>()) / n as f64;
            xi[(i, d)] = beta_inverse_cdf(p, spec);
        }
    }
    xi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{beta_cdf, RandomInputSpec};

    fn space2() -> InputSpace {
        InputSpace::new(vec![
            RandomInputSpec::new("a", 3.0, 3.0, 9.0, 13.0, "m").unwrap(),
            RandomInputSpec::new("b", 3.0, 3.0, -3.0, 3.0, "deg").unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn single_point_lies_inside_support() {
        let space = space2();
        let xi = lhs_sample(&space, 1, 4);
        assert!(xi[(0, 0)] > 9.0 && xi[(0, 0)] < 13.0);
        assert!(xi[(0, 1)] > -3.0 && xi[(0, 1)] < 3.0);
    }

    #[test]
    fn stratum_occupancy_is_one_per_stratum() {
        let space = space2();
        let n = 10;
        let xi = lhs_sample(&space, n, 123);
        for d in 0..space.dim() {
            let mut hist = vec![0usize; n];
            for i in 0..n {
                let p = beta_cdf(xi[(i, d)], space.input(d));
                let s = ((p * n as f64) as usize).min(n - 1);
                hist[s] += 1;
            }
            assert_eq!(hist, vec![1; n], "dimension {d} occupancy {hist:?}");
        }
    }

    #[test]
    fn sample_mean_matches_beta_mean_within_3_se() {
        let space = space2();
        let n = 1000;
        let xi = lhs_sample(&space, n, 2024);
        for d in 0..space.dim() {
            let spec = space.input(d);
            let mean: f64 = xi.column(d).sum() / n as f64;
            // Var of Beta(3,3) on [l,u] is (u−l)²/28; LHS has lower variance
            // than iid so 3·SE_iid is conservative.
            let se = (spec.width().powi(2) / 28.0 / n as f64).sqrt();
            assert!(
                (mean - spec.mean()).abs() <= 3.0 * se,
                "dim {d}: mean {mean} vs {} (se {se})",
                spec.mean()
            );
        }
    }

    #[test]
    fn same_seed_same_design() {
        let space = space2();
        let a = lhs_sample(&space, 25, 9);
        let b = lhs_sample(&space, 25, 9);
        assert_eq!(a, b);
        let c = lhs_sample(&space, 25, 10);
        assert_ne!(a, c);
    }
}
