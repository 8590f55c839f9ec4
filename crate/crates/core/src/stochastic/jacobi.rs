//! Jacobi polynomials orthonormal under shifted Beta densities.
//!
//! A Beta(alpha, beta) input on `[lower, upper]` maps to the Jacobi weight
//! (1−t)^a (1+t)^b on [−1, 1] with a = beta−1, b = alpha−1. Polynomials are
//! normalized so that E[ψ_m ψ_n] = δ_mn under the input density.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use super::RandomInputSpec;

/// Degree-`order` orthonormal polynomial of `spec`, evaluated at `x`
/// (physical units). Evaluation outside the support is permitted.
pub fn jacobi_orthonormal_eval(order: usize, x: f64, spec: &RandomInputSpec) -> f64 {
    let t = 2.0 * (x - spec.lower) / spec.width() - 1.0;
    let (a, b) = spec.jacobi_exponents();
    jacobi_poly(order, a, b, t) * orthonormal_scale(order, a, b)
}

/// Jacobi polynomial P_n^{(a,b)}(t) by the three-term recurrence.
fn jacobi_poly(n: usize, a: f64, b: f64, t: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut p_prev = 1.0;
    let mut p = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * t;
    for k in 2..=n {
        let k = k as f64;
        let c = 2.0 * k + a + b;
        let a1 = 2.0 * k * (k + a + b) * (c - 2.0);
        let a2 = (c - 1.0) * (a * a - b * b);
        let a3 = (c - 1.0) * c * (c - 2.0);
        let a4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c;
        let next = ((a2 + a3 * t) * p - a4 * p_prev) / a1;
        p_prev = p;
        p = next;
    }
    p
}

/// Scale factor turning P_n^{(a,b)} into a unit-variance basis element under
/// the matching Beta probability density.
fn orthonormal_scale(n: usize, a: f64, b: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let n = n as f64;
    // Z/h_n with Z the Beta weight normalization and h_n the Jacobi norm
    let ln = (2.0 * n + a + b + 1.0).ln() - (a + b + 1.0).ln()
        + ln_gamma(a + 1.0)
        + ln_gamma(b + 1.0)
        + ln_gamma(n + a + b + 1.0)
        + ln_gamma(n + 1.0)
        - ln_gamma(a + b + 1.0)
        - ln_gamma(n + a + 1.0)
        - ln_gamma(n + b + 1.0);
    (0.5 * ln).exp()
}

/// Gauss–Jacobi quadrature rule expressed in the probability measure of a
/// bounded Beta input: nodes in `[lower, upper]`, weights summing to one.
#[derive(Debug, Clone)]
pub struct GaussJacobiRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussJacobiRule {
    /// Build an `n`-point rule by the Golub–Welsch algorithm.
    pub fn new(n: usize, spec: &RandomInputSpec) -> Self {
        assert!(n >= 2, "Gauss-Jacobi rule needs at least 2 nodes");
        let (a, b) = spec.jacobi_exponents();
        let mut m = DMatrix::<f64>::zeros(n, n);
        let mut diag = (b - a) / (a + b + 2.0);
        for i in 0..n - 1 {
            let k = (i + 1) as f64;
            let denom = 2.0 * k + a + b;
            let off = 2.0 / denom
                * (k * (k + a) * (k + b) * (k + a + b) / ((denom + 1.0) * (denom - 1.0))).sqrt();
            m[(i, i)] = diag;
            m[(i, i + 1)] = off;
            m[(i + 1, i)] = off;
            diag = (b * b - a * a) / (denom * (denom + 2.0));
        }
        m[(n - 1, n - 1)] = diag;

        let eigen = SymmetricEigen::new(m);
        let mut pairs: Vec<(f64, f64)> = eigen
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let w = eigen.eigenvectors[(0, i)].powi(2);
                let x = spec.lower + 0.5 * (t + 1.0) * spec.width();
                (x, w)
            })
            .collect();
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Self { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Maximum absolute deviation of the Gram matrix from the identity for
/// orders `0..=max_order` under an `n_nodes`-point Gauss–Jacobi rule.
pub fn orthonormality_defect(spec: &RandomInputSpec, max_order: usize, n_nodes: usize) -> f64 {
    let rule = GaussJacobiRule::new(n_nodes, spec);
    let evals: Vec<Vec<f64>> = rule
        .nodes
        .iter()
        .map(|&x| {
            (0..=max_order)
                .map(|k| jacobi_orthonormal_eval(k, x, spec))
                .collect()
        })
        .collect();
    let mut worst = 0.0_f64;
    for m in 0..=max_order {
        for n in 0..=max_order {
            let g: f64 = rule
                .weights
                .iter()
                .zip(&evals)
                .map(|(&w, row)| w * row[m] * row[n])
                .sum();
            let target = if m == n { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn beta33(lower: f64, upper: f64) -> RandomInputSpec {
        RandomInputSpec::new("x", 3.0, 3.0, lower, upper, "m").unwrap()
    }

    #[test]
    fn order_zero_is_one_everywhere() {
        let spec = beta33(9.0, 13.0);
        for &x in &[9.0, 10.3, 11.0, 12.9, 14.0] {
            assert_eq!(jacobi_orthonormal_eval(0, x, &spec), 1.0);
        }
    }

    #[test]
    fn odd_orders_vanish_at_center_for_symmetric_beta() {
        let spec = beta33(-1.0, 1.0);
        for order in [1, 3, 5, 7] {
            assert_abs_diff_eq!(jacobi_orthonormal_eval(order, 0.0, &spec), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn quadrature_reproduces_closed_form_beta_moments() {
        // E[x] = 11, Var = (13−9)²·9/(36·7) = 4/7 for Beta(3,3) on [9,13]
        let spec = beta33(9.0, 13.0);
        let rule = GaussJacobiRule::new(16, &spec);
        assert_abs_diff_eq!(rule.integrate(|_| 1.0), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(rule.integrate(|x| x), 11.0, epsilon = 1e-11);
        let var = rule.integrate(|x| (x - 11.0) * (x - 11.0));
        assert_abs_diff_eq!(var, 4.0 / 7.0, epsilon = 1e-11);
    }

    #[test]
    fn gram_matrix_is_identity_under_64_node_rule() {
        let spec = beta33(9.0, 13.0);
        let defect = orthonormality_defect(&spec, 6, 64);
        assert!(defect < 1e-10, "Gram defect {defect}");
    }

    #[test]
    fn gram_identity_for_asymmetric_shapes() {
        let spec = RandomInputSpec::new("x", 2.0, 5.0, -3.0, 7.0, "m").unwrap();
        let defect = orthonormality_defect(&spec, 8, 64);
        assert!(defect < 1e-9, "Gram defect {defect}");
    }

    #[test]
    fn recurrence_stays_finite_up_to_order_12() {
        let spec = beta33(9.0, 13.0);
        for order in 0..=12 {
            for i in 0..=40 {
                let x = 9.0 + 4.0 * i as f64 / 40.0;
                assert!(jacobi_orthonormal_eval(order, x, &spec).is_finite());
            }
        }
    }
}
