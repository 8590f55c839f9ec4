//! Beta densities on shifted supports and their inverse CDF.

use statrs::function::beta::{beta_reg, ln_beta};

use super::RandomInputSpec;

/// Density of Beta(alpha, beta) rescaled to `[lower, upper]`; zero outside.
pub fn beta_pdf(x: f64, spec: &RandomInputSpec) -> f64 {
    if x < spec.lower || x > spec.upper {
        return 0.0;
    }
    let t = (x - spec.lower) / spec.width();
    pdf_unit(t, spec.alpha, spec.beta) / spec.width()
}

/// CDF of the rescaled Beta at `x` (0 left of the support, 1 right of it).
pub fn beta_cdf(x: f64, spec: &RandomInputSpec) -> f64 {
    if x <= spec.lower {
        return 0.0;
    }
    if x >= spec.upper {
        return 1.0;
    }
    let t = (x - spec.lower) / spec.width();
    beta_reg(spec.alpha, spec.beta, t)
}

/// Inverse CDF via bracketed Newton on the regularized incomplete beta.
///
/// The result satisfies |CDF(result) − p| ≤ 1e-12.
pub fn beta_inverse_cdf(p: f64, spec: &RandomInputSpec) -> f64 {
    assert!((0.0..=1.0).contains(&p), "probability level {p} outside [0, 1]");
    if p == 0.0 {
        return spec.lower;
    }
    if p == 1.0 {
        return spec.upper;
    }
    let (a, b) = (spec.alpha, spec.beta);
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    // mean of the unit Beta as the starting point
    let mut t = a / (a + b);
    for _ in 0..200 {
        let f = beta_reg(a, b, t) - p;
        if f.abs() <= 1e-13 {
            break;
        }
        if f > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let d = pdf_unit(t, a, b);
        let newton = t - f / d;
        t = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    spec.lower + t * spec.width()
}

fn pdf_unit(t: f64, a: f64, b: f64) -> f64 {
    // Endpoint limits, avoiding 0·ln(0)
    if t <= 0.0 {
        return match a {
            a if a > 1.0 => 0.0,
            a if a == 1.0 => (-ln_beta(a, b)).exp(),
            _ => f64::INFINITY,
        };
    }
    if t >= 1.0 {
        return match b {
            b if b > 1.0 => 0.0,
            b if b == 1.0 => (-ln_beta(a, b)).exp(),
            _ => f64::INFINITY,
        };
    }
    ((a - 1.0) * t.ln() + (b - 1.0) * (1.0 - t).ln() - ln_beta(a, b)).exp()
}
