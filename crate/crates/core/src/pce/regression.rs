//! Regression matrix assembly, least-squares coefficients, and the
//! hat-matrix form of the leave-one-out cross-validation error.

use nalgebra::DMatrix;
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::stochastic::{jacobi_orthonormal_eval, InputSpace, SampleSet};

use super::{total_order_set, MultiIndexSet, PceModel};

/// Entry (i, j) is basis term j evaluated at sample row i.
pub fn regression_matrix(
    basis: &MultiIndexSet,
    xi: &Array2<f64>,
    space: &InputSpace,
) -> Array2<f64> {
    let n_s = xi.nrows();
    let n_p = basis.len();
    let n_d = space.dim();
    let max_per_dim: Vec<u32> = (0..n_d)
        .map(|d| basis.iter().map(|m| m.orders()[d]).max().unwrap_or(0))
        .collect();
    let mut psi = Array2::zeros((n_s, n_p));
    let mut uni: Vec<Vec<f64>> = max_per_dim
        .iter()
        .map(|&k| vec![0.0; k as usize + 1])
        .collect();
    for i in 0..n_s {
        for d in 0..n_d {
            let x = xi[(i, d)];
            for k in 0..=max_per_dim[d] as usize {
                uni[d][k] = jacobi_orthonormal_eval(k, x, space.input(d));
            }
        }
        for (j, idx) in basis.iter().enumerate() {
            let mut v = 1.0;
            for (d, &k) in idx.orders().iter().enumerate() {
                v *= uni[d][k as usize];
            }
            psi[(i, j)] = v;
        }
    }
    psi
}

fn to_nalgebra(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_nalgebra(a: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| a[(i, j)])
}

/// Least-squares minimizer of ‖Ψu − q‖₂² per QoI column, computed through a
/// column-pivoted QR factorization.
pub fn ols_fit(psi: &Array2<f64>, q: &Array2<f64>) -> Result<Array2<f64>> {
    let (n_s, n_p) = psi.dim();
    assert_eq!(n_s, q.nrows(), "sample count mismatch between Ψ and q");
    if n_s < n_p {
        return Err(Error::RankDeficient {
            deficient: n_p - n_s,
            total: n_p,
        });
    }
    let qr = to_nalgebra(psi).col_piv_qr();
    let r = qr.r();
    let r_max = r.diagonal().iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let deficient = r
        .diagonal()
        .iter()
        .filter(|d| d.abs() <= 1e-10 * r_max)
        .count();
    if deficient > 0 || r_max == 0.0 {
        return Err(Error::RankDeficient {
            deficient: deficient.max(1),
            total: n_p,
        });
    }
    let qtb = qr.q().transpose() * to_nalgebra(q);
    let mut x = r
        .solve_upper_triangular(&qtb)
        .ok_or(Error::RankDeficient {
            deficient: 1,
            total: n_p,
        })?;
    qr.p().inv_permute_rows(&mut x);
    Ok(from_nalgebra(&x))
}

/// Relative ℓ2 leave-one-out error, averaged over QoI columns.
///
/// Uses the rank-one identity e_i = r_i / (1 − h_ii) with h_ii the hat-matrix
/// diagonal, so no refits are performed.
pub fn loocv_error(psi: &Array2<f64>, q: &Array2<f64>) -> Result<f64> {
    let (n_s, n_p) = psi.dim();
    let coeffs = ols_fit(psi, q)?;
    let fitted = psi.dot(&coeffs);

    // h_ii from the thin Q factor: h = diag(Q Qᵀ)
    let qr = to_nalgebra(psi).col_piv_qr();
    let q_thin = qr.q();
    let mut err_sum = 0.0;
    let n_q = q.ncols();
    let mut loo = vec![0.0_f64; n_s];
    for i in 0..n_s {
        let h: f64 = q_thin.row(i).iter().map(|v| v * v).sum();
        if h >= 1.0 - 1e-12 {
            return Err(Error::IllPosedLoo {
                sample: i,
                leverage: h,
            });
        }
        loo[i] = 1.0 - h;
    }
    for col in 0..n_q {
        let mut e_sq = 0.0;
        let mut q_sq = 0.0;
        for i in 0..n_s {
            let e = (q[(i, col)] - fitted[(i, col)]) / loo[i];
            e_sq += e * e;
            q_sq += q[(i, col)] * q[(i, col)];
        }
        if q_sq > 0.0 {
            err_sum += (e_sq / q_sq).sqrt();
        } else if e_sq > 0.0 {
            err_sum += f64::INFINITY;
        }
        let _ = n_p;
    }
    Ok(err_sum / n_q as f64)
}

/// Standard PCE: total-order basis of the given order, OLS coefficients,
/// LOOCV error populated.
pub fn fit_standard_pce(
    samples: &SampleSet,
    space: &InputSpace,
    max_order: u32,
) -> Result<PceModel> {
    let basis = total_order_set(space.dim(), max_order);
    if basis.len() > samples.n_samples() {
        return Err(Error::config(format!(
            "total-order basis has {} terms but only {} samples are available; \
             use a smaller order",
            basis.len(),
            samples.n_samples()
        )));
    }
    let psi = regression_matrix(&basis, &samples.xi, space);
    let coeffs = ols_fit(&psi, &samples.q)?;
    let loocv = loocv_error(&psi, &samples.q)?;
    Ok(PceModel {
        basis,
        coeffs,
        space: space.clone(),
        loocv_error: loocv,
    })
}
