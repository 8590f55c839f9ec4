//! Sparse PCE: least-angle-regression selection with OLS refits.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, Axis};
use rayon::prelude::*;

use crate::error::Result;
use crate::stochastic::{InputSpace, SampleSet};

use super::{loocv_error, ols_fit, regression_matrix, total_order_set, MultiIndexSet, PceModel};

/// Active-set snapshots along a LARS path on standardized columns.
///
/// `x` columns must be centered with unit norm, `y` centered. Snapshot k
/// holds the selected column indices after k+1 steps, in selection order.
fn lars_path(x: &DMatrix<f64>, y: &DVector<f64>, max_active: usize) -> Vec<Vec<usize>> {
    let p = x.ncols();
    let mut mu = DVector::<f64>::zeros(x.nrows());
    let mut active: Vec<usize> = Vec::new();
    let mut in_active = vec![false; p];
    let mut snapshots = Vec::new();

    while active.len() < max_active.min(p) {
        let residual = y - &mu;
        let corr = x.transpose() * &residual;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..p {
            if in_active[j] {
                continue;
            }
            let c = corr[j].abs();
            if best.map_or(true, |(_, bc)| c > bc) {
                best = Some((j, c));
            }
        }
        let Some((j_new, c_max)) = best else { break };
        if c_max < 1e-12 {
            break;
        }
        active.push(j_new);
        in_active[j_new] = true;

        // Equiangular direction over the signed active columns
        let k = active.len();
        let signs: Vec<f64> = active.iter().map(|&j| corr[j].signum()).collect();
        let mut xa = DMatrix::<f64>::zeros(x.nrows(), k);
        for (col, (&j, &s)) in active.iter().zip(&signs).enumerate() {
            xa.set_column(col, &(x.column(j) * s));
        }
        let gram = xa.transpose() * &xa;
        let ones = DVector::from_element(k, 1.0);
        let Some(w) = gram.clone().lu().solve(&ones) else {
            // collinear active set; stop extending
            active.pop();
            break;
        };
        let norm_sq = w.sum();
        if norm_sq <= 0.0 {
            active.pop();
            break;
        }
        let a_scale = 1.0 / norm_sq.sqrt();
        let u = &xa * (&w * a_scale);
        let a = x.transpose() * &u;

        // Step length: smallest positive γ at which an inactive column ties
        let mut gamma = c_max / a_scale; // full least-squares step
        for j in 0..p {
            if in_active[j] {
                continue;
            }
            for cand in [
                (c_max - corr[j]) / (a_scale - a[j]),
                (c_max + corr[j]) / (a_scale + a[j]),
            ] {
                if cand > 1e-12 && cand < gamma {
                    gamma = cand;
                }
            }
        }
        mu += u * gamma;
        snapshots.push(active.clone());
    }
    snapshots
}

/// Sparse PCE over the total-order candidate dictionary of `max_order`.
///
/// Per QoI, the LARS path proposes nested active sets; each is refit by OLS
/// together with the constant term and scored by LOOCV. The union of the
/// per-QoI winners forms the model basis, refit jointly over all QoIs.
pub fn fit_sparse_pce(samples: &SampleSet, space: &InputSpace, max_order: u32) -> Result<PceModel> {
    let n_s = samples.n_samples();
    let candidates = total_order_set(space.dim(), max_order);
    let psi = regression_matrix(&candidates, &samples.xi, space);

    // Standardize the non-constant columns for path computation. Column 0 of
    // the graded-lex dictionary is the constant term.
    let mut usable: Vec<usize> = Vec::new();
    let mut cols = Vec::new();
    for j in 1..candidates.len() {
        let col = psi.column(j);
        let mean = col.sum() / n_s as f64;
        let centered: Vec<f64> = col.iter().map(|v| v - mean).collect();
        let norm = centered.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            usable.push(j);
            cols.push(centered.into_iter().map(|v| v / norm).collect::<Vec<f64>>());
        }
    }
    let x = DMatrix::<f64>::from_fn(n_s, usable.len(), |i, j| cols[j][i]);
    // LOOCV needs n_s strictly above the refit size (active + constant)
    let max_active = n_s.saturating_sub(2);

    let per_qoi: Vec<Vec<usize>> = (0..samples.q.ncols())
        .into_par_iter()
        .map(|col| {
            let q_col = samples.q.column(col);
            let mean = q_col.sum() / n_s as f64;
            let y = DVector::from_iterator(n_s, q_col.iter().map(|v| v - mean));
            let path = lars_path(&x, &y, max_active);

            let q_single = samples.q.column(col).insert_axis(Axis(1)).to_owned();
            // constant-only model is the path start
            let mut best_err = loocv_for_subset(&psi, &q_single, &[]);
            let mut best_set: Vec<usize> = Vec::new();
            for snapshot in &path {
                let subset: Vec<usize> = snapshot.iter().map(|&j| usable[j]).collect();
                let err = loocv_for_subset(&psi, &q_single, &subset);
                if err < best_err {
                    best_err = err;
                    best_set = subset;
                }
            }
            best_set
        })
        .collect();

    let mut selected: Vec<usize> = vec![0]; // constant term always present
    for set in &per_qoi {
        selected.extend_from_slice(set);
    }
    selected.sort_unstable();
    selected.dedup();

    // the union over many QoIs can outgrow what stable OLS supports (about
    // half the sample count); keep the most widely selected terms
    let budget = (n_s / 2).max(1);
    if selected.len() > budget {
        let mut votes: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        for set in &per_qoi {
            for &j in set {
                *votes.entry(j).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<usize> = selected.iter().copied().filter(|&j| j != 0).collect();
        ranked.sort_by_key(|j| (std::cmp::Reverse(votes.get(j).copied().unwrap_or(0)), *j));
        selected = vec![0];
        selected.extend(ranked.into_iter().take(budget - 1));
        selected.sort_unstable();
    }

    let all_indices = candidates.indices();
    let basis = MultiIndexSet::from_indices(selected.iter().map(|&j| all_indices[j].clone()));
    let psi_final = psi.select(Axis(1), &selected);
    let coeffs = ols_fit(&psi_final, &samples.q)?;
    let loocv = loocv_error(&psi_final, &samples.q)?;
    Ok(PceModel {
        basis,
        coeffs,
        space: space.clone(),
        loocv_error: loocv,
    })
}

/// LOOCV of the constant term plus the given candidate columns; infinite
/// when the refit is ill-posed.
fn loocv_for_subset(psi: &Array2<f64>, q: &Array2<f64>, subset: &[usize]) -> f64 {
    let mut cols = vec![0usize];
    cols.extend_from_slice(subset);
    cols.sort_unstable();
    cols.dedup();
    let sub = psi.select(Axis(1), &cols);
    loocv_error(&sub, q).unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pce::MultiIndex;
    use crate::stochastic::{lhs_sample, multivariate_basis_eval, RandomInputSpec};
    use ndarray::Array2;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn space(n: usize) -> InputSpace {
        InputSpace::new(
            (0..n)
                .map(|i| RandomInputSpec::new(format!("x{i}"), 3.0, 3.0, 0.0, 1.0, "-").unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn recovers_single_linear_direction() {
        let sp = space(3);
        let xi = lhs_sample(&sp, 40, 12);
        let q = Array2::from_shape_fn((40, 1), |(i, _)| 3.0 * xi[(i, 0)] + 1.0);
        let samples = SampleSet::new(xi, q, 12).unwrap();
        let model = fit_sparse_pce(&samples, &sp, 3).unwrap();
        for idx in model.basis.iter() {
            assert!(
                idx.orders()[1] == 0 && idx.orders()[2] == 0,
                "selected off-direction term {idx}"
            );
        }
        assert!(model.loocv_error <= 1e-8);
    }

    #[test]
    fn constant_qoi_falls_back_to_constant_model() {
        let sp = space(2);
        let xi = lhs_sample(&sp, 25, 3);
        let q = Array2::from_elem((25, 1), 4.25);
        let samples = SampleSet::new(xi, q, 3).unwrap();
        let model = fit_sparse_pce(&samples, &sp, 4).unwrap();
        assert_eq!(model.n_terms(), 1);
        assert!((model.coeffs[(0, 0)] - 4.25).abs() < 1e-12);
    }

    #[test]
    fn recovers_known_sparse_coefficients() {
        // q = 2·ψ_(1,0) + 0.5·ψ_(0,2) + ε with ε amplitude 1e-6
        let sp = space(2);
        let xi = lhs_sample(&sp, 60, 44);
        let mut rng = ChaCha12Rng::seed_from_u64(91);
        let q = Array2::from_shape_fn((60, 1), |(i, _)| {
            let point = [xi[(i, 0)], xi[(i, 1)]];
            2.0 * multivariate_basis_eval(&[1, 0], &point, &sp)
                + 0.5 * multivariate_basis_eval(&[0, 2], &point, &sp)
                + 1e-6 * (rng.gen::<f64>() - 0.5)
        });
        let samples = SampleSet::new(xi, q, 44).unwrap();
        let model = fit_sparse_pce(&samples, &sp, 4).unwrap();

        let coeff_of = |orders: &[u32]| {
            model
                .basis
                .iter()
                .position(|m| m.orders() == orders)
                .map(|k| model.coeffs[(k, 0)])
        };
        let c10 = coeff_of(&[1, 0]).expect("ψ_(1,0) not selected");
        let c02 = coeff_of(&[0, 2]).expect("ψ_(0,2) not selected");
        assert!((c10 - 2.0).abs() < 1e-3, "c10 = {c10}");
        assert!((c02 - 0.5).abs() < 1e-3, "c02 = {c02}");
        // spurious terms, if any, carry negligible weight
        for (k, idx) in model.basis.iter().enumerate() {
            if idx.orders() != [1, 0] && idx.orders() != [0, 2] && !idx.is_zero() {
                assert!(model.coeffs[(k, 0)].abs() < 1e-3, "ghost term {idx}");
            }
        }
    }

    #[test]
    fn multi_output_union_covers_both_directions() {
        let sp = space(3);
        let xi = lhs_sample(&sp, 50, 5);
        let q = Array2::from_shape_fn((50, 2), |(i, c)| {
            let point = [xi[(i, 0)], xi[(i, 1)], xi[(i, 2)]];
            if c == 0 {
                multivariate_basis_eval(&[2, 0, 0], &point, &sp)
            } else {
                multivariate_basis_eval(&[0, 0, 1], &point, &sp)
            }
        });
        let samples = SampleSet::new(xi, q, 5).unwrap();
        let model = fit_sparse_pce(&samples, &sp, 3).unwrap();
        assert!(model.basis.contains(&MultiIndex::new(vec![2, 0, 0])));
        assert!(model.basis.contains(&MultiIndex::new(vec![0, 0, 1])));
        assert!(model.loocv_error <= 1e-8);
    }
}
