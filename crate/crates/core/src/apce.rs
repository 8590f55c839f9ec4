//! Adaptive PCE: anisotropic basis extension driven by variance
//! contributions, terminated by a composite criterion combining validation
//! error and sample-to-basis ratios.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pce::{
    loocv_error, ols_fit, regression_matrix, MultiIndex, MultiIndexSet, PceModel,
};
use crate::stochastic::{InputSpace, SampleSet};

/// Tuning knobs of the adaptive loop.
#[derive(Debug, Clone)]
pub struct ApceConfig {
    /// No basis term may exceed this total order.
    pub max_poly_order: u32,
    /// Termination by error or stagnation is suppressed while
    /// N_p < lower_ratio · N_s.
    pub lower_ratio: f64,
    /// Hard stop once N_p would exceed upper_ratio · N_s.
    pub upper_ratio: f64,
    /// Stop when the LOOCV error reaches this value.
    pub target_error: f64,
    /// Stop when the minimum LOOCV has not improved for this many
    /// consecutive iterations.
    pub stagnation_limit: usize,
}

impl Default for ApceConfig {
    fn default() -> Self {
        Self {
            max_poly_order: 5,
            lower_ratio: 0.25,
            upper_ratio: 0.5,
            target_error: 1e-3,
            stagnation_limit: 3,
        }
    }
}

impl ApceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lower_ratio > 0.0 && self.lower_ratio < self.upper_ratio && self.upper_ratio <= 1.0)
        {
            return Err(Error::config(format!(
                "ratios must satisfy 0 < lower < upper <= 1, got ({}, {})",
                self.lower_ratio, self.upper_ratio
            )));
        }
        if self.stagnation_limit == 0 {
            return Err(Error::config("stagnation_limit must be at least 1"));
        }
        if !(self.target_error > 0.0) {
            return Err(Error::config("target_error must be positive"));
        }
        Ok(())
    }
}

/// Mutable state of the adaptive loop.
#[derive(Debug, Clone)]
pub struct ApceState {
    /// Indices already used for expansion.
    pub old_set: MultiIndexSet,
    /// Indices eligible for further expansion.
    pub cand_set: MultiIndexSet,
    /// Current fit over old_set ∪ cand_set.
    pub model: PceModel,
    /// Minimum LOOCV observed so far.
    pub best_error: f64,
    /// Consecutive iterations without improving `best_error`.
    pub stagnation_count: usize,
    pub iteration: usize,
}

/// Per-term variance contribution: entry k is Σ_i u_{α_k,i}² over the QoIs.
///
/// The zero index carries the mean rather than variance; callers ranking
/// candidates skip it.
pub fn variance_contribution(model: &PceModel) -> Vec<f64> {
    (0..model.n_terms())
        .map(|k| model.coeffs.row(k).iter().map(|u| u * u).sum())
        .collect()
}

/// Result of one anisotropic extension step.
#[derive(Debug, Clone)]
pub struct ExtensionOutcome {
    pub promoted: MultiIndex,
    pub delta: Vec<MultiIndex>,
}

/// One step of the anisotropic basis extension.
///
/// The candidate with the largest contribution (ties broken toward the
/// smallest graded-lex index) moves to the old set; each forward neighbor
/// whose backward neighbors all lie in the old set, and whose total order
/// stays within the cap, joins the candidate set.
pub fn extend_basis(
    contrib: &[f64],
    state: &mut ApceState,
    cfg: &ApceConfig,
) -> Result<ExtensionOutcome> {
    assert_eq!(
        contrib.len(),
        state.model.n_terms(),
        "contribution vector does not match model basis"
    );
    if state.cand_set.is_empty() {
        return Err(Error::BasisExhausted);
    }

    let ranking_has_nonzero = state.cand_set.iter().any(|m| !m.is_zero());
    let mut best: Option<(MultiIndex, f64)> = None;
    for (k, idx) in state.model.basis.iter().enumerate() {
        if !state.cand_set.contains(idx) {
            continue;
        }
        if idx.is_zero() && ranking_has_nonzero {
            continue;
        }
        let c = contrib[k];
        let better = match &best {
            None => true,
            Some((b_idx, b_c)) => c > *b_c || (c == *b_c && idx < b_idx),
        };
        if better {
            best = Some((idx.clone(), c));
        }
    }
    let (promoted, _) = best.ok_or(Error::BasisExhausted)?;

    state.cand_set.remove(&promoted);
    state.old_set.insert(promoted.clone());

    let mut delta = Vec::new();
    for dim in 0..promoted.dim() {
        let forward = promoted.raised(dim);
        if forward.total_order() > cfg.max_poly_order {
            continue;
        }
        if state.old_set.contains(&forward) || state.cand_set.contains(&forward) {
            continue;
        }
        let admissible = (0..forward.dim()).all(|j| match forward.lowered(j) {
            Some(back) => state.old_set.contains(&back),
            None => true,
        });
        if admissible {
            delta.push(forward);
        }
    }
    for idx in &delta {
        state.cand_set.insert(idx.clone());
    }
    Ok(ExtensionOutcome { promoted, delta })
}

/// One row of the adaptive-iteration trace.
#[derive(Debug, Clone)]
pub struct ApceIteration {
    pub iteration: usize,
    pub n_terms: usize,
    pub loocv_error: f64,
    /// Index promoted after this fit; None when the loop stopped instead.
    pub promoted: Option<MultiIndex>,
    pub delta_size: usize,
}

/// Per-iteration trace of an adaptive fit.
#[derive(Debug, Clone, Default)]
pub struct ApceTrace {
    pub iterations: Vec<ApceIteration>,
}

impl ApceTrace {
    /// CSV with columns `iteration,n_p,loocv_error,promoted,delta_size`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "iteration,n_p,loocv_error,promoted,delta_size")?;
        for it in &self.iterations {
            writeln!(
                f,
                "{},{},{:.9e},{},{}",
                it.iteration,
                it.n_terms,
                it.loocv_error,
                it.promoted
                    .as_ref()
                    .map(|p| p.to_string())
                    .unwrap_or_else(|| "-".to_string()),
                it.delta_size
            )?;
        }
        Ok(())
    }
}

/// Adaptive fit output: the best-LOOCV model, the iteration trace, and a
/// flag set when the extension ran out of candidates before the basis
/// reached the lower size bound.
#[derive(Debug, Clone)]
pub struct ApceFit {
    pub model: PceModel,
    pub trace: ApceTrace,
    pub exhausted_early: bool,
}

/// Adaptive PCE fit.
///
/// Starts from the bare constant candidate, alternates OLS fit / LOOCV
/// scoring / anisotropic extension, and stops by the composite criterion:
/// error and stagnation rules are suppressed below the lower size bound,
/// and the basis never exceeds the upper one. Returns the iterate that
/// achieved the minimum LOOCV over the whole run.
pub fn fit_apce(samples: &SampleSet, space: &InputSpace, cfg: &ApceConfig) -> Result<ApceFit> {
    cfg.validate()?;
    let n_s = samples.n_samples();
    if n_s < 4 {
        return Err(Error::config(format!(
            "adaptive fit needs at least 4 samples, got {n_s}"
        )));
    }
    let cap = (cfg.upper_ratio * n_s as f64).floor() as usize;
    let lower_n = cfg.lower_ratio * n_s as f64;

    let mut state = ApceState {
        old_set: MultiIndexSet::new(),
        cand_set: MultiIndexSet::from_indices([MultiIndex::zero(space.dim())]),
        model: PceModel {
            basis: MultiIndexSet::new(),
            coeffs: ndarray::Array2::zeros((0, samples.q.ncols())),
            space: space.clone(),
            loocv_error: f64::INFINITY,
        },
        best_error: f64::INFINITY,
        stagnation_count: 0,
        iteration: 0,
    };
    let mut best_model: Option<PceModel> = None;
    let mut trace = ApceTrace::default();
    let mut exhausted = false;

    loop {
        state.iteration += 1;
        let basis = state.old_set.union_sorted(&state.cand_set);
        let n_p = basis.len();
        if n_p > cap {
            break;
        }
        let psi = regression_matrix(&basis, &samples.xi, space);
        let (coeffs, loocv) = match ols_fit(&psi, &samples.q)
            .and_then(|c| loocv_error(&psi, &samples.q).map(|e| (c, e)))
        {
            Ok(pair) => pair,
            // the sample set cannot support this basis; keep the best fit
            Err(_) => break,
        };
        state.model = PceModel {
            basis,
            coeffs,
            space: space.clone(),
            loocv_error: loocv,
        };

        let past_lower = n_p as f64 >= lower_n;
        // improvements below 1e-13 are floating-point noise, not progress
        if loocv + 1e-13 < state.best_error {
            state.best_error = loocv;
            state.stagnation_count = 0;
            best_model = Some(state.model.clone());
        } else {
            if best_model.is_none() {
                state.best_error = loocv;
                best_model = Some(state.model.clone());
            }
            // stagnation only accrues once the basis has reached the lower
            // size bound; counting earlier would let pre-threshold plateaus
            // trigger the very premature stop the bound exists to avoid
            if past_lower {
                state.stagnation_count += 1;
            }
        }

        let mut stop = false;
        if past_lower && loocv <= cfg.target_error {
            stop = true;
        }
        if past_lower && state.stagnation_count >= cfg.stagnation_limit {
            stop = true;
        }
        if stop {
            trace.iterations.push(ApceIteration {
                iteration: state.iteration,
                n_terms: n_p,
                loocv_error: loocv,
                promoted: None,
                delta_size: 0,
            });
            break;
        }

        let contrib = variance_contribution(&state.model);
        match extend_basis(&contrib, &mut state, cfg) {
            Ok(outcome) => {
                trace.iterations.push(ApceIteration {
                    iteration: state.iteration,
                    n_terms: n_p,
                    loocv_error: loocv,
                    promoted: Some(outcome.promoted),
                    delta_size: outcome.delta.len(),
                });
                if state.cand_set.is_empty() {
                    exhausted = (n_p as f64) < lower_n;
                    break;
                }
            }
            Err(Error::BasisExhausted) => {
                trace.iterations.push(ApceIteration {
                    iteration: state.iteration,
                    n_terms: n_p,
                    loocv_error: loocv,
                    promoted: None,
                    delta_size: 0,
                });
                exhausted = (n_p as f64) < lower_n;
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let model = best_model.ok_or_else(|| {
        Error::config("adaptive fit could not evaluate a single iterate".to_string())
    })?;
    Ok(ApceFit {
        model,
        trace,
        exhausted_early: exhausted,
    })
}
