//! Statistics extraction from surrogates and Monte Carlo, and the relative
//! error metrics against an MC reference.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::apce::{fit_apce, ApceConfig, ApceTrace};
use crate::error::{Error, Result};
use crate::pce::{fit_sparse_pce, fit_standard_pce, MultiIndex, PceModel};
use crate::pwe::{run_two_way, AntennaConfig, PweConfig};
use crate::stochastic::{beta_inverse_cdf, lhs_sample, InputSpace, SampleSet};
use crate::terrain::TerrainProfile;

/// Surrogate families and the Monte Carlo baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UqMethod {
    Mc,
    StandardPce,
    SparsePce,
    Apce,
}

impl UqMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            UqMethod::Mc => "mc",
            UqMethod::StandardPce => "standard",
            UqMethod::SparsePce => "sparse",
            UqMethod::Apce => "apce",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mc" => Ok(UqMethod::Mc),
            "standard" => Ok(UqMethod::StandardPce),
            "sparse" => Ok(UqMethod::SparsePce),
            "apce" => Ok(UqMethod::Apce),
            other => Err(Error::config(format!(
                "unknown method `{other}` (expected mc, standard, sparse, or apce)"
            ))),
        }
    }
}

/// Mean and 5th/95th percentile path loss per range point.
#[derive(Debug, Clone)]
pub struct UqSummary {
    pub ranges_m: Vec<f64>,
    pub mean_db: Vec<f64>,
    pub q05_db: Vec<f64>,
    pub q95_db: Vec<f64>,
    pub n_model_evals: usize,
    pub method: UqMethod,
}

impl UqSummary {
    /// CSV with header `range_m,mean_db,q05_db,q95_db`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "range_m,mean_db,q05_db,q95_db")?;
        for i in 0..self.ranges_m.len() {
            writeln!(
                f,
                "{},{},{},{}",
                crate::terrain::fmt_sig9(self.ranges_m[i]),
                crate::terrain::fmt_sig9(self.mean_db[i]),
                crate::terrain::fmt_sig9(self.q05_db[i]),
                crate::terrain::fmt_sig9(self.q95_db[i])
            )?;
        }
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>, method: UqMethod) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::Format {
            what: "uq summary CSV",
            detail: "empty file".into(),
        })?;
        if header.trim() != "range_m,mean_db,q05_db,q95_db" {
            return Err(Error::Format {
                what: "uq summary CSV",
                detail: format!("unexpected header `{header}`"),
            });
        }
        let mut ranges = Vec::new();
        let mut mean = Vec::new();
        let mut q05 = Vec::new();
        let mut q95 = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format {
                    what: "uq summary CSV",
                    detail: format!("{e} in `{line}`"),
                })?;
            if vals.len() != 4 {
                return Err(Error::Format {
                    what: "uq summary CSV",
                    detail: format!("expected 4 columns in `{line}`"),
                });
            }
            ranges.push(vals[0]);
            mean.push(vals[1]);
            q05.push(vals[2]);
            q95.push(vals[3]);
        }
        Ok(Self {
            ranges_m: ranges,
            mean_db: mean,
            q05_db: q05,
            q95_db: q95,
            n_model_evals: 0,
            method,
        })
    }
}

/// Relative ℓ2 errors of mean and percentile vectors against a reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub e_mean: f64,
    pub e_q05: f64,
    pub e_q95: f64,
}

impl ErrorReport {
    /// Three-line `key value` text file.
    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "e_mean {:.9e}", self.e_mean)?;
        writeln!(f, "e_q05 {:.9e}", self.e_q05)?;
        writeln!(f, "e_q95 {:.9e}", self.e_q95)?;
        Ok(())
    }
}

/// Analytic surrogate mean: the coefficient row of the all-zero index.
pub fn surrogate_mean(model: &PceModel) -> Result<Vec<f64>> {
    let zero = MultiIndex::zero(model.space.dim());
    let row = model
        .basis
        .iter()
        .position(|m| *m == zero)
        .ok_or_else(|| Error::config("model basis lacks the zero index".to_string()))?;
    Ok(model.coeffs.row(row).to_vec())
}

/// Empirical percentiles of the surrogate under `n_mc` independent input
/// draws, one quantile vector per requested level. Linear interpolation
/// between order statistics; deterministic for a given seed.
pub fn surrogate_percentiles(
    model: &PceModel,
    space: &InputSpace,
    n_mc: usize,
    levels: &[f64],
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if n_mc < 1000 {
        return Err(Error::config(format!(
            "surrogate Monte Carlo needs at least 1000 samples, got {n_mc}"
        )));
    }
    for &p in levels {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::config(format!("percentile level {p} outside [0, 1]")));
        }
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut xi = Array2::zeros((n_mc, space.dim()));
    for i in 0..n_mc {
        for (d, spec) in space.inputs().iter().enumerate() {
            xi[(i, d)] = beta_inverse_cdf(rng.gen(), spec);
        }
    }
    let evals = model.predict_batch(&xi);
    let n_q = evals.ncols();
    let mut out = vec![vec![0.0; n_q]; levels.len()];
    let columns: Vec<Vec<f64>> = (0..n_q).map(|c| evals.column(c).to_vec()).collect();
    let results: Vec<Vec<f64>> = columns
        .par_iter()
        .map(|col| {
            let mut sorted = col.clone();
            sorted.sort_by(|a, b| a.total_cmp(b));
            levels.iter().map(|&p| quantile_sorted(&sorted, p)).collect()
        })
        .collect();
    for (c, per_level) in results.iter().enumerate() {
        for (l, &v) in per_level.iter().enumerate() {
            out[l][c] = v;
        }
    }
    Ok(out)
}

/// Type-7 quantile of an ascending-sorted slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

fn antenna_from_row(
    nominal: &AntennaConfig,
    space: &InputSpace,
    row: &[f64],
) -> Result<AntennaConfig> {
    let mut antenna = nominal.clone();
    for (spec, &value) in space.inputs().iter().zip(row) {
        antenna = antenna.with_field(&spec.name, value)?;
    }
    Ok(antenna)
}

/// Evaluate the forward model at every row of `xi`, concurrently. Each row
/// writes its own output slot, so the aggregation is independent of
/// scheduling.
pub fn evaluate_pwe_batch(
    terrain: &TerrainProfile,
    nominal: &AntennaConfig,
    space: &InputSpace,
    cfg: &PweConfig,
    xi: &Array2<f64>,
) -> Result<(Vec<f64>, Array2<f64>)> {
    let rows: Vec<Vec<f64>> = (0..xi.nrows()).map(|i| xi.row(i).to_vec()).collect();
    let traces: Vec<Result<(Vec<f64>, Vec<f64>)>> = rows
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let antenna = antenna_from_row(nominal, space, row)?;
            let trace = run_two_way(terrain, &antenna, cfg).map_err(|e| match e {
                Error::Numerics { step, detail } => Error::Numerics {
                    step,
                    detail: format!("sample {i} with inputs {row:?}: {detail}"),
                },
                other => other,
            })?;
            Ok((trace.ranges_m, trace.path_loss_db))
        })
        .collect();
    let mut ranges: Option<Vec<f64>> = None;
    let mut q = Array2::zeros((xi.nrows(), 0));
    for (i, item) in traces.into_iter().enumerate() {
        let (r, pl) = item?;
        if let Some(ranges) = &ranges {
            if ranges.len() != r.len() {
                return Err(Error::config("inconsistent trace lengths".to_string()));
            }
        } else {
            q = Array2::zeros((xi.nrows(), pl.len()));
            ranges = Some(r);
        }
        for (c, v) in pl.iter().enumerate() {
            q[(i, c)] = *v;
        }
    }
    let ranges = ranges.ok_or_else(|| Error::config("empty sample set".to_string()))?;
    Ok((ranges, q))
}

/// Monte Carlo reference: `n_mc` full PWE runs at independent draws, mean
/// and percentiles per range point. Per-sample RNG streams derive from
/// (seed, sample index), so concurrency cannot perturb the draws.
pub fn mc_reference(
    terrain: &TerrainProfile,
    nominal: &AntennaConfig,
    space: &InputSpace,
    cfg: &PweConfig,
    n_mc: usize,
    seed: u64,
) -> Result<UqSummary> {
    if n_mc < 1 {
        return Err(Error::config("mc_reference needs at least one sample".to_string()));
    }
    let mut xi = Array2::zeros((n_mc, space.dim()));
    for i in 0..n_mc {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(i as u64 + 1);
        for (d, spec) in space.inputs().iter().enumerate() {
            xi[(i, d)] = beta_inverse_cdf(rng.gen(), spec);
        }
    }
    let (ranges, q) = evaluate_pwe_batch(terrain, nominal, space, cfg, &xi)?;
    let n_r = ranges.len();
    let mut mean = vec![0.0; n_r];
    let mut q05 = vec![0.0; n_r];
    let mut q95 = vec![0.0; n_r];
    for c in 0..n_r {
        let mut col: Vec<f64> = q.column(c).to_vec();
        mean[c] = col.iter().sum::<f64>() / n_mc as f64;
        col.sort_by(|a, b| a.total_cmp(b));
        q05[c] = quantile_sorted(&col, 0.05);
        q95[c] = quantile_sorted(&col, 0.95);
    }
    Ok(UqSummary {
        ranges_m: ranges,
        mean_db: mean,
        q05_db: q05,
        q95_db: q95,
        n_model_evals: n_mc,
        method: UqMethod::Mc,
    })
}

/// Relative ℓ2 errors of mean, 5th, and 95th percentile vectors.
pub fn relative_errors(summary: &UqSummary, reference: &UqSummary) -> Result<ErrorReport> {
    if summary.ranges_m.len() != reference.ranges_m.len() {
        return Err(Error::config(format!(
            "range grids differ: {} vs {} points",
            summary.ranges_m.len(),
            reference.ranges_m.len()
        )));
    }
    let rel = |a: &[f64], b: &[f64]| -> Result<f64> {
        let num: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        if den == 0.0 {
            return Err(Error::config("zero-norm reference vector".to_string()));
        }
        Ok(num / den)
    };
    Ok(ErrorReport {
        e_mean: rel(&summary.mean_db, &reference.mean_db)?,
        e_q05: rel(&summary.q05_db, &reference.q05_db)?,
        e_q95: rel(&summary.q95_db, &reference.q95_db)?,
    })
}

/// Seeds of one pipeline run: the training design and the surrogate-MC
/// percentile sampling are driven by separate streams.
#[derive(Debug, Clone, Copy)]
pub struct PipelineSeeds {
    pub train: u64,
    pub surrogate_mc: u64,
}

/// Knobs of the surrogate pipeline shared by the CLI and the tests.
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub n_surrogate_mc: usize,
    pub standard_order: u32,
    pub sparse_order: u32,
    pub apce: ApceConfig,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            n_surrogate_mc: 100_000,
            standard_order: 2,
            sparse_order: 3,
            apce: ApceConfig::default(),
        }
    }
}

/// Full pipeline output: the fitted model (absent for MC), the summary, and
/// the adaptive trace when applicable.
#[derive(Debug)]
pub struct PipelineRun {
    pub model: Option<PceModel>,
    pub summary: UqSummary,
    pub apce_trace: Option<ApceTrace>,
    pub samples: SampleSet,
}

/// LHS design → concurrent PWE evaluations → surrogate fit → mean and
/// percentiles from surrogate sampling. For [`UqMethod::Mc`] the pipeline
/// defers to [`mc_reference`] with `n_train` evaluations.
pub fn run_uq_pipeline(
    terrain: &TerrainProfile,
    nominal: &AntennaConfig,
    space: &InputSpace,
    cfg: &PweConfig,
    method: UqMethod,
    n_train: usize,
    seeds: PipelineSeeds,
    options: &PipelineOptions,
) -> Result<PipelineRun> {
    if method == UqMethod::Mc {
        let summary = mc_reference(terrain, nominal, space, cfg, n_train, seeds.train)?;
        let samples = SampleSet::new(
            Array2::zeros((0, space.dim())),
            Array2::zeros((0, summary.ranges_m.len())),
            seeds.train,
        )?;
        return Ok(PipelineRun {
            model: None,
            summary,
            apce_trace: None,
            samples,
        });
    }
    if n_train < 4 {
        return Err(Error::config(format!(
            "surrogate methods need at least 4 training samples, got {n_train}"
        )));
    }
    let xi = lhs_sample(space, n_train, seeds.train);
    let (ranges, q) = evaluate_pwe_batch(terrain, nominal, space, cfg, &xi)?;
    let samples = SampleSet::new(xi, q, seeds.train)?;
    fit_and_summarize(&samples, space, &ranges, method, seeds, options)
}

/// Fit a surrogate on an existing sample set and extract its statistics.
pub fn fit_and_summarize(
    samples: &SampleSet,
    space: &InputSpace,
    ranges_m: &[f64],
    method: UqMethod,
    seeds: PipelineSeeds,
    options: &PipelineOptions,
) -> Result<PipelineRun> {
    let (model, apce_trace) = match method {
        UqMethod::Mc => {
            return Err(Error::config(
                "the MC method has no surrogate to fit".to_string(),
            ))
        }
        UqMethod::StandardPce => (
            fit_standard_pce(samples, space, options.standard_order)?,
            None,
        ),
        UqMethod::SparsePce => (fit_sparse_pce(samples, space, options.sparse_order)?, None),
        UqMethod::Apce => {
            let fit = fit_apce(samples, space, &options.apce)?;
            (fit.model, Some(fit.trace))
        }
    };
    let mean = surrogate_mean(&model)?;
    let pcts = surrogate_percentiles(
        &model,
        space,
        options.n_surrogate_mc,
        &[0.05, 0.95],
        seeds.surrogate_mc,
    )?;
    let summary = UqSummary {
        ranges_m: ranges_m.to_vec(),
        mean_db: mean,
        q05_db: pcts[0].clone(),
        q95_db: pcts[1].clone(),
        n_model_evals: samples.n_samples(),
        method,
    };
    Ok(PipelineRun {
        model: Some(model),
        summary,
        apce_trace,
        samples: SampleSet::new(samples.xi.clone(), samples.q.clone(), samples.seed)?,
    })
}
