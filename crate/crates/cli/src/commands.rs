//! Subcommand implementations.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;

use propuq::pce::PceModel;
use propuq::stochastic::{lhs_sample, SampleSet};
use propuq::pwe::run_two_way;
use propuq::uqstats::{
    fit_and_summarize, mc_reference, relative_errors, ErrorReport, PipelineSeeds, UqMethod,
    UqSummary,
};

use crate::config::Experiment;
use crate::manifest::Manifest;

/// Error carrying the process exit code mandated for partial sample
/// failures.
#[derive(Debug)]
pub struct PartialFailure {
    pub failed: Vec<(usize, String)>,
}

impl std::fmt::Display for PartialFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{} sample evaluations failed:", self.failed.len())?;
        for (idx, msg) in &self.failed {
            writeln!(f, "  sample {idx}: {msg}")?;
        }
        Ok(())
    }
}

impl std::error::Error for PartialFailure {}

fn ensure_out_dir(exp: &Experiment) -> anyhow::Result<()> {
    std::fs::create_dir_all(&exp.out_dir)?;
    Ok(())
}

pub fn cmd_simulate(exp: &Experiment) -> anyhow::Result<()> {
    ensure_out_dir(exp)?;
    let start = Instant::now();
    let trace = run_two_way(&exp.terrain, &exp.antenna, &exp.pwe)?;
    let out = exp.out_dir.join("trace.csv");
    trace.write_csv(&out)?;
    let mut manifest = Manifest::new("simulate", &exp.config_hash);
    manifest.n_model_evals = 1;
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.write(&exp.out_dir.join("trace.manifest.json"))?;
    println!("wrote {} ({} range points)", out.display(), trace.len());
    Ok(())
}

/// Evaluate design rows one by one so failures can be reported per sample.
fn evaluate_rows(
    exp: &Experiment,
    xi: &Array2<f64>,
    skip: usize,
) -> Vec<(usize, Result<Vec<f64>, String>)> {
    (skip..xi.nrows())
        .into_par_iter()
        .map(|i| {
            let row: Vec<f64> = xi.row(i).to_vec();
            let mut antenna = exp.antenna.clone();
            for (spec, &v) in exp.space.inputs().iter().zip(&row) {
                antenna = match antenna.with_field(&spec.name, v) {
                    Ok(a) => a,
                    Err(e) => return (i, Err(e.to_string())),
                };
            }
            match run_two_way(&exp.terrain, &antenna, &exp.pwe) {
                Ok(t) => (i, Ok(t.path_loss_db)),
                Err(e) => (i, Err(e.to_string())),
            }
        })
        .collect()
}

fn samples_path(exp: &Experiment) -> PathBuf {
    exp.out_dir.join("samples.csv")
}

pub fn cmd_sample(exp: &Experiment) -> anyhow::Result<()> {
    ensure_out_dir(exp)?;
    let start = Instant::now();
    let n = exp.config.uq.n_train;
    let seed = exp.config.uq.train_seed;
    let xi = lhs_sample(&exp.space, n, seed);
    let path = samples_path(exp);
    let manifest_path = exp.out_dir.join("samples.manifest.json");

    // resume: keep already-evaluated rows when the design hash matches
    let mut done_rows = 0usize;
    if path.exists() && manifest_path.exists() {
        let recorded = Manifest::read_value(&manifest_path)?;
        let same = recorded["config_hash"] == serde_json::json!(exp.config_hash)
            && recorded["seeds"]["train"] == serde_json::json!(seed);
        if same {
            let existing = SampleSet::read_csv(&path, exp.space.dim(), seed)?;
            done_rows = existing.n_samples().min(n);
            if done_rows == n {
                println!("samples.csv already complete ({n} rows); nothing to do");
                return Ok(());
            }
        }
    }

    let results = evaluate_rows(exp, &xi, done_rows);
    let failed: Vec<(usize, String)> = results
        .iter()
        .filter_map(|(i, r)| r.as_ref().err().map(|e| (*i, e.clone())))
        .collect();

    // collect the longest consecutive prefix so the file stays resumable
    let mut q_rows: Vec<Vec<f64>> = Vec::new();
    if done_rows > 0 {
        let existing = SampleSet::read_csv(&path, exp.space.dim(), seed)?;
        for i in 0..done_rows {
            q_rows.push(existing.q.row(i).to_vec());
        }
    }
    for (i, result) in &results {
        match result {
            Ok(pl) if *i == q_rows.len() => q_rows.push(pl.clone()),
            _ => break,
        }
    }
    if !q_rows.is_empty() {
        let n_q = q_rows[0].len();
        let flat: Vec<f64> = q_rows.iter().flatten().copied().collect();
        let q = Array2::from_shape_vec((q_rows.len(), n_q), flat)?;
        let xi_part = xi.slice(ndarray::s![..q_rows.len(), ..]).to_owned();
        let set = SampleSet::new(xi_part, q, seed)?;
        set.write_csv(&path)?;
        let mut manifest = Manifest::new("sample", &exp.config_hash).seed("train", seed);
        manifest.n_model_evals = set.n_samples();
        manifest.wall_time_s = start.elapsed().as_secs_f64();
        manifest.write(&manifest_path)?;
        println!("wrote {} ({} of {n} rows)", path.display(), set.n_samples());
    }
    if !failed.is_empty() {
        return Err(PartialFailure { failed }.into());
    }
    Ok(())
}

fn load_or_evaluate_samples(
    exp: &Experiment,
    n: usize,
    seed: u64,
) -> anyhow::Result<(SampleSet, Vec<f64>)> {
    let cache_dir = exp.out_dir.join("cache");
    std::fs::create_dir_all(&cache_dir)?;
    let key = format!("samples_{}_{:x}_{}.csv", exp.config_hash, seed, n);
    let path = cache_dir.join(key);
    let xi = lhs_sample(&exp.space, n, seed);
    let ranges = trace_ranges(exp);
    if path.exists() {
        let set = SampleSet::read_csv(&path, exp.space.dim(), seed)?;
        if set.n_samples() == n && set.q.ncols() == ranges.len() {
            return Ok((set, ranges));
        }
    }
    let (ranges, q) = propuq::uqstats::evaluate_pwe_batch(
        &exp.terrain,
        &exp.antenna,
        &exp.space,
        &exp.pwe,
        &xi,
    )?;
    let set = SampleSet::new(xi, q, seed)?;
    set.write_csv(&path)?;
    Ok((set, ranges))
}

fn trace_ranges(exp: &Experiment) -> Vec<f64> {
    let n_steps = exp.pwe.n_range_steps();
    (propuq::pwe::NEAR_FIELD_SKIP..=n_steps)
        .map(|i| i as f64 * exp.pwe.delta_range_m)
        .collect()
}

pub fn cmd_fit(exp: &Experiment) -> anyhow::Result<()> {
    ensure_out_dir(exp)?;
    let start = Instant::now();
    let seed = exp.config.uq.train_seed;
    let path = samples_path(exp);
    let samples = if path.exists() {
        SampleSet::read_csv(&path, exp.space.dim(), seed)?
    } else {
        anyhow::bail!(
            "{} not found; run `propuq sample --config ...` first",
            path.display()
        );
    };
    let ranges = trace_ranges(exp);
    let seeds = PipelineSeeds {
        train: seed,
        surrogate_mc: exp.config.uq.surrogate_mc_seed,
    };
    let run = fit_and_summarize(&samples, &exp.space, &ranges, exp.method, seeds, &exp.options)?;
    let model = run.model.expect("surrogate methods always fit a model");
    write_model_artifacts(exp, &model, run.apce_trace.as_ref(), start, "fit")?;
    Ok(())
}

fn write_model_artifacts(
    exp: &Experiment,
    model: &PceModel,
    apce_trace: Option<&propuq::apce::ApceTrace>,
    start: Instant,
    command: &str,
) -> anyhow::Result<()> {
    let model_path = exp.out_dir.join("model.txt");
    model.write_text(&model_path)?;
    println!(
        "wrote {} ({} terms, loocv {:.3e})",
        model_path.display(),
        model.n_terms(),
        model.loocv_error
    );
    if let Some(trace) = apce_trace {
        let trace_path = exp.out_dir.join("apce_trace.csv");
        trace.write_csv(&trace_path)?;
        println!("wrote {}", trace_path.display());
    }
    let mut manifest = Manifest::new(command, &exp.config_hash)
        .seed("train", exp.config.uq.train_seed)
        .seed("surrogate_mc", exp.config.uq.surrogate_mc_seed);
    manifest.n_model_evals = exp.config.uq.n_train;
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.write(&exp.out_dir.join("model.manifest.json"))?;
    Ok(())
}

/// Cached MC reference: reused when the existing manifest matches the
/// configuration hash and seed.
pub fn mc_reference_cached(exp: &Experiment) -> anyhow::Result<UqSummary> {
    ensure_out_dir(exp)?;
    let path = exp.out_dir.join("mc_reference.csv");
    let manifest_path = exp.out_dir.join("mc_reference.manifest.json");
    let n_mc = exp.config.uq.n_mc_reference;
    let seed = exp.config.uq.mc_reference_seed;
    if path.exists() && manifest_path.exists() {
        let recorded = Manifest::read_value(&manifest_path)?;
        let same = recorded["config_hash"] == serde_json::json!(exp.config_hash)
            && recorded["seeds"]["mc_reference"] == serde_json::json!(seed)
            && recorded["n_model_evals"] == serde_json::json!(n_mc);
        if same {
            println!("reusing cached MC reference {}", path.display());
            return Ok(UqSummary::read_csv(&path, UqMethod::Mc)?);
        }
    }
    let start = Instant::now();
    println!("computing MC reference ({n_mc} PWE runs)...");
    let summary = mc_reference(&exp.terrain, &exp.antenna, &exp.space, &exp.pwe, n_mc, seed)?;
    summary.write_csv(&path)?;
    let mut manifest = Manifest::new("mc", &exp.config_hash).seed("mc_reference", seed);
    manifest.n_model_evals = n_mc;
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.write(&manifest_path)?;
    println!("wrote {}", path.display());
    Ok(summary)
}

pub fn cmd_mc(exp: &Experiment) -> anyhow::Result<()> {
    mc_reference_cached(exp).map(|_| ())
}

pub fn cmd_uq(exp: &Experiment) -> anyhow::Result<()> {
    ensure_out_dir(exp)?;
    let start = Instant::now();
    let summary = if exp.method == UqMethod::Mc {
        mc_reference_cached(exp)?
    } else {
        let (samples, ranges) =
            load_or_evaluate_samples(exp, exp.config.uq.n_train, exp.config.uq.train_seed)?;
        let seeds = PipelineSeeds {
            train: exp.config.uq.train_seed,
            surrogate_mc: exp.config.uq.surrogate_mc_seed,
        };
        let run =
            fit_and_summarize(&samples, &exp.space, &ranges, exp.method, seeds, &exp.options)?;
        let model = run.model.expect("surrogate methods always fit a model");
        write_model_artifacts(exp, &model, run.apce_trace.as_ref(), start, "uq")?;
        run.summary
    };
    let out = exp
        .out_dir
        .join(format!("uq_{}.csv", exp.method.as_str()));
    summary.write_csv(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn cmd_compare(exp: &Experiment) -> anyhow::Result<()> {
    ensure_out_dir(exp)?;
    let start = Instant::now();
    let reference = mc_reference_cached(exp)?;
    let methods = [UqMethod::StandardPce, UqMethod::SparsePce, UqMethod::Apce];
    let trials = exp.config.uq.trials;
    let n_train = exp.config.uq.n_train;

    let detail_path = exp.out_dir.join("compare_trials.csv");
    let mut detail = std::fs::File::create(&detail_path)?;
    writeln!(detail, "method,trial,train_seed,e_mean,e_q05,e_q95")?;

    let mut per_method: Vec<(UqMethod, Vec<ErrorReport>)> = Vec::new();
    for method in methods {
        let mut reports = Vec::new();
        for t in 0..trials {
            let seed = exp.config.uq.train_seed + t as u64;
            let (samples, ranges) = load_or_evaluate_samples(exp, n_train, seed)?;
            let seeds = PipelineSeeds {
                train: seed,
                surrogate_mc: exp.config.uq.surrogate_mc_seed + t as u64,
            };
            let run =
                fit_and_summarize(&samples, &exp.space, &ranges, method, seeds, &exp.options)?;
            let report = relative_errors(&run.summary, &reference)?;
            writeln!(
                detail,
                "{},{},{},{:.9e},{:.9e},{:.9e}",
                method.as_str(),
                t,
                seed,
                report.e_mean,
                report.e_q05,
                report.e_q95
            )?;
            reports.push(report);
        }
        per_method.push((method, reports));
    }

    let out = exp.out_dir.join("compare.csv");
    let mut f = std::fs::File::create(&out)?;
    writeln!(f, "method,metric,min,max,mean")?;
    for (method, reports) in &per_method {
        for (metric, pick) in [
            ("e_mean", (|r: &ErrorReport| r.e_mean) as fn(&ErrorReport) -> f64),
            ("e_q05", |r| r.e_q05),
            ("e_q95", |r| r.e_q95),
        ] {
            let values: Vec<f64> = reports.iter().map(pick).collect();
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            writeln!(
                f,
                "{},{},{:.9e},{:.9e},{:.9e}",
                method.as_str(),
                metric,
                min,
                max,
                mean
            )?;
        }
    }
    let mut manifest = Manifest::new("compare", &exp.config_hash)
        .seed("train_base", exp.config.uq.train_seed)
        .seed("mc_reference", exp.config.uq.mc_reference_seed)
        .seed("surrogate_mc_base", exp.config.uq.surrogate_mc_seed);
    manifest.n_model_evals = trials * n_train + exp.config.uq.n_mc_reference;
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.write(&exp.out_dir.join("compare.manifest.json"))?;
    println!("wrote {} and {}", out.display(), detail_path.display());
    Ok(())
}

pub fn cmd_convergence(exp: &Experiment) -> anyhow::Result<()> {
    ensure_out_dir(exp)?;
    let start = Instant::now();
    let trials = exp.config.uq.trials;
    let levels = exp.config.uq.convergence_levels.clone();

    let out = exp.out_dir.join("convergence.csv");
    let mut f = std::fs::File::create(&out)?;
    writeln!(
        f,
        "n_s,loocv_mean,loocv_min,loocv_max,n_p_mean,n_p_min,n_p_max,max_total_order,max_interaction_order"
    )?;
    let mut evals = 0usize;
    for &n_s in &levels {
        let mut loocvs = Vec::new();
        let mut sizes = Vec::new();
        let mut max_order = 0u32;
        let mut max_interaction = 0usize;
        for t in 0..trials {
            let seed = exp.config.uq.train_seed + t as u64;
            let (samples, _) = load_or_evaluate_samples(exp, n_s, seed)?;
            evals += n_s;
            let fit = propuq::apce::fit_apce(&samples, &exp.space, &exp.options.apce)?;
            loocvs.push(fit.model.loocv_error);
            sizes.push(fit.model.n_terms() as f64);
            max_order = max_order.max(fit.model.basis.max_total_order());
            max_interaction = max_interaction.max(fit.model.basis.max_interaction_order());
        }
        let stats = |v: &[f64]| {
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            (mean, min, max)
        };
        let (l_mean, l_min, l_max) = stats(&loocvs);
        let (p_mean, p_min, p_max) = stats(&sizes);
        writeln!(
            f,
            "{n_s},{l_mean:.9e},{l_min:.9e},{l_max:.9e},{p_mean:.3},{p_min},{p_max},{max_order},{max_interaction}"
        )?;
    }
    let mut manifest = Manifest::new("convergence", &exp.config_hash)
        .seed("train_base", exp.config.uq.train_seed);
    manifest.n_model_evals = evals;
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.write(&exp.out_dir.join("convergence.manifest.json"))?;
    println!("wrote {}", out.display());
    Ok(())
}
