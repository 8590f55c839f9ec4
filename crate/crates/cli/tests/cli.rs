//! End-to-end tests of the `propuq` binary: every subcommand on a small
//! configuration, exit codes, determinism, and resumability.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_propuq")
}

fn run(args: &[&str], config: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--workers")
        .arg("2")
        .output()
        .expect("failed to spawn propuq")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Small but complete experiment: 1 km flat terrain, two uncertain inputs.
fn write_config(dir: &Path, extra_uq: &str) -> PathBuf {
    let terrain = dir.join("terrain.csv");
    std::fs::write(&terrain, "range_m,elevation_m\n0,0\n500,12\n1000,0\n").unwrap();
    let out = dir.join("out");
    let config = format!(
        r#"
[terrain]
path = "terrain.csv"

[pwe]
delta_range_m = 50.0
delta_height_m = 0.5
max_height_m = 64.0
frequency_hz = 435e6
total_range_m = 1000.0

[antenna]
tx_height_m = 11.0
rx_height_m = 2.5
beamwidth_deg = 8.0

[[input]]
name = "tx_height_m"
alpha = 3.0
beta = 3.0
lower = 9.0
upper = 13.0
unit = "m"

[[input]]
name = "rx_height_m"
alpha = 3.0
beta = 3.0
lower = 1.0
upper = 4.0
unit = "m"

[uq]
method = "apce"
n_train = 16
n_mc_reference = 40
n_surrogate_mc = 2000
trials = 2
convergence_levels = [10, 16]
{extra_uq}

[output]
dir = "{}"
"#,
        out.display()
    );
    let path = dir.join("exp.toml");
    std::fs::write(&path, config).unwrap();
    path
}

#[test]
fn simulate_writes_monotone_deterministic_trace() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    assert_success(&run(&["simulate"], &config));
    let trace_path = dir.path().join("out/trace.csv");
    let first = std::fs::read(&trace_path).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert!(text.starts_with("range_m,path_loss_db"));
    let ranges: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(ranges.windows(2).all(|w| w[1] > w[0]));
    // 20 steps minus the 10-step near-field cut, endpoints inclusive
    assert_eq!(ranges.len(), 11);

    // rerun: byte-identical artifact
    assert_success(&run(&["simulate"], &config));
    let second = std::fs::read(&trace_path).unwrap();
    assert_eq!(first, second);
}

#[test]
fn sample_is_stratified_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    assert_success(&run(&["sample"], &config));
    let samples_path = dir.path().join("out/samples.csv");
    let full = std::fs::read_to_string(&samples_path).unwrap();
    assert_eq!(full.lines().count(), 17, "header plus 16 rows");

    // stratification: each CDF stratum of each input holds exactly one point
    let rows: Vec<Vec<f64>> = full
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let specs = [
        propuq::stochastic::RandomInputSpec::new("tx", 3.0, 3.0, 9.0, 13.0, "m").unwrap(),
        propuq::stochastic::RandomInputSpec::new("rx", 3.0, 3.0, 1.0, 4.0, "m").unwrap(),
    ];
    for (d, spec) in specs.iter().enumerate() {
        let mut hist = vec![0usize; 16];
        for row in &rows {
            let p = propuq::stochastic::beta_cdf(row[d], spec);
            hist[((p * 16.0) as usize).min(15)] += 1;
        }
        assert_eq!(hist, vec![1; 16], "dimension {d}");
    }

    // simulate a kill: truncate to 5 evaluated rows, rerun, expect identity
    let truncated: String = full.lines().take(6).collect::<Vec<_>>().join("\n") + "\n";
    std::fs::write(&samples_path, truncated).unwrap();
    assert_success(&run(&["sample"], &config));
    let resumed = std::fs::read_to_string(&samples_path).unwrap();
    assert_eq!(full, resumed, "resumed file must equal a fresh full run");
}

#[test]
fn fit_writes_model_and_capped_apce_trace() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    assert_success(&run(&["sample"], &config));
    assert_success(&run(&["fit"], &config));
    let model = std::fs::read_to_string(dir.path().join("out/model.txt")).unwrap();
    assert!(model.starts_with("# pce model"));

    let trace = std::fs::read_to_string(dir.path().join("out/apce_trace.csv")).unwrap();
    for line in trace.lines().skip(1) {
        let n_p: usize = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(n_p <= 8, "N_p {n_p} exceeds 0.5·16 in `{line}`");
    }
}

#[test]
fn standard_fit_of_five_inputs_order_two_has_21_terms() {
    let dir = tempfile::tempdir().unwrap();
    let terrain = dir.path().join("terrain.csv");
    std::fs::write(&terrain, "range_m,elevation_m\n0,0\n1000,0\n").unwrap();
    let out = dir.path().join("out");
    let config_path = dir.path().join("exp.toml");
    let config = format!(
        r#"
[terrain]
path = "terrain.csv"

[pwe]
delta_range_m = 50.0
delta_height_m = 0.5
max_height_m = 64.0
frequency_hz = 435e6
total_range_m = 1000.0

[antenna]
tx_height_m = 11.0
rx_height_m = 2.5
beamwidth_deg = 8.0

[[input]]
name = "tx_height_m"
alpha = 3.0
beta = 3.0
lower = 9.0
upper = 13.0

[[input]]
name = "rx_height_m"
alpha = 3.0
beta = 3.0
lower = 1.0
upper = 4.0

[[input]]
name = "elevation_deg"
alpha = 3.0
beta = 3.0
lower = -3.0
upper = 3.0

[[input]]
name = "beamwidth_deg"
alpha = 3.0
beta = 3.0
lower = 4.0
upper = 12.0

[[input]]
name = "frequency_hz"
alpha = 3.0
beta = 3.0
lower = 410e6
upper = 460e6

[uq]
method = "standard"
n_train = 44
standard_order = 2

[output]
dir = "{}"
"#,
        out.display()
    );
    std::fs::write(&config_path, config).unwrap();
    assert_success(&run(&["sample"], &config_path));
    assert_success(&run(&["fit"], &config_path));
    let model = std::fs::read_to_string(out.join("model.txt")).unwrap();
    let term_lines = model.lines().filter(|l| !l.starts_with('#')).count() - 4;
    assert_eq!(term_lines, 21, "order-2 basis in five dimensions");
}

#[test]
fn uq_and_mc_write_summaries_and_cache_the_reference() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    assert_success(&run(&["uq"], &config));
    assert!(dir.path().join("out/uq_apce.csv").exists());

    assert_success(&run(&["mc"], &config));
    let ref_path = dir.path().join("out/mc_reference.csv");
    let first = std::fs::read(&ref_path).unwrap();
    let out2 = run(&["mc"], &config);
    assert_success(&out2);
    assert!(
        String::from_utf8_lossy(&out2.stdout).contains("reusing"),
        "second run must reuse the cache"
    );
    assert_eq!(std::fs::read(&ref_path).unwrap(), first);
}

#[test]
fn compare_emits_stats_for_every_method_and_metric() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    assert_success(&run(&["compare"], &config));
    let table = std::fs::read_to_string(dir.path().join("out/compare.csv")).unwrap();
    for method in ["standard", "sparse", "apce"] {
        for metric in ["e_mean", "e_q05", "e_q95"] {
            assert!(
                table.lines().any(|l| l.starts_with(&format!("{method},{metric},"))),
                "missing {method}/{metric} in:\n{table}"
            );
        }
    }
    let detail = std::fs::read_to_string(dir.path().join("out/compare_trials.csv")).unwrap();
    assert_eq!(detail.lines().count(), 1 + 3 * 2, "3 methods × 2 trials");
}

#[test]
fn convergence_sweep_reports_each_level() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    assert_success(&run(&["convergence"], &config));
    let table = std::fs::read_to_string(dir.path().join("out/convergence.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3, "header plus two levels:\n{table}");
    assert!(lines[1].starts_with("10,"));
    assert!(lines[2].starts_with("16,"));
    // basis size cap: n_p_max column stays within 0.5·n_s
    for line in &lines[1..] {
        let cols: Vec<&str> = line.split(',').collect();
        let n_s: f64 = cols[0].parse().unwrap();
        let n_p_max: f64 = cols[6].parse().unwrap();
        assert!(n_p_max <= 0.5 * n_s, "cap violated in `{line}`");
    }
}

#[test]
fn bad_config_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("broken.toml");
    std::fs::write(&config, "this is not toml at all [[[").unwrap();
    let out = run(&["simulate"], &config);
    assert_eq!(out.status.code(), Some(2), "{out:?}");

    // structurally valid TOML with an invalid physical value
    let config2 = write_config(dir.path(), "");
    let text = std::fs::read_to_string(&config2)
        .unwrap()
        .replace("beamwidth_deg = 8.0", "beamwidth_deg = 120.0");
    std::fs::write(&config2, text).unwrap();
    let out2 = run(&["simulate"], &config2);
    assert_eq!(out2.status.code(), Some(2), "{out2:?}");
}

#[test]
fn unknown_input_name_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let text = std::fs::read_to_string(&config)
        .unwrap()
        .replace("name = \"rx_height_m\"", "name = \"bogus_field\"");
    std::fs::write(&config, text).unwrap();
    let out = run(&["sample"], &config);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_field"));
}

#[test]
fn method_override_flag_wins_over_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    assert_success(&run(&["uq", "--method", "standard"], &config));
    assert!(dir.path().join("out/uq_standard.csv").exists());
}

#[test]
fn five_km_run_emits_more_than_90_output_points() {
    // long-haul scale: 5 km at a 50 m range step
    let dir = tempfile::tempdir().unwrap();
    let terrain = propuq::terrain::TerrainProfile::random_smooth(5000.0, 12.0, 7);
    let terrain_path = dir.path().join("terrain.csv");
    terrain.write_csv(&terrain_path).unwrap();
    let out = dir.path().join("out");
    let config_path = dir.path().join("exp.toml");
    let config = format!(
        r#"
[terrain]
path = "terrain.csv"

[pwe]
delta_range_m = 50.0
delta_height_m = 0.5
max_height_m = 150.0
frequency_hz = 435e6
total_range_m = 5000.0

[antenna]
tx_height_m = 11.0
rx_height_m = 2.5
beamwidth_deg = 8.0

[[input]]
name = "tx_height_m"
alpha = 3.0
beta = 3.0
lower = 9.0
upper = 13.0

[uq]
method = "apce"
n_train = 8

[output]
dir = "{}"
"#,
        out.display()
    );
    std::fs::write(&config_path, config).unwrap();
    assert_success(&run(&["simulate"], &config_path));
    let text = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    let n_points = text.lines().count() - 1;
    assert!(n_points > 90, "got {n_points} output points");
    assert!(text.lines().skip(1).all(|l| {
        let pl: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        pl.is_finite()
    }));
}

#[test]
fn partial_sample_failure_reports_indices_and_exits_four() {
    // an input range exceeding the antenna's validity makes some LHS rows
    // unevaluable while others succeed
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let text = std::fs::read_to_string(&config)
        .unwrap()
        .replace("name = \"rx_height_m\"\nalpha = 3.0\nbeta = 3.0\nlower = 1.0\nupper = 4.0\nunit = \"m\"",
                 "name = \"elevation_deg\"\nalpha = 3.0\nbeta = 3.0\nlower = 0.0\nupper = 80.0\nunit = \"deg\"");
    std::fs::write(&config, text).unwrap();
    let out = run(&["sample"], &config);
    assert_eq!(out.status.code(), Some(4), "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("sample"), "stderr: {stderr}");
}
