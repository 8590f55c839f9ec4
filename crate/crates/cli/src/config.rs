//! Experiment configuration: a TOML file with `[terrain]`, `[pwe]`,
//! `[antenna]`, repeated `[[input]]`, `[uq]`, and `[output]` sections.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use propuq::apce::ApceConfig;
use propuq::pwe::{AntennaConfig, GroundModel, PweConfig};
use propuq::stochastic::{InputSpace, RandomInputSpec};
use propuq::terrain::TerrainProfile;
use propuq::uqstats::{PipelineOptions, UqMethod};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub terrain: TerrainSection,
    pub pwe: PweSection,
    pub antenna: AntennaSection,
    #[serde(rename = "input")]
    pub inputs: Vec<InputSection>,
    pub uq: UqSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TerrainSection {
    pub path: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PweSection {
    pub delta_range_m: f64,
    pub delta_height_m: f64,
    pub max_height_m: f64,
    pub frequency_hz: f64,
    pub total_range_m: f64,
    #[serde(default)]
    pub ground: GroundSection,
    #[serde(default = "default_absorber")]
    pub absorber_fraction: f64,
    #[serde(default = "default_reflections")]
    pub max_reflections: usize,
}

fn default_absorber() -> f64 {
    0.25
}

fn default_reflections() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroundSection {
    Pec,
    Lossy { eps_r: f64, tan_delta: f64 },
}

impl Default for GroundSection {
    fn default() -> Self {
        GroundSection::Pec
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AntennaSection {
    pub tx_height_m: f64,
    pub rx_height_m: f64,
    #[serde(default)]
    pub elevation_deg: f64,
    pub beamwidth_deg: f64,
    /// Defaults to the PWE nominal frequency.
    pub frequency_hz: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputSection {
    pub name: String,
    pub alpha: f64,
    pub beta: f64,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub unit: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UqSection {
    #[serde(default = "default_method")]
    pub method: String,
    pub n_train: usize,
    #[serde(default = "default_mc_ref")]
    pub n_mc_reference: usize,
    #[serde(default = "default_surrogate_mc")]
    pub n_surrogate_mc: usize,
    #[serde(default = "default_train_seed")]
    pub train_seed: u64,
    #[serde(default = "default_mc_seed")]
    pub mc_reference_seed: u64,
    #[serde(default = "default_smc_seed")]
    pub surrogate_mc_seed: u64,
    #[serde(default = "default_standard_order")]
    pub standard_order: u32,
    #[serde(default = "default_sparse_order")]
    pub sparse_order: u32,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_levels")]
    pub convergence_levels: Vec<usize>,
    #[serde(default)]
    pub apce: ApceSection,
}

fn default_method() -> String {
    "apce".to_string()
}
fn default_mc_ref() -> usize {
    10_000
}
fn default_surrogate_mc() -> usize {
    100_000
}
fn default_train_seed() -> u64 {
    1
}
fn default_mc_seed() -> u64 {
    777
}
fn default_smc_seed() -> u64 {
    4242
}
fn default_standard_order() -> u32 {
    2
}
fn default_sparse_order() -> u32 {
    3
}
fn default_trials() -> usize {
    30
}
fn default_levels() -> Vec<usize> {
    vec![10, 20, 30, 40, 50, 60, 70, 80, 90, 100]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApceSection {
    #[serde(default = "default_max_poly_order")]
    pub max_poly_order: u32,
    #[serde(default = "default_lower_ratio")]
    pub lower_ratio: f64,
    #[serde(default = "default_upper_ratio")]
    pub upper_ratio: f64,
    #[serde(default = "default_target_error")]
    pub target_error: f64,
    #[serde(default = "default_stagnation")]
    pub stagnation_limit: usize,
}

fn default_max_poly_order() -> u32 {
    5
}
fn default_lower_ratio() -> f64 {
    0.25
}
fn default_upper_ratio() -> f64 {
    0.5
}
fn default_target_error() -> f64 {
    1e-3
}
fn default_stagnation() -> usize {
    3
}

impl Default for ApceSection {
    fn default() -> Self {
        Self {
            max_poly_order: default_max_poly_order(),
            lower_ratio: default_lower_ratio(),
            upper_ratio: default_upper_ratio(),
            target_error: default_target_error(),
            stagnation_limit: default_stagnation(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputSection {
    pub dir: PathBuf,
}

/// Everything a command needs, resolved from the config file plus CLI
/// overrides.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub terrain: TerrainProfile,
    pub pwe: PweConfig,
    pub antenna: AntennaConfig,
    pub space: InputSpace,
    pub method: UqMethod,
    pub options: PipelineOptions,
    pub out_dir: PathBuf,
    /// Hash of the effective (post-override) configuration.
    pub config_hash: String,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| anyhow::anyhow!("config {}: {e}", path.display()))?;
        Ok(cfg)
    }

    /// Resolve paths relative to the config file location.
    pub fn resolve(
        mut self,
        config_dir: &Path,
        seed_override: Option<u64>,
        method_override: Option<&str>,
        out_override: Option<&Path>,
    ) -> anyhow::Result<Experiment> {
        if let Some(seed) = seed_override {
            self.uq.train_seed = seed;
        }
        if let Some(m) = method_override {
            self.uq.method = m.to_string();
        }
        if let Some(out) = out_override {
            self.output.dir = out.to_path_buf();
        }

        let terrain_path = if self.terrain.path.is_relative() {
            config_dir.join(&self.terrain.path)
        } else {
            self.terrain.path.clone()
        };
        let terrain = TerrainProfile::read_csv(&terrain_path)?;

        let ground = match &self.pwe.ground {
            GroundSection::Pec => GroundModel::Pec,
            GroundSection::Lossy { eps_r, tan_delta } => GroundModel::LossyDielectric {
                eps_r: *eps_r,
                tan_delta: *tan_delta,
            },
        };
        let pwe = PweConfig {
            delta_range_m: self.pwe.delta_range_m,
            delta_height_m: self.pwe.delta_height_m,
            max_height_m: self.pwe.max_height_m,
            frequency_hz: self.pwe.frequency_hz,
            total_range_m: self.pwe.total_range_m,
            ground,
            absorber_fraction: self.pwe.absorber_fraction,
            max_reflections: self.pwe.max_reflections,
        };
        pwe.validate()?;

        let antenna = AntennaConfig {
            tx_height_m: self.antenna.tx_height_m,
            rx_height_m: self.antenna.rx_height_m,
            elevation_deg: self.antenna.elevation_deg,
            beamwidth_deg: self.antenna.beamwidth_deg,
            frequency_hz: self.antenna.frequency_hz.unwrap_or(self.pwe.frequency_hz),
        };
        antenna.validate()?;

        let inputs: Vec<RandomInputSpec> = self
            .inputs
            .iter()
            .map(|i| RandomInputSpec::new(&i.name, i.alpha, i.beta, i.lower, i.upper, &i.unit))
            .collect::<propuq::Result<_>>()?;
        for input in &inputs {
            // reject names that are not antenna fields up front
            antenna.with_field(&input.name, input.lower)?;
        }
        let space = InputSpace::new(inputs)?;

        let method = UqMethod::parse(&self.uq.method)?;
        let apce = ApceConfig {
            max_poly_order: self.uq.apce.max_poly_order,
            lower_ratio: self.uq.apce.lower_ratio,
            upper_ratio: self.uq.apce.upper_ratio,
            target_error: self.uq.apce.target_error,
            stagnation_limit: self.uq.apce.stagnation_limit,
        };
        apce.validate()?;
        let options = PipelineOptions {
            n_surrogate_mc: self.uq.n_surrogate_mc,
            standard_order: self.uq.standard_order,
            sparse_order: self.uq.sparse_order,
            apce,
        };

        let out_dir = self.output.dir.clone();
        let canonical = toml::to_string(&self).expect("config reserializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        let config_hash: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();

        Ok(Experiment {
            config: self,
            terrain,
            pwe,
            antenna,
            space,
            method,
            options,
            out_dir,
            config_hash,
        })
    }
}
