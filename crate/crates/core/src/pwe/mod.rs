//! Deterministic two-way parabolic wave equation solver over staircase
//! terrain: split-step Fourier marching, ground boundary treatment, and
//! path-loss extraction against a free-space calibration run.

mod boundary;
mod solver;
mod spectral;

pub use boundary::apply_ground_boundary;
pub use solver::{gaussian_source, run_two_way, run_two_way_detailed, FacetEvent, TwoWayRun};
pub use spectral::{step_backward, step_forward};

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Ground electrical model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroundModel {
    /// Perfect electric conductor: Dirichlet condition via odd imaging.
    Pec,
    /// Lossy dielectric handled through a Leontovich surface impedance.
    LossyDielectric { eps_r: f64, tan_delta: f64 },
}

impl GroundModel {
    pub fn validate(&self) -> Result<()> {
        if let GroundModel::LossyDielectric { eps_r, tan_delta } = self {
            if !(*eps_r > 1.0) {
                return Err(Error::config(format!(
                    "relative permittivity must exceed 1, got {eps_r}"
                )));
            }
            if !(*tan_delta >= 0.0) {
                return Err(Error::config(format!(
                    "loss tangent must be non-negative, got {tan_delta}"
                )));
            }
        }
        Ok(())
    }

    /// Complex refractive index n = √(ε_r (1 − j tanδ)); None for PEC.
    pub fn refractive_index(&self) -> Option<Complex64> {
        match self {
            GroundModel::Pec => None,
            GroundModel::LossyDielectric { eps_r, tan_delta } => {
                Some((Complex64::new(*eps_r, -eps_r * tan_delta)).sqrt())
            }
        }
    }

    /// Reflection coefficient applied to field blocked at a vertical facet:
    /// −1 for PEC, the normal-incidence Fresnel value (n−1)/(n+1) otherwise.
    pub fn facet_reflection(&self) -> Complex64 {
        match self.refractive_index() {
            None => Complex64::new(-1.0, 0.0),
            Some(n) => (n - 1.0) / (n + 1.0),
        }
    }

    /// Leontovich impedance coefficient α in ∂u/∂y + αu = 0 at the surface,
    /// for grazing incidence with the field convention u·e^{−j k0 x}.
    pub fn surface_impedance(&self, k0: f64) -> Option<Complex64> {
        match self {
            GroundModel::Pec => None,
            GroundModel::LossyDielectric { eps_r, tan_delta } => {
                let eps_c = Complex64::new(*eps_r, -eps_r * tan_delta);
                Some(Complex64::i() * k0 * (eps_c - 1.0).sqrt())
            }
        }
    }
}

/// Grid and marching parameters of the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct PweConfig {
    /// Range step Δz.
    pub delta_range_m: f64,
    /// Height step Δy.
    pub delta_height_m: f64,
    /// Requested transverse domain size; the grid is padded to a
    /// power-of-two number of points.
    pub max_height_m: f64,
    /// Nominal frequency; per-run sources may override it.
    pub frequency_hz: f64,
    pub total_range_m: f64,
    pub ground: GroundModel,
    /// Fraction of the grid top covered by the raised-cosine absorber.
    pub absorber_fraction: f64,
    /// Additional alternating-direction sweeps after the initial forward
    /// pass; 0 disables backward propagation entirely.
    pub max_reflections: usize,
}

impl PweConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("delta_range_m", self.delta_range_m),
            ("delta_height_m", self.delta_height_m),
            ("max_height_m", self.max_height_m),
            ("frequency_hz", self.frequency_hz),
            ("total_range_m", self.total_range_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.absorber_fraction > 0.0 && self.absorber_fraction < 0.5) {
            return Err(Error::config(format!(
                "absorber_fraction must lie in (0, 0.5), got {}",
                self.absorber_fraction
            )));
        }
        self.ground.validate()?;
        if self.n_height_points() < 16 {
            return Err(Error::config(
                "height grid with fewer than 16 points is not usable".to_string(),
            ));
        }
        Ok(())
    }

    /// Number of height grid points: max_height/Δy padded to a power of two.
    pub fn n_height_points(&self) -> usize {
        let raw = (self.max_height_m / self.delta_height_m).ceil() as usize;
        raw.next_power_of_two()
    }

    /// Domain top after padding, in metres.
    pub fn padded_height_m(&self) -> f64 {
        self.n_height_points() as f64 * self.delta_height_m
    }

    pub fn n_range_steps(&self) -> usize {
        (self.total_range_m / self.delta_range_m).round().max(1.0) as usize
    }

    /// Free-space wavenumber for the given frequency.
    pub fn wavenumber(frequency_hz: f64) -> f64 {
        2.0 * std::f64::consts::PI * frequency_hz / SPEED_OF_LIGHT
    }
}

/// Antenna placement and beam parameters. Heights are relative to the local
/// terrain; angles in degrees at this interface.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaConfig {
    pub tx_height_m: f64,
    pub rx_height_m: f64,
    /// Beam tilt, positive upward.
    pub elevation_deg: f64,
    /// Half-power beamwidth.
    pub beamwidth_deg: f64,
    pub frequency_hz: f64,
}

impl AntennaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tx_height_m > 0.0) || !(self.rx_height_m > 0.0) {
            return Err(Error::config(format!(
                "antenna heights must be positive, got tx {} rx {}",
                self.tx_height_m, self.rx_height_m
            )));
        }
        if !(self.beamwidth_deg > 0.0 && self.beamwidth_deg < 90.0) {
            return Err(Error::config(format!(
                "beamwidth must lie in (0, 90) degrees, got {}",
                self.beamwidth_deg
            )));
        }
        if !(self.elevation_deg.abs() < 45.0) {
            return Err(Error::config(format!(
                "elevation angle must satisfy |θ| < 45 degrees, got {}",
                self.elevation_deg
            )));
        }
        if !(self.frequency_hz > 0.0) {
            return Err(Error::config(format!(
                "frequency must be positive, got {}",
                self.frequency_hz
            )));
        }
        Ok(())
    }

    /// Set one field by name; used to apply sampled uncertain inputs.
    pub fn with_field(&self, name: &str, value: f64) -> Result<Self> {
        let mut a = self.clone();
        match name {
            "tx_height_m" => a.tx_height_m = value,
            "rx_height_m" => a.rx_height_m = value,
            "elevation_deg" => a.elevation_deg = value,
            "beamwidth_deg" => a.beamwidth_deg = value,
            "frequency_hz" => a.frequency_hz = value,
            other => {
                return Err(Error::config(format!(
                    "`{other}` is not an antenna field (expected tx_height_m, rx_height_m, \
                     elevation_deg, beamwidth_deg, or frequency_hz)"
                )))
            }
        }
        Ok(a)
    }
}

/// Complex reduced field on the (height, range) grid.
#[derive(Debug, Clone)]
pub struct ComplexField {
    /// Indexed (height_index, range_index).
    pub values: Array2<Complex64>,
    pub grid: PweConfig,
}

impl ComplexField {
    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Path loss versus range.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLossTrace {
    pub ranges_m: Vec<f64>,
    pub path_loss_db: Vec<f64>,
}

impl PathLossTrace {
    pub fn new(ranges_m: Vec<f64>, path_loss_db: Vec<f64>) -> Result<Self> {
        if ranges_m.len() != path_loss_db.len() {
            return Err(Error::config("trace vectors differ in length".to_string()));
        }
        if ranges_m.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config(
                "trace ranges must increase strictly".to_string(),
            ));
        }
        Ok(Self {
            ranges_m,
            path_loss_db,
        })
    }

    pub fn len(&self) -> usize {
        self.ranges_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges_m.is_empty()
    }

    /// CSV with header `range_m,path_loss_db`, 9 significant digits.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "range_m,path_loss_db")?;
        for (r, pl) in self.ranges_m.iter().zip(&self.path_loss_db) {
            writeln!(
                f,
                "{},{}",
                crate::terrain::fmt_sig9(*r),
                crate::terrain::fmt_sig9(*pl)
            )?;
        }
        Ok(())
    }
}

/// Output ranges start this many steps from the source (near-field cut).
pub const NEAR_FIELD_SKIP: usize = 10;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_pads_to_power_of_two() {
        let cfg = PweConfig {
            delta_range_m: 50.0,
            delta_height_m: 0.5,
            max_height_m: 100.0,
            frequency_hz: 435e6,
            total_range_m: 5000.0,
            ground: GroundModel::Pec,
            absorber_fraction: 0.25,
            max_reflections: 1,
        };
        // 200 raw points pad to 256
        assert_eq!(cfg.n_height_points(), 256);
        assert_eq!(cfg.padded_height_m(), 128.0);
        assert_eq!(cfg.n_range_steps(), 100);
        cfg.validate().unwrap();
    }

    #[test]
    fn paper_ground_constants_are_expressible() {
        let g = GroundModel::LossyDielectric {
            eps_r: 4.5,
            tan_delta: 0.07,
        };
        g.validate().unwrap();
        let n = g.refractive_index().unwrap();
        // n = √(4.5·(1 − 0.07j)) ≈ 2.1219 − 0.0742j
        assert!((n.re - 2.1219).abs() < 1e-3, "re {}", n.re);
        assert!((n.im + 0.0743).abs() < 1e-3, "im {}", n.im);
        let gamma = g.facet_reflection();
        assert!(gamma.norm() < 1.0);
        assert_eq!(
            GroundModel::Pec.facet_reflection(),
            Complex64::new(-1.0, 0.0)
        );
        // decaying surface wave requires Re α > 0
        let alpha = g.surface_impedance(PweConfig::wavenumber(435e6)).unwrap();
        assert!(alpha.re > 0.0);
    }

    #[test]
    fn antenna_validation_bounds() {
        let a = AntennaConfig {
            tx_height_m: 11.0,
            rx_height_m: 2.5,
            elevation_deg: 0.0,
            beamwidth_deg: 8.0,
            frequency_hz: 435e6,
        };
        a.validate().unwrap();
        assert!(a.with_field("beamwidth_deg", 95.0).unwrap().validate().is_err());
        assert!(a.with_field("elevation_deg", 60.0).unwrap().validate().is_err());
        assert!(a.with_field("nonsense", 1.0).is_err());
    }

    #[test]
    fn trace_rejects_unsorted_ranges() {
        assert!(PathLossTrace::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(PathLossTrace::new(vec![1.0, 2.0], vec![0.0]).is_err());
    }
}
