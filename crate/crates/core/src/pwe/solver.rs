//! Two-way marching driver: forward/backward sweeps over the staircase
//! terrain, facet reflections, and path-loss extraction calibrated against
//! a free-space run of the same source.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::terrain::TerrainProfile;

use super::boundary::{ground_index, ImpedanceStepper};
use super::spectral::{absorber_window, SpectralEngine};
use super::{
    AntennaConfig, ComplexField, PathLossTrace, PweConfig, NEAR_FIELD_SKIP,
};

/// Initial aperture u(y, 0): unit-amplitude Gaussian centred at the antenna
/// height with a linear phase tilt,
/// u = exp(−(y−y_c)²/w²)·exp(−j k0 (y−y_c) sin θ_e), where
/// w = √(2 ln 2) / (k0 sin(beamwidth/2)) matches the far-field half-power
/// beamwidth.
pub fn gaussian_source(
    antenna: &AntennaConfig,
    terrain: &TerrainProfile,
    cfg: &PweConfig,
) -> Result<Vec<Complex64>> {
    antenna.validate()?;
    let k0 = PweConfig::wavenumber(antenna.frequency_hz);
    let y_c = terrain.elevation_at(0.0) + antenna.tx_height_m;
    let n = cfg.n_height_points();
    if y_c >= cfg.padded_height_m() || y_c <= 0.0 {
        return Err(Error::config(format!(
            "source centre at {y_c:.2} m lies outside the height grid (0, {:.2})",
            cfg.padded_height_m()
        )));
    }
    Ok(aperture(n, cfg.delta_height_m, y_c, k0, antenna))
}

fn aperture(
    n: usize,
    dy: f64,
    y_c: f64,
    k0: f64,
    antenna: &AntennaConfig,
) -> Vec<Complex64> {
    let w = source_width(k0, antenna.beamwidth_deg);
    let sin_tilt = antenna.elevation_deg.to_radians().sin();
    // the phase sign is chosen so that positive elevation steers the beam
    // upward under the exp(−j k_y² Δz / 2k0) marching multiplier
    (0..n)
        .map(|j| {
            let dy_c = j as f64 * dy - y_c;
            let amp = (-(dy_c / w).powi(2)).exp();
            Complex64::from_polar(amp, k0 * dy_c * sin_tilt)
        })
        .collect()
}

/// Aperture 1/e half-width implied by a half-power beamwidth.
pub(crate) fn source_width(k0: f64, beamwidth_deg: f64) -> f64 {
    (2.0 * (2.0_f64).ln()).sqrt() / (k0 * (beamwidth_deg.to_radians() / 2.0).sin())
}

/// Facet bookkeeping from the marching sweeps.
#[derive(Debug, Clone)]
pub struct FacetEvent {
    /// Range-grid line of the vertical facet.
    pub step: usize,
    /// ℓ2 norm of the field blocked by the facet.
    pub incident_norm: f64,
    /// ℓ2 norm of the field injected into the opposite sweep.
    pub injected_norm: f64,
}

/// Full output of a two-way run.
#[derive(Debug)]
pub struct TwoWayRun {
    pub trace: PathLossTrace,
    /// Coherent sum of all sweeps, indexed (height, range line).
    pub field: ComplexField,
    /// Facet events of the initial forward sweep.
    pub facets: Vec<FacetEvent>,
    /// On-axis magnitude of the free-space calibration run per range line.
    pub free_space_axis: Vec<f64>,
}

struct Injection {
    base: usize,
    fragment: Vec<Complex64>,
}

struct Marcher {
    cfg: PweConfig,
    k0: f64,
    n: usize,
    n_steps: usize,
    /// Staircase ground index per range interval.
    grounds: Vec<usize>,
    engine: SpectralEngine,
    impedance: Option<ImpedanceStepper>,
    absorber: Vec<f64>,
    gamma: Complex64,
}

impl Marcher {
    fn new(terrain: &TerrainProfile, antenna: &AntennaConfig, cfg: &PweConfig) -> Result<Self> {
        cfg.validate()?;
        antenna.validate()?;
        let k0 = PweConfig::wavenumber(antenna.frequency_hz);
        let n = cfg.n_height_points();
        let n_steps = cfg.n_range_steps();
        let grounds: Vec<usize> = (0..n_steps)
            .map(|i| ground_index(terrain.elevation_at(i as f64 * cfg.delta_range_m), cfg))
            .collect::<Result<_>>()?;
        let impedance = cfg
            .ground
            .surface_impedance(k0)
            .map(|alpha| ImpedanceStepper::new(alpha, k0, cfg.delta_range_m, cfg.delta_height_m));
        Ok(Self {
            cfg: cfg.clone(),
            k0,
            n,
            n_steps,
            grounds,
            engine: SpectralEngine::new(k0, cfg.delta_range_m, cfg.delta_height_m),
            impedance,
            absorber: absorber_window(n, cfg.absorber_fraction, cfg.delta_range_m),
            gamma: cfg.ground.facet_reflection(),
        })
    }

    /// Staircase level the marched field respects at a grid line: the higher
    /// of the two adjacent interval grounds. Extracting below it would read
    /// the zero region inside the numerical terrain.
    fn ground_at_line(&self, line: usize) -> usize {
        let right = self.grounds[line.min(self.n_steps - 1)];
        if line == 0 {
            return right;
        }
        right.max(self.grounds[line - 1])
    }

    fn bounded_step(&mut self, col: &mut [Complex64], ground: usize, backward: bool) {
        match &mut self.impedance {
            Some(stepper) => stepper.step(
                col,
                ground,
                self.k0,
                self.cfg.delta_range_m,
                backward,
            ),
            None => self.engine.dirichlet_step(col, ground, backward),
        }
        for (v, &a) in col.iter_mut().zip(&self.absorber) {
            *v *= a;
        }
    }

    fn enforce_ground(&self, col: &mut [Complex64], ground: usize) {
        for v in col[..ground].iter_mut() {
            *v = Complex64::default();
        }
        if self.impedance.is_none() {
            col[ground] = Complex64::default();
        }
    }

    /// One sweep across the domain. `injections[line]` holds fields released
    /// into this sweep at that line; blocked fragments are collected for the
    /// opposite direction. The sweep's field is accumulated into `total`.
    fn sweep(
        &mut self,
        start: Option<Vec<Complex64>>,
        injections: &[Vec<Injection>],
        backward: bool,
        total: &mut [Vec<Complex64>],
    ) -> Result<(Vec<FacetEvent>, Vec<Vec<Injection>>)> {
        let n_steps = self.n_steps;
        let mut col = start.unwrap_or_else(|| vec![Complex64::default(); self.n]);
        let mut events = Vec::new();
        let mut out: Vec<Vec<Injection>> = (0..=n_steps).map(|_| Vec::new()).collect();

        let lines: Vec<usize> = if backward {
            (0..=n_steps).rev().collect()
        } else {
            (0..=n_steps).collect()
        };
        for (pos, &line) in lines.iter().enumerate() {
            for inj in &injections[line] {
                for (k, v) in inj.fragment.iter().enumerate() {
                    col[inj.base + k] += v;
                }
            }
            // vertical facet between the interval the wave leaves and the
            // one it enters; blocked portions reflect into the other sweep
            let transition = if backward {
                (line > 0 && line < n_steps).then(|| (self.grounds[line], self.grounds[line - 1]))
            } else {
                (line > 0 && line < n_steps).then(|| (self.grounds[line - 1], self.grounds[line]))
            };
            if let Some((g_from, g_into)) = transition {
                if g_into > g_from {
                    let blocked: Vec<Complex64> = col[g_from..g_into].to_vec();
                    let incident_norm =
                        blocked.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                    if incident_norm > 0.0 {
                        let fragment: Vec<Complex64> =
                            blocked.iter().map(|v| v * self.gamma).collect();
                        let injected_norm =
                            fragment.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                        events.push(FacetEvent {
                            step: line,
                            incident_norm,
                            injected_norm,
                        });
                        out[line].push(Injection {
                            base: g_from,
                            fragment,
                        });
                    }
                    for v in col[g_from..g_into].iter_mut() {
                        *v = Complex64::default();
                    }
                }
            }
            if col.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::Numerics {
                    step: line,
                    detail: "non-finite field value after marching".to_string(),
                });
            }
            for (t, v) in total[line].iter_mut().zip(col.iter()) {
                *t += v;
            }
            // march into the next interval
            if pos + 1 < lines.len() {
                let interval = if backward { line - 1 } else { line };
                self.bounded_step(&mut col, self.grounds[interval], backward);
            }
        }
        Ok((events, out))
    }

    /// Free-space calibration: same beam profile, no tilt, mid-domain, plain
    /// periodic marching. Returns the on-axis magnitude per range line.
    fn free_space_axis(&mut self, antenna: &AntennaConfig) -> Vec<f64> {
        let center_idx = self.n / 2;
        let y_c = center_idx as f64 * self.cfg.delta_height_m;
        let untilted = AntennaConfig {
            elevation_deg: 0.0,
            ..antenna.clone()
        };
        let mut col = aperture(self.n, self.cfg.delta_height_m, y_c, self.k0, &untilted);
        let mut axis = Vec::with_capacity(self.n_steps + 1);
        axis.push(col[center_idx].norm());
        for _ in 0..self.n_steps {
            self.engine.periodic_step(&mut col, false);
            for (v, &a) in col.iter_mut().zip(&self.absorber) {
                *v *= a;
            }
            axis.push(col[center_idx].norm());
        }
        axis
    }

    fn extract_trace(
        &self,
        total: &[Vec<Complex64>],
        axis: &[f64],
        antenna: &AntennaConfig,
    ) -> Result<PathLossTrace> {
        let lambda = super::SPEED_OF_LIGHT / antenna.frequency_hz;
        let dy = self.cfg.delta_height_m;
        let mut ranges = Vec::new();
        let mut losses = Vec::new();
        for line in NEAR_FIELD_SKIP..=self.n_steps {
            let x = line as f64 * self.cfg.delta_range_m;
            let y_rx = self.ground_at_line(line) as f64 * dy + antenna.rx_height_m;
            let pos = y_rx / dy;
            let j0 = pos.floor() as usize;
            if j0 + 1 >= self.n {
                return Err(Error::config(format!(
                    "receiver at {y_rx:.2} m lies outside the height grid"
                )));
            }
            let frac = pos - j0 as f64;
            let value = total[line][j0] * (1.0 - frac) + total[line][j0 + 1] * frac;
            let fspl = 20.0 * (4.0 * std::f64::consts::PI * x / lambda).log10();
            let ratio = (value.norm() / axis[line]).max(1e-25);
            ranges.push(x);
            losses.push(fspl - 20.0 * ratio.log10());
        }
        PathLossTrace::new(ranges, losses)
    }
}

/// Two-way run returning the full field, facet events, and calibration data.
pub fn run_two_way_detailed(
    terrain: &TerrainProfile,
    antenna: &AntennaConfig,
    cfg: &PweConfig,
) -> Result<TwoWayRun> {
    let mut marcher = Marcher::new(terrain, antenna, cfg)?;
    let n = marcher.n;
    let n_steps = marcher.n_steps;

    let mut source = gaussian_source(antenna, terrain, cfg)?;
    marcher.enforce_ground(&mut source, marcher.grounds[0]);

    let mut total: Vec<Vec<Complex64>> =
        (0..=n_steps).map(|_| vec![Complex64::default(); n]).collect();
    let empty: Vec<Vec<Injection>> = (0..=n_steps).map(|_| Vec::new()).collect();

    let (forward_events, mut pending) =
        marcher.sweep(Some(source), &empty, false, &mut total)?;
    let mut backward = true;
    for _ in 0..cfg.max_reflections {
        if pending.iter().all(|v| v.is_empty()) {
            break;
        }
        let (_, next) = marcher.sweep(None, &pending, backward, &mut total)?;
        pending = next;
        backward = !backward;
    }

    let axis = marcher.free_space_axis(antenna);
    let trace = marcher.extract_trace(&total, &axis, antenna)?;

    let mut values = Array2::default((n, n_steps + 1));
    for (line, col) in total.iter().enumerate() {
        for (j, v) in col.iter().enumerate() {
            values[(j, line)] = *v;
        }
    }
    Ok(TwoWayRun {
        trace,
        field: ComplexField {
            values,
            grid: cfg.clone(),
        },
        facets: forward_events,
        free_space_axis: axis,
    })
}

/// March the two-way solver and return path loss versus range.
pub fn run_two_way(
    terrain: &TerrainProfile,
    antenna: &AntennaConfig,
    cfg: &PweConfig,
) -> Result<PathLossTrace> {
    run_two_way_detailed(terrain, antenna, cfg).map(|run| run.trace)
}
