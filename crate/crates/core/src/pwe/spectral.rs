//! Split-step Fourier machinery: free-space steps on the periodic column
//! and Dirichlet-respecting steps via odd imaging about the local ground.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

use super::PweConfig;

/// Cached FFT plans and phase multipliers for one marching configuration.
pub(crate) struct SpectralEngine {
    planner: FftPlanner<f64>,
    /// (fft_len, backward) → per-bin phase multiplier including the 1/len
    /// inverse-FFT normalization.
    multipliers: HashMap<(usize, bool), Arc<Vec<Complex64>>>,
    k0: f64,
    dz: f64,
    dy: f64,
    scratch: Vec<Complex64>,
}

impl SpectralEngine {
    pub fn new(k0: f64, dz: f64, dy: f64) -> Self {
        Self {
            planner: FftPlanner::new(),
            multipliers: HashMap::new(),
            k0,
            dz,
            dy,
            scratch: Vec::new(),
        }
    }

    fn plans(&mut self, len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
        (
            self.planner.plan_fft_forward(len),
            self.planner.plan_fft_inverse(len),
        )
    }

    fn multiplier(&mut self, len: usize, backward: bool) -> Arc<Vec<Complex64>> {
        let (k0, dz, dy) = (self.k0, self.dz, self.dy);
        self.multipliers
            .entry((len, backward))
            .or_insert_with(|| {
                let sign = if backward { 1.0 } else { -1.0 };
                let norm = 1.0 / len as f64;
                let mult = (0..len)
                    .map(|m| {
                        let f = if m <= len / 2 {
                            m as f64
                        } else {
                            m as f64 - len as f64
                        };
                        let ky = std::f64::consts::TAU * f / (len as f64 * dy);
                        let phase = sign * ky * ky * dz / (2.0 * k0);
                        Complex64::from_polar(norm, phase)
                    })
                    .collect();
                Arc::new(mult)
            })
            .clone()
    }

    /// In-place spectral phase step on a periodic buffer.
    pub fn periodic_step(&mut self, buf: &mut [Complex64], backward: bool) {
        if self.dz == 0.0 {
            return;
        }
        let len = buf.len();
        let mult = self.multiplier(len, backward);
        let (fft, ifft) = self.plans(len);
        fft.process(buf);
        for (v, m) in buf.iter_mut().zip(mult.iter()) {
            *v *= m;
        }
        ifft.process(buf);
    }

    /// One marching step with a Dirichlet surface at `ground`: the field
    /// above the surface is odd-extended about it, stepped spectrally, and
    /// restricted back. Everything at or below the surface ends up zero.
    pub fn dirichlet_step(&mut self, col: &mut [Complex64], ground: usize, backward: bool) {
        let n = col.len();
        let m = n - ground;
        debug_assert!(m >= 4, "ground too close to the domain top");
        let ext = 2 * m;
        self.scratch.clear();
        self.scratch.resize(ext, Complex64::default());
        for d in 1..m {
            self.scratch[d] = col[ground + d];
            self.scratch[ext - d] = -col[ground + d];
        }
        let mut scratch = std::mem::take(&mut self.scratch);
        self.periodic_step(&mut scratch, backward);
        for d in 1..m {
            col[ground + d] = scratch[d];
        }
        self.scratch = scratch;
        for v in col[..=ground].iter_mut() {
            *v = Complex64::default();
        }
    }
}

/// Range step at which the raised-cosine taper applies with unit exponent;
/// other steps raise it to Δz/50 so absorption acts per metre of range, not
/// per marching step.
pub(crate) const ABSORBER_REFERENCE_STEP_M: f64 = 50.0;

/// Raised-cosine taper covering the top `fraction` of the grid; multiplied
/// into the column after every marching step. The profile is calibrated for
/// a 50 m step and exponent-scaled to the actual one.
pub(crate) fn absorber_window(n: usize, fraction: f64, delta_range_m: f64) -> Vec<f64> {
    let n_abs = ((n as f64) * fraction).floor() as usize;
    let start = n - n_abs;
    let exponent = delta_range_m / ABSORBER_REFERENCE_STEP_M;
    (0..n)
        .map(|j| {
            if j < start {
                1.0
            } else {
                let t = (j - start) as f64 / n_abs as f64;
                (0.5 * (1.0 + (std::f64::consts::PI * t).cos())).powf(exponent)
            }
        })
        .collect()
}

fn checked_column(u_col: &[Complex64], cfg: &PweConfig) -> Result<()> {
    let n = cfg.n_height_points();
    if u_col.len() != n {
        return Err(Error::config(format!(
            "column length {} does not match the configured grid of {n} points",
            u_col.len()
        )));
    }
    Ok(())
}

/// One free-space forward marching step of the full column: inverse
/// transform of exp(−j k_y² Δz / (2 k0)) · û(k_y).
pub fn step_forward(u_col: &[Complex64], cfg: &PweConfig) -> Result<Vec<Complex64>> {
    checked_column(u_col, cfg)?;
    let mut col = u_col.to_vec();
    if cfg.delta_range_m == 0.0 {
        return Ok(col);
    }
    let k0 = PweConfig::wavenumber(cfg.frequency_hz);
    let mut engine = SpectralEngine::new(k0, cfg.delta_range_m, cfg.delta_height_m);
    engine.periodic_step(&mut col, false);
    Ok(col)
}

/// Inverse of [`step_forward`]: the conjugated spectral multiplier.
pub fn step_backward(u_col: &[Complex64], cfg: &PweConfig) -> Result<Vec<Complex64>> {
    checked_column(u_col, cfg)?;
    let mut col = u_col.to_vec();
    if cfg.delta_range_m == 0.0 {
        return Ok(col);
    }
    let k0 = PweConfig::wavenumber(cfg.frequency_hz);
    let mut engine = SpectralEngine::new(k0, cfg.delta_range_m, cfg.delta_height_m);
    engine.periodic_step(&mut col, true);
    Ok(col)
}
