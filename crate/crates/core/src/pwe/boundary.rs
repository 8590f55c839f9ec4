//! Ground boundary treatment: Dirichlet imaging for PEC and a discrete
//! mixed (sine/cosine + surface-term) transform for the Leontovich
//! impedance condition of lossy dielectric ground.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

use super::{GroundModel, PweConfig};

/// Terrain height snapped up to the nearest height grid line.
pub(crate) fn ground_index(terrain_height_m: f64, cfg: &PweConfig) -> Result<usize> {
    let g = (terrain_height_m / cfg.delta_height_m).ceil().max(0.0) as usize;
    let n = cfg.n_height_points();
    if g + 16 > n {
        return Err(Error::terrain(format!(
            "terrain at {terrain_height_m} m reaches the top of the {:.1} m domain",
            cfg.padded_height_m()
        )));
    }
    Ok(g)
}

/// Enforce the ground condition on a single column: the field inside the
/// terrain is zeroed, and for PEC the surface node is pinned to zero so the
/// odd-image marching step respects the Dirichlet condition. The impedance
/// condition itself is realized spectrally inside the marching step.
pub fn apply_ground_boundary(
    u_col: &[Complex64],
    local_terrain_height_m: f64,
    ground: &GroundModel,
    cfg: &PweConfig,
) -> Result<Vec<Complex64>> {
    if u_col.len() != cfg.n_height_points() {
        return Err(Error::config(format!(
            "column length {} does not match the configured grid of {} points",
            u_col.len(),
            cfg.n_height_points()
        )));
    }
    let g = ground_index(local_terrain_height_m, cfg)?;
    let mut col = u_col.to_vec();
    for v in col[..g].iter_mut() {
        *v = Complex64::default();
    }
    if matches!(ground, GroundModel::Pec) {
        col[g] = Complex64::default();
    }
    Ok(col)
}

struct ModeTables {
    /// exp(∓j k_y² Δz / 2k0) for the interior sine modes, m = 1..L−1.
    phase_fwd: Vec<Complex64>,
    phase_bwd: Vec<Complex64>,
    /// α / (α² + σ_m²) and −σ_m / (α² + σ_m²) reconstruction weights.
    weight_sin: Vec<Complex64>,
    weight_cos: Vec<Complex64>,
    /// Discrete surface-mode powers r^j, j = 0..=L (0 after underflow).
    r_pows: Vec<Complex64>,
    /// Primed sum Σ' r^{2j} normalizing the surface-term extraction.
    k_denom: Complex64,
}

/// Marching step under the impedance condition ∂u/∂y + αu = 0.
///
/// The auxiliary field w_j = (u_{j+1} − u_{j−1})/(2h) + α u_j satisfies a
/// Dirichlet-like problem and marches in the sine basis; the homogeneous
/// component u ∝ r^j (the discrete surface term, r the decaying root of
/// r² + 2αh r − 1 = 0) is extracted and marched separately.
pub(crate) struct ImpedanceStepper {
    alpha: Complex64,
    r: Complex64,
    /// Per-step factor of the surface term; zeroed when it would grow.
    surf_fwd: Complex64,
    surf_bwd: Complex64,
    h: f64,
    planner: FftPlanner<f64>,
    tables: HashMap<usize, Arc<ModeTables>>,
}

impl ImpedanceStepper {
    pub fn new(alpha: Complex64, k0: f64, dz: f64, h: f64) -> Self {
        let ah = alpha * h;
        let root = (ah * ah + 1.0).sqrt();
        let r1 = -ah + root;
        let r2 = -ah - root;
        let r = if r1.norm() <= r2.norm() { r1 } else { r2 };
        // surface mode has k_y² = −α²; a factor above unit magnitude is the
        // nonphysical growing branch and is dropped instead of marched
        let clamp = |f: Complex64| if f.norm() > 1.0 { Complex64::default() } else { f };
        let surf_fwd = clamp((Complex64::i() * alpha * alpha * dz / (2.0 * k0)).exp());
        let surf_bwd = clamp((-Complex64::i() * alpha * alpha * dz / (2.0 * k0)).exp());
        Self {
            alpha,
            r,
            surf_fwd,
            surf_bwd,
            h,
            planner: FftPlanner::new(),
            tables: HashMap::new(),
        }
    }

    fn tables(&mut self, l: usize, k0: f64, dz: f64) -> Arc<ModeTables> {
        let (alpha, r, h) = (self.alpha, self.r, self.h);
        self.tables
            .entry(l)
            .or_insert_with(|| {
                let mut phase_fwd = Vec::with_capacity(l);
                let mut phase_bwd = Vec::with_capacity(l);
                let mut weight_sin = Vec::with_capacity(l);
                let mut weight_cos = Vec::with_capacity(l);
                for m in 0..l {
                    let ky = std::f64::consts::PI * m as f64 / (l as f64 * h);
                    let phase = -ky * ky * dz / (2.0 * k0);
                    phase_fwd.push(Complex64::from_polar(1.0, phase));
                    phase_bwd.push(Complex64::from_polar(1.0, -phase));
                    let sigma = (std::f64::consts::PI * m as f64 / l as f64).sin() / h;
                    let denom = alpha * alpha + sigma * sigma;
                    weight_sin.push(alpha / denom);
                    weight_cos.push(-sigma / denom);
                }
                let mut r_pows = Vec::with_capacity(l + 1);
                let mut p = Complex64::new(1.0, 0.0);
                for _ in 0..=l {
                    r_pows.push(p);
                    p *= r;
                    if p.norm_sqr() < 1e-280 {
                        p = Complex64::default();
                    }
                }
                let mut k_denom = Complex64::default();
                for (j, rj) in r_pows.iter().enumerate() {
                    let w = if j == 0 || j == l { 0.5 } else { 1.0 };
                    k_denom += w * rj * rj;
                }
                Arc::new(ModeTables {
                    phase_fwd,
                    phase_bwd,
                    weight_sin,
                    weight_cos,
                    r_pows,
                    k_denom,
                })
            })
            .clone()
    }

    /// One impedance-bounded marching step on `col` with the surface at
    /// grid index `ground`.
    pub fn step(&mut self, col: &mut [Complex64], ground: usize, k0: f64, dz: f64, backward: bool) {
        let n = col.len();
        let l = n - ground - 1; // interior grid j = 0..=l, j = 0 at the surface
        debug_assert!(l >= 8, "ground too close to the domain top");
        let tables = self.tables(l, k0, dz);
        let (alpha, h) = (self.alpha, self.h);

        // auxiliary difference field on interior nodes
        let p = &col[ground..];
        let mut w = vec![Complex64::default(); 2 * l];
        for j in 1..l {
            let v = (p[j + 1] - p[j - 1]) / (2.0 * h) + alpha * p[j];
            w[j] = v;
            w[2 * l - j] = -v;
        }
        // surface-term extraction with half-weighted end sums
        let mut k_num = Complex64::default();
        for (j, rj) in tables.r_pows.iter().enumerate() {
            let wgt = if j == 0 || j == l { 0.5 } else { 1.0 };
            k_num += wgt * rj * p[j];
        }
        let mut k_surf = k_num / tables.k_denom;

        // sine coefficients of w: W_m = (i/2)·FFT(odd extension)[m]
        let fft = self.planner.plan_fft_forward(2 * l);
        fft.process(&mut w);

        // march and assemble the reconstruction spectrum in place:
        // v[m] = (B_m + iA_m)/2, v[2l−m] = (B_m − iA_m)/2 so that one more
        // FFT evaluates Σ_m A_m sin + B_m cos at every node. The raw odd
        // extension carries −2i·(l/2) per unit mode coefficient, hence i/l.
        let scale = Complex64::new(0.0, 1.0 / l as f64);
        let phases = if backward {
            &tables.phase_bwd
        } else {
            &tables.phase_fwd
        };
        k_surf *= if backward { self.surf_bwd } else { self.surf_fwd };
        let mut spec = vec![Complex64::default(); 2 * l];
        for m in 1..l {
            let w_m = scale * w[m] * phases[m];
            let a_m = tables.weight_sin[m] * w_m;
            let b_m = tables.weight_cos[m] * w_m;
            let ia = Complex64::i() * a_m;
            spec[m] = 0.5 * (b_m + ia);
            spec[2 * l - m] = 0.5 * (b_m - ia);
        }
        fft.process(&mut spec);

        for j in 0..=l {
            col[ground + j] = spec[j] + k_surf * tables.r_pows[j];
        }
        for v in col[..ground].iter_mut() {
            *v = Complex64::default();
        }
    }
}
