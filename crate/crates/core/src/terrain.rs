//! Terrain profiles: piecewise-linear range→elevation functions.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Piecewise-linear terrain profile defining the lower domain boundary.
///
/// Evaluation between points is linear; beyond the last point the elevation
/// is held constant. Ranges must start at zero and increase strictly.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainProfile {
    points: Vec<(f64, f64)>,
    pub name: String,
}

impl TerrainProfile {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::terrain("a terrain profile needs at least 2 points"));
        }
        if points[0].0 != 0.0 {
            return Err(Error::terrain(format!(
                "first terrain range must be 0, got {}",
                points[0].0
            )));
        }
        for pair in points.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return Err(Error::terrain(format!(
                    "terrain ranges must increase strictly ({} then {})",
                    pair[0].0, pair[1].0
                )));
            }
        }
        if points.iter().any(|&(r, e)| !r.is_finite() || !e.is_finite()) {
            return Err(Error::terrain("non-finite terrain coordinate"));
        }
        Ok(Self {
            points,
            name: name.into(),
        })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Elevation at an arbitrary range, in metres.
    pub fn elevation_at(&self, range_m: f64) -> f64 {
        let pts = &self.points;
        if range_m <= pts[0].0 {
            return pts[0].1;
        }
        if range_m >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        // partition_point finds the first point strictly beyond range_m
        let hi = pts.partition_point(|&(r, _)| r <= range_m);
        let (r0, e0) = pts[hi - 1];
        let (r1, e1) = pts[hi];
        e0 + (e1 - e0) * (range_m - r0) / (r1 - r0)
    }

    pub fn max_elevation(&self) -> f64 {
        self.points.iter().map(|&(_, e)| e).fold(f64::MIN, f64::max)
    }

    /// Flat profile at a constant elevation.
    pub fn flat(length_m: f64, elevation_m: f64) -> Self {
        Self::new("flat", vec![(0.0, elevation_m), (length_m, elevation_m)])
            .expect("flat profile is always valid")
    }

    /// Triangular wedge: rises linearly to `peak_m` at `apex_range_m`, then
    /// falls back to zero at `length_m`.
    pub fn wedge(length_m: f64, apex_range_m: f64, peak_m: f64) -> Self {
        Self::new(
            "wedge",
            vec![(0.0, 0.0), (apex_range_m, peak_m), (length_m, 0.0)],
        )
        .expect("wedge profile is always valid")
    }

    /// Two smooth hills of the given peak heights, spanning `length_m`.
    pub fn double_hill(length_m: f64, peak1_m: f64, peak2_m: f64) -> Self {
        let n = 81;
        let c1 = 0.35 * length_m;
        let c2 = 0.7 * length_m;
        let w1 = 0.10 * length_m;
        let w2 = 0.12 * length_m;
        let pts = (0..n)
            .map(|i| {
                let r = length_m * i as f64 / (n - 1) as f64;
                let e = peak1_m * (-((r - c1) / w1).powi(2)).exp()
                    + peak2_m * (-((r - c2) / w2).powi(2)).exp();
                (r, e)
            })
            .collect();
        Self::new("double_hill", pts).expect("double hill profile is always valid")
    }

    /// Random smooth profile from seeded spectral synthesis: a sum of a few
    /// long-wavelength harmonics with random phases, clipped at zero.
    pub fn random_smooth(length_m: f64, rms_m: f64, seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let n_modes = 6;
        let modes: Vec<(f64, f64, f64)> = (1..=n_modes)
            .map(|k| {
                let amp = rms_m / (k as f64).sqrt();
                let phase = rng.gen::<f64>() * std::f64::consts::TAU;
                (k as f64, amp, phase)
            })
            .collect();
        let n = 121;
        let pts = (0..n)
            .map(|i| {
                let r = length_m * i as f64 / (n - 1) as f64;
                let mut e = 0.0;
                for &(k, amp, phase) in &modes {
                    e += amp * (std::f64::consts::TAU * k * r / length_m + phase).sin();
                }
                (r, (e + rms_m).max(0.0))
            })
            .collect();
        Self::new(format!("random_smooth_{seed}"), pts)
            .expect("random smooth profile is always valid")
    }

    /// Read a terrain CSV with header `range_m,elevation_m` (LF or CRLF).
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "terrain".to_string());
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Format {
                what: "terrain CSV",
                detail: "empty file".into(),
            })?;
        if header.trim() != "range_m,elevation_m" {
            return Err(Error::Format {
                what: "terrain CSV",
                detail: format!("expected header `range_m,elevation_m`, got `{}`", header.trim()),
            });
        }
        let mut points = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split(',');
            let parse = |field: Option<&str>| -> Result<f64> {
                field
                    .ok_or(())
                    .and_then(|f| f.trim().parse::<f64>().map_err(|_| ()))
                    .map_err(|_| Error::Format {
                        what: "terrain CSV",
                        detail: format!("bad row at line {}: `{line}`", lineno + 2),
                    })
            };
            let r = parse(cols.next())?;
            let e = parse(cols.next())?;
            points.push((r, e));
        }
        Self::new(name, points)
    }

    /// Write the profile as CSV with header `range_m,elevation_m`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        writeln!(file, "range_m,elevation_m")?;
        for &(r, e) in &self.points {
            writeln!(file, "{},{}", fmt_sig9(r), fmt_sig9(e))?;
        }
        Ok(())
    }
}

/// Format a float with 9 significant digits.
pub(crate) fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-3..9).contains(&mag) {
        let decimals = (8 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.8e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_linearly_and_extrapolates_flat() {
        let t = TerrainProfile::new("t", vec![(0.0, 10.0), (100.0, 30.0), (200.0, 0.0)]).unwrap();
        assert_eq!(t.elevation_at(0.0), 10.0);
        assert_eq!(t.elevation_at(50.0), 20.0);
        assert_eq!(t.elevation_at(150.0), 15.0);
        assert_eq!(t.elevation_at(500.0), 0.0);
        assert_eq!(t.elevation_at(-5.0), 10.0);
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(TerrainProfile::new("t", vec![(0.0, 1.0)]).is_err());
        assert!(TerrainProfile::new("t", vec![(1.0, 1.0), (2.0, 1.0)]).is_err());
        assert!(TerrainProfile::new("t", vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wedge.csv");
        let t = TerrainProfile::wedge(2000.0, 1000.0, 40.0);
        t.write_csv(&path).unwrap();
        let back = TerrainProfile::read_csv(&path).unwrap();
        assert_eq!(back.points().len(), t.points().len());
        for (a, b) in back.points().iter().zip(t.points()) {
            assert!((a.0 - b.0).abs() < 1e-6 && (a.1 - b.1).abs() < 1e-6);
        }
    }

    #[test]
    fn csv_accepts_crlf() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "range_m,elevation_m\r\n0,5\r\n100,7\r\n").unwrap();
        let t = TerrainProfile::read_csv(&path).unwrap();
        assert_eq!(t.points(), &[(0.0, 5.0), (100.0, 7.0)]);
    }

    #[test]
    fn random_smooth_is_seed_deterministic() {
        let a = TerrainProfile::random_smooth(5000.0, 15.0, 42);
        let b = TerrainProfile::random_smooth(5000.0, 15.0, 42);
        assert_eq!(a, b);
        let c = TerrainProfile::random_smooth(5000.0, 15.0, 43);
        assert_ne!(a, c);
    }
}
