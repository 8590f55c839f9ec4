//! Bounded Beta-distributed random inputs, the orthonormal polynomial
//! families matched to them, and Latin hypercube sampling.

mod beta;
mod jacobi;
mod lhs;

pub use beta::{beta_cdf, beta_inverse_cdf, beta_pdf};
pub use jacobi::{jacobi_orthonormal_eval, orthonormality_defect, GaussJacobiRule};
pub use lhs::lhs_sample;

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One uncertain scalar input: a Beta(alpha, beta) shape pair on a bounded
/// support interval.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomInputSpec {
    pub name: String,
    pub alpha: f64,
    pub beta: f64,
    pub lower: f64,
    pub upper: f64,
    pub unit: String,
}

impl RandomInputSpec {
    pub fn new(
        name: impl Into<String>,
        alpha: f64,
        beta: f64,
        lower: f64,
        upper: f64,
        unit: impl Into<String>,
    ) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(Error::config(format!(
                "Beta shape parameters must be positive, got ({alpha}, {beta})"
            )));
        }
        if !(upper > lower) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::config(format!(
                "support interval must satisfy lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(Self {
            name: name.into(),
            alpha,
            beta,
            lower,
            upper,
            unit: unit.into(),
        })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn mean(&self) -> f64 {
        self.lower + self.width() * self.alpha / (self.alpha + self.beta)
    }

    /// Jacobi weight exponents (a, b) on [−1, 1] matching this Beta input.
    pub(crate) fn jacobi_exponents(&self) -> (f64, f64) {
        (self.beta - 1.0, self.alpha - 1.0)
    }
}

/// Ordered collection of independent random inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSpace {
    inputs: Vec<RandomInputSpec>,
}

impl InputSpace {
    /// Validates name uniqueness and checks each input's polynomial family
    /// for orthonormality under a 64-node Gauss–Jacobi rule.
    pub fn new(inputs: Vec<RandomInputSpec>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::config("input space needs at least one input"));
        }
        for (i, a) in inputs.iter().enumerate() {
            for b in inputs.iter().skip(i + 1) {
                if a.name == b.name {
                    return Err(Error::config(format!("duplicate input name `{}`", a.name)));
                }
            }
        }
        for spec in &inputs {
            let defect = orthonormality_defect(spec, 8, 64);
            if defect > 1e-9 {
                return Err(Error::config(format!(
                    "orthonormality check failed for input `{}`: Gram defect {defect:.3e}",
                    spec.name
                )));
            }
        }
        Ok(Self { inputs })
    }

    pub fn dim(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[RandomInputSpec] {
        &self.inputs
    }

    pub fn input(&self, i: usize) -> &RandomInputSpec {
        &self.inputs[i]
    }

    /// Stable content hash of the space definition (16 hex digits).
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for s in &self.inputs {
            hasher.update(
                format!(
                    "{}|{:.17e}|{:.17e}|{:.17e}|{:.17e}|{}\n",
                    s.name, s.alpha, s.beta, s.lower, s.upper, s.unit
                )
                .as_bytes(),
            );
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Product of univariate orthonormal evaluations, one factor per dimension.
///
/// `orders` and `xi` must both have the space's dimension.
pub fn multivariate_basis_eval(orders: &[u32], xi: &[f64], space: &InputSpace) -> f64 {
    assert_eq!(
        orders.len(),
        space.dim(),
        "multi-index length {} does not match input dimension {}",
        orders.len(),
        space.dim()
    );
    assert_eq!(xi.len(), space.dim(), "sample point dimension mismatch");
    orders
        .iter()
        .zip(xi)
        .zip(space.inputs())
        .map(|((&k, &x), spec)| jacobi_orthonormal_eval(k as usize, x, spec))
        .product()
}

/// Input realizations paired with their QoI evaluations.
#[derive(Debug, Clone)]
pub struct SampleSet {
    /// N_s × N_d input matrix, physical units.
    pub xi: Array2<f64>,
    /// N_s × N_q QoI matrix.
    pub q: Array2<f64>,
    /// Seed of the design that produced `xi`.
    pub seed: u64,
}

impl SampleSet {
    pub fn new(xi: Array2<f64>, q: Array2<f64>, seed: u64) -> Result<Self> {
        if xi.nrows() != q.nrows() {
            return Err(Error::config(format!(
                "sample/QoI row mismatch: {} vs {}",
                xi.nrows(),
                q.nrows()
            )));
        }
        Ok(Self { xi, q, seed })
    }

    pub fn n_samples(&self) -> usize {
        self.xi.nrows()
    }

    /// Write `xi_1..xi_Nd,q_1..q_Nq` rows with full-precision floats.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        let header: Vec<String> = (1..=self.xi.ncols())
            .map(|i| format!("xi_{i}"))
            .chain((1..=self.q.ncols()).map(|i| format!("q_{i}")))
            .collect();
        writeln!(f, "{}", header.join(","))?;
        for i in 0..self.n_samples() {
            let row: Vec<String> = self
                .xi
                .row(i)
                .iter()
                .chain(self.q.row(i).iter())
                .map(|v| format!("{v:.17e}"))
                .collect();
            writeln!(f, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>, n_dims: usize, seed: u64) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        let header = lines.next().transpose()?.ok_or(Error::Format {
            what: "sample CSV",
            detail: "empty file".into(),
        })?;
        let n_cols = header.trim().split(',').count();
        if n_cols <= n_dims {
            return Err(Error::Format {
                what: "sample CSV",
                detail: format!("{n_cols} columns cannot hold {n_dims} inputs plus QoIs"),
            });
        }
        let n_q = n_cols - n_dims;
        let mut xi_rows: Vec<f64> = Vec::new();
        let mut q_rows: Vec<f64> = Vec::new();
        let mut n_rows = 0;
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format {
                    what: "sample CSV",
                    detail: format!("line {}: {e}", lineno + 2),
                })?;
            if vals.len() != n_cols {
                return Err(Error::Format {
                    what: "sample CSV",
                    detail: format!("line {}: expected {n_cols} columns", lineno + 2),
                });
            }
            xi_rows.extend_from_slice(&vals[..n_dims]);
            q_rows.extend_from_slice(&vals[n_dims..]);
            n_rows += 1;
        }
        let xi = Array2::from_shape_vec((n_rows, n_dims), xi_rows)
            .expect("row-major sample layout");
        let q = Array2::from_shape_vec((n_rows, n_q), q_rows).expect("row-major QoI layout");
        Self::new(xi, q, seed)
    }
}
