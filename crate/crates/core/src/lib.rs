//! Uncertainty quantification of radio-wave path loss over irregular terrain.
//!
//! The crate couples a deterministic two-way split-step-Fourier parabolic
//! wave equation solver ([`pwe`]) with polynomial chaos surrogates built on
//! Beta-distributed antenna parameters ([`stochastic`], [`pce`]). The
//! adaptive variant ([`apce`]) grows the polynomial basis toward directions
//! of large variance contribution under a composite termination criterion,
//! and [`uqstats`] extracts mean / percentile statistics and compares them
//! against Monte Carlo references.

pub mod apce;
pub mod error;
pub mod pce;
pub mod pwe;
pub mod stochastic;
pub mod terrain;
pub mod uqstats;

pub use error::{Error, Result};
pub use terrain::TerrainProfile;
