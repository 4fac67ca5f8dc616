//! Optical phase estimation via homodyne detection with saturating
//! photodetectors.
//!
//! The crate is organised bottom-up:
//!
//! - [`optics`]: coherent fields, 50/50 beam-splitter mixing and the ideal
//!   quadrature signal.
//! - [`detector`]: the saturating detector response, its closed-form
//!   Poisson average, the inverse map from current to photon number and the
//!   exact moments of the compound Poisson–Gaussian electron count.
//! - [`estimation`]: linear and nonlinear phase extraction, the error ratio
//!   and error-propagation precision.
//! - [`montecarlo`]: seeded shot-by-shot simulation used to validate the
//!   closed forms.

pub mod detector;
mod error;
pub mod estimation;
pub mod montecarlo;
pub mod optics;

pub use detector::{DetectorModel, NoiseWidth, Regime, RegimeThresholds};
pub use error::{Error, Result};
pub use estimation::{EstimateReport, HomodyneSetup, MeasurementRecord, Protocol};
pub use montecarlo::{EnsembleSpec, EnsembleStats, ShotSample};
pub use optics::{CoherentField, MixedPair};

/// Elementary charge in coulombs (exact SI value).
pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;
