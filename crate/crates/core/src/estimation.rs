//! Phase extraction from the two detector currents.
//!
//! Two protocols are provided. The linear protocol takes the current
//! difference as proportional to the photon-number difference, which holds
//! only well below saturation. The nonlinear protocol inverts the saturating
//! mean-current law at each detector and uses
//! `F(I2) - F(I1) = N2 - N1 = 2 |alpha beta| sin(chi - phi)`.
//!
//! Estimates use the principal `asin` branch and lie in
//! `[phi - pi/2, phi + pi/2]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detector::{DetectorModel, Regime};
use crate::optics::{mix_on_beam_splitter, normalize_phase, CoherentField};
use crate::{Error, Result};

/// Below this `|cos(chi - phi)|` the propagated precision is treated as divergent.
const COS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Linear,
    Nonlinear,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Linear => "linear",
            Protocol::Nonlinear => "nonlinear",
        })
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Protocol::Linear),
            "nonlinear" => Ok(Protocol::Nonlinear),
            other => Err(format!("unknown protocol `{other}` (expected linear|nonlinear)")),
        }
    }
}

/// Signal, local oscillator and the two detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneSetup {
    signal: CoherentField,
    lo: CoherentField,
    det1: DetectorModel,
    det2: DetectorModel,
}

impl HomodyneSetup {
    pub fn new(
        signal: CoherentField,
        lo: CoherentField,
        det1: DetectorModel,
        det2: DetectorModel,
    ) -> Result<Self> {
        if lo.magnitude() <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "lo.magnitude",
                value: lo.magnitude(),
                reason: "homodyne detection needs a non-vacuum local oscillator",
            });
        }
        Ok(Self {
            signal,
            lo,
            det1,
            det2,
        })
    }

    /// Setup with two copies of the same detector.
    pub fn symmetric(signal: CoherentField, lo: CoherentField, det: DetectorModel) -> Result<Self> {
        Self::new(signal, lo, det, det)
    }

    pub fn signal(&self) -> &CoherentField {
        &self.signal
    }

    pub fn lo(&self) -> &CoherentField {
        &self.lo
    }

    pub fn det1(&self) -> &DetectorModel {
        &self.det1
    }

    pub fn det2(&self) -> &DetectorModel {
        &self.det2
    }

    /// Same setup with a different local oscillator. The LO must be non-vacuum.
    pub fn with_lo(&self, lo: CoherentField) -> Self {
        assert!(lo.magnitude() > 0.0, "local oscillator must be non-vacuum");
        Self { lo, ..*self }
    }

    /// Same setup with a different signal field.
    pub fn with_signal(&self, signal: CoherentField) -> Self {
        Self { signal, ..*self }
    }

    /// Mean photon numbers `(N1, N2)` arriving at the detectors.
    pub fn mean_photons(&self) -> (f64, f64) {
        let mixed = mix_on_beam_splitter(&self.signal, &self.lo);
        (mixed.photons1(), mixed.photons2())
    }

    /// True `chi - phi`, wrapped into `(-pi, pi]`.
    pub fn phase_offset(&self) -> f64 {
        normalize_phase(self.signal.phase() - self.lo.phase())
    }

    fn identical_detectors(&self) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        close(self.det1.i_max(), self.det2.i_max())
            && close(self.det1.n_sat_eff(), self.det2.n_sat_eff())
    }
}

/// Currents at the two detectors, averaged over `shots` repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub current1: f64,
    pub current2: f64,
    pub shots: u64,
}

impl MeasurementRecord {
    pub fn new(current1: f64, current2: f64, shots: u64) -> Result<Self> {
        for (name, value) in [("current1", current1), ("current2", current2)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "ensemble-mean currents must be finite and >= 0",
                });
            }
        }
        if shots == 0 {
            return Err(Error::InvalidParameter {
                name: "shots",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        Ok(Self {
            current1,
            current2,
            shots,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub phase_estimate: f64,
    /// Propagated one-sigma precision; `None` where `cos(chi~ - phi)` vanishes
    /// or a current cannot be inverted.
    pub precision: Option<f64>,
    pub regime1: Regime,
    pub regime2: Regime,
    pub protocol: Protocol,
    /// The `asin` argument fell outside `[-1, 1]` and was clamped.
    pub clamped: bool,
}

/// Noiseless ensemble-mean currents of the forward model.
pub fn forward_currents(setup: &HomodyneSetup) -> MeasurementRecord {
    let (n1, n2) = setup.mean_photons();
    let current = |det: &DetectorModel, n: f64| {
        det.mean_current(n)
            .expect("beam-splitter outputs are non-negative photon numbers")
    };
    MeasurementRecord {
        current1: current(&setup.det1, n1),
        current2: current(&setup.det2, n2),
        shots: 1,
    }
}

fn clamped_asin(arg: f64) -> (f64, bool) {
    if arg > 1.0 {
        (std::f64::consts::FRAC_PI_2, true)
    } else if arg < -1.0 {
        (-std::f64::consts::FRAC_PI_2, true)
    } else {
        (arg.asin(), false)
    }
}

fn regime_from_current(det: &DetectorModel, current: f64) -> Regime {
    if current <= 0.0 {
        return Regime::Linear;
    }
    match det.invert_current(current) {
        Ok(n) => det.classify_regime(n),
        Err(_) => Regime::Oversaturated,
    }
}

fn require_signal(setup: &HomodyneSetup) -> Result<(f64, f64)> {
    let alpha = setup.signal.magnitude();
    if alpha == 0.0 {
        return Err(Error::DegenerateSignal);
    }
    Ok((alpha, setup.lo.magnitude()))
}

/// Electron-count variance of one shot, converted to current variance and
/// divided by the number of averaged shots.
fn record_current_variance(det: &DetectorModel, current: f64, shots: u64) -> f64 {
    let electrons = current * det.tau_w() / crate::ELECTRON_CHARGE;
    let sigma = det.noise().sigma_at(electrons);
    det.current_variance(sigma * sigma) / shots as f64
}

/// Linear-response estimate: `chi~ = phi + asin((I2 - I1) / (2 |beta| r |alpha|))`
/// with detector 1's gain `r`.
pub fn estimate_phase_linear(
    record: &MeasurementRecord,
    setup: &HomodyneSetup,
) -> Result<EstimateReport> {
    linear_from_currents(record.current1, record.current2, record.shots, setup)
}

pub(crate) fn linear_from_currents(
    current1: f64,
    current2: f64,
    shots: u64,
    setup: &HomodyneSetup,
) -> Result<EstimateReport> {
    let (alpha, beta) = require_signal(setup)?;
    let gain = setup.det1.linear_gain();
    let quadrature = (current2 - current1) / (2.0 * beta * gain);
    let (angle, clamped) = clamped_asin(quadrature / alpha);
    let cos = angle.cos();
    let precision = if cos.abs() > COS_FLOOR {
        let var = record_current_variance(&setup.det1, current1, shots)
            + record_current_variance(&setup.det2, current2, shots);
        Some(var.sqrt() / (2.0 * alpha * beta * gain * cos.abs())).filter(|p| *p > 0.0)
    } else {
        None
    };
    Ok(EstimateReport {
        phase_estimate: setup.lo.phase() + angle,
        precision,
        regime1: regime_from_current(&setup.det1, current1),
        regime2: regime_from_current(&setup.det2, current2),
        protocol: Protocol::Linear,
        clamped,
    })
}

/// Saturation-aware estimate through the inverse current law.
pub fn estimate_phase_nonlinear(
    record: &MeasurementRecord,
    setup: &HomodyneSetup,
) -> Result<EstimateReport> {
    nonlinear_from_currents(record.current1, record.current2, record.shots, setup)
}

pub(crate) fn nonlinear_from_currents(
    current1: f64,
    current2: f64,
    shots: u64,
    setup: &HomodyneSetup,
) -> Result<EstimateReport> {
    let (alpha, beta) = require_signal(setup)?;
    let n1 = setup.det1.invert_current(current1)?;
    let n2 = setup.det2.invert_current(current2)?;
    let (angle, clamped) = clamped_asin((n2 - n1) / (2.0 * alpha * beta));
    let var1 = record_current_variance(&setup.det1, current1, shots);
    let var2 = record_current_variance(&setup.det2, current2, shots);
    let precision = propagate(setup, current1, current2, var1, var2, angle.cos())
        .ok()
        .filter(|p| *p > 0.0);
    Ok(EstimateReport {
        phase_estimate: setup.lo.phase() + angle,
        precision,
        regime1: setup.det1.classify_regime(n1),
        regime2: setup.det2.classify_regime(n2),
        protocol: Protocol::Nonlinear,
        clamped,
    })
}

pub fn estimate_phase(
    record: &MeasurementRecord,
    setup: &HomodyneSetup,
    protocol: Protocol,
) -> Result<EstimateReport> {
    match protocol {
        Protocol::Linear => estimate_phase_linear(record, setup),
        Protocol::Nonlinear => estimate_phase_nonlinear(record, setup),
    }
}

/// `|chi~ - chi| / |chi|` for a noiseless forward-model record.
pub fn error_ratio(setup: &HomodyneSetup, protocol: Protocol) -> Result<f64> {
    let chi = setup.signal.phase();
    if chi == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    let report = estimate_phase(&forward_currents(setup), setup, protocol)?;
    Ok(normalize_phase(report.phase_estimate - chi).abs() / chi.abs())
}

/// Error propagation through `F(I2) - F(I1)`:
/// `sqrt(sum_j (dF/dI_j)^2 var_j) / (2 |alpha beta cos|)`.
fn propagate(
    setup: &HomodyneSetup,
    current1: f64,
    current2: f64,
    var1: f64,
    var2: f64,
    cos: f64,
) -> Result<f64> {
    let (alpha, beta) = require_signal(setup)?;
    if cos.abs() <= COS_FLOOR {
        return Err(Error::DivergentPrecision {
            offset: cos.acos(),
        });
    }
    let slope1 = setup.det1.inverse_slope(current1)?;
    let slope2 = setup.det2.inverse_slope(current2)?;
    let spread = (slope1 * slope1 * var1 + slope2 * slope2 * var2).sqrt();
    Ok(spread / (2.0 * alpha * beta * cos.abs()))
}

fn check_variance(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "variance must be finite and >= 0",
        })
    }
}

fn true_cos(setup: &HomodyneSetup) -> Result<f64> {
    let offset = setup.phase_offset();
    let cos = offset.cos();
    if cos.abs() <= COS_FLOOR {
        Err(Error::DivergentPrecision { offset })
    } else {
        Ok(cos)
    }
}

/// Phase precision for arbitrary per-detector current variances (amperes²),
/// evaluated at the forward-model currents.
pub fn general_precision(setup: &HomodyneSetup, var1: f64, var2: f64) -> Result<f64> {
    check_variance("var1", var1)?;
    check_variance("var2", var2)?;
    let cos = true_cos(setup)?;
    let record = forward_currents(setup);
    propagate(setup, record.current1, record.current2, var1, var2, cos)
}

/// Closed-form precision for identical detectors with electronic noise
/// `sigma` (electrons), averaged over `shots` repetitions:
///
/// `e sigma N_sat_eff / (2 tau_w |alpha beta cos(chi - phi)|) * sqrt(D1^2 + D2^2) / sqrt(M)`
/// with `D_j = 1 / (I_max - I_j)`.
pub fn analytic_precision(setup: &HomodyneSetup, sigma: f64, shots: u64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma",
            value: sigma,
            reason: "must be finite and > 0",
        });
    }
    if shots == 0 {
        return Err(Error::InvalidParameter {
            name: "shots",
            value: 0.0,
            reason: "must be >= 1",
        });
    }
    if !setup.identical_detectors() {
        return Err(Error::InvalidParameter {
            name: "det2",
            value: setup.det2.i_max(),
            reason: "closed-form precision assumes identical detectors; use general_precision",
        });
    }
    let (alpha, beta) = require_signal(setup)?;
    let cos = true_cos(setup)?;
    let det = &setup.det1;
    let record = forward_currents(setup);
    for current in [record.current1, record.current2] {
        det.inverse_slope(current)?;
    }
    let d1 = 1.0 / (det.i_max() - record.current1);
    let d2 = 1.0 / (det.i_max() - record.current2);
    let prefactor = crate::ELECTRON_CHARGE * sigma * det.n_sat_eff()
        / (2.0 * det.tau_w() * (alpha * beta * cos).abs());
    Ok(prefactor * d1.hypot(d2) / (shots as f64).sqrt())
}
