//! Saturating photodetector model.
//!
//! For `n` incident photons the photoelectron count is Gaussian around
//! `mu(n) = k_max (1 - exp(-n / N_sat))`. Averaging `mu` over a Poisson photon
//! number with mean `N` gives the same exponential form with an effective
//! threshold `N_sat_eff = 1 / (1 - exp(-1 / N_sat))`, so the mean current is
//! `I_max (1 - exp(-N / N_sat_eff))` with `I_max = e k_max / tau_w`.
//!
//! Every `1 - exp(-x)` and `ln(1 - y)` goes through `expm1` / `ln_1p`. At
//! `N_sat = 1e17`, `1 / N_sat` is far below machine epsilon relative to one.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, ELECTRON_CHARGE};

/// Relative headroom below `I_max` required before a current is inverted.
pub const OVERSATURATION_GUARD: f64 = 1e-12;

/// Width of the conditional Gaussian electron distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum NoiseWidth {
    /// `sigma` independent of the photon number.
    Constant(f64),
    /// `sigma(n) = c * sqrt(mu(n))`.
    ShotScaled(f64),
}

impl NoiseWidth {
    /// Small electronic-noise floor `sqrt(0.01 k_max)` used when nothing is configured.
    pub fn default_for(k_max: f64) -> Self {
        NoiseWidth::Constant((k_max * 0.01).sqrt())
    }

    pub fn value(&self) -> f64 {
        match *self {
            NoiseWidth::Constant(v) | NoiseWidth::ShotScaled(v) => v,
        }
    }

    /// Standard deviation of the electron count given its conditional mean.
    pub fn sigma_at(&self, mean_electrons: f64) -> f64 {
        match *self {
            NoiseWidth::Constant(sigma) => sigma,
            NoiseWidth::ShotScaled(c) => c * mean_electrons.max(0.0).sqrt(),
        }
    }
}

/// Photon-number / `N_sat` ratios separating the response regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    pub linear: f64,
    pub oversaturated: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            linear: 0.05,
            oversaturated: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Linear,
    Nonlinear,
    Oversaturated,
}

/// Mean and variance of the photoelectron count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectronMoments {
    pub mean: f64,
    pub variance: f64,
}

/// `1/(1 - e^{-x}) - 1/x`, the offset of the effective threshold in units of
/// the threshold itself when `x = 1/N_sat`.
fn inverse_one_minus_exp_excess(x: f64) -> f64 {
    if x < 1e-2 {
        let x2 = x * x;
        0.5 + x / 12.0 * (1.0 - x2 / 60.0 * (1.0 - x2 / 42.0))
    } else {
        1.0 / -(-x).exp_m1() - 1.0 / x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    k_max: f64,
    n_sat: f64,
    noise: NoiseWidth,
    tau_w: f64,
    thresholds: RegimeThresholds,
    i_max: f64,
    n_sat_eff: f64,
    n_sat_excess: f64,
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

fn non_negative(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}

impl DetectorModel {
    pub fn new(k_max: f64, n_sat: f64, noise: NoiseWidth, tau_w: f64) -> Result<Self> {
        positive("k_max", k_max)?;
        positive("n_sat", n_sat)?;
        positive("tau_w", tau_w)?;
        let width = noise.value();
        if !(width.is_finite() && width >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: width,
                reason: "must be finite and >= 0",
            });
        }
        let n_sat_excess = inverse_one_minus_exp_excess(1.0 / n_sat);
        Ok(Self {
            k_max,
            n_sat,
            noise,
            tau_w,
            thresholds: RegimeThresholds::default(),
            i_max: ELECTRON_CHARGE * k_max / tau_w,
            n_sat_eff: n_sat + n_sat_excess,
            n_sat_excess,
        })
    }

    pub fn with_thresholds(mut self, thresholds: RegimeThresholds) -> Result<Self> {
        positive("theta_lin", thresholds.linear)?;
        positive("theta_over", thresholds.oversaturated)?;
        if thresholds.linear >= thresholds.oversaturated {
            return Err(Error::InvalidParameter {
                name: "theta_lin",
                value: thresholds.linear,
                reason: "must be below theta_over",
            });
        }
        self.thresholds = thresholds;
        Ok(self)
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn n_sat(&self) -> f64 {
        self.n_sat
    }

    pub fn noise(&self) -> NoiseWidth {
        self.noise
    }

    pub fn tau_w(&self) -> f64 {
        self.tau_w
    }

    pub fn thresholds(&self) -> RegimeThresholds {
        self.thresholds
    }

    /// Saturation current `e k_max / tau_w` in amperes.
    pub fn i_max(&self) -> f64 {
        self.i_max
    }

    /// Effective threshold `1 / (1 - exp(-1/N_sat))`.
    pub fn n_sat_eff(&self) -> f64 {
        self.n_sat_eff
    }

    /// `N_sat_eff - N_sat`, evaluated without cancellation. Approaches 1/2 for
    /// large thresholds, where it is not resolvable from `n_sat_eff()` alone.
    pub fn n_sat_excess(&self) -> f64 {
        self.n_sat_excess
    }

    /// Opto-electric conversion `r = e (k_max / N_sat) / tau_w` in the linear regime.
    pub fn linear_gain(&self) -> f64 {
        ELECTRON_CHARGE * (self.k_max / self.n_sat) / self.tau_w
    }

    /// Current produced by `electrons` photoelectrons in one response window.
    pub fn electrons_to_current(&self, electrons: f64) -> f64 {
        ELECTRON_CHARGE * electrons / self.tau_w
    }

    /// Converts an electron-count variance into a current variance.
    pub fn current_variance(&self, electron_variance: f64) -> f64 {
        let scale = ELECTRON_CHARGE / self.tau_w;
        scale * scale * electron_variance
    }

    /// Conditional mean photoelectron count for `n` photons.
    pub fn mean_electrons(&self, n: f64) -> Result<f64> {
        non_negative("photon number", n)?;
        Ok(self.mean_electrons_unchecked(n))
    }

    pub(crate) fn mean_electrons_unchecked(&self, n: f64) -> f64 {
        self.k_max * -(-n / self.n_sat).exp_m1()
    }

    /// Poisson-averaged current for a coherent input with `mean_photons`.
    pub fn mean_current(&self, mean_photons: f64) -> Result<f64> {
        non_negative("mean photon number", mean_photons)?;
        Ok(self.i_max * -(-mean_photons / self.n_sat_eff).exp_m1())
    }

    /// Current predicted by a detector that never saturates.
    pub fn linear_current(&self, mean_photons: f64) -> Result<f64> {
        non_negative("mean photon number", mean_photons)?;
        Ok(self.linear_gain() * mean_photons)
    }

    /// Inverse of [`mean_current`](Self::mean_current): the mean photon number
    /// behind an ensemble-mean current.
    pub fn invert_current(&self, current: f64) -> Result<f64> {
        non_negative("current", current)?;
        self.check_invertible(current)?;
        Ok(-self.n_sat_eff * (-current / self.i_max).ln_1p())
    }

    /// Derivative of the inverse map, `N_sat_eff / (I_max - I)`.
    pub fn inverse_slope(&self, current: f64) -> Result<f64> {
        non_negative("current", current)?;
        self.check_invertible(current)?;
        Ok(self.n_sat_eff / (self.i_max - current))
    }

    fn check_invertible(&self, current: f64) -> Result<()> {
        if current >= self.i_max * (1.0 - OVERSATURATION_GUARD) {
            Err(Error::Oversaturated {
                current,
                i_max: self.i_max,
            })
        } else {
            Ok(())
        }
    }

    /// Variance of `mu(n)` under Poisson photon statistics:
    /// `k_max^2 [exp(-N(1 - u^2)) - exp(-2N(1 - u))]` with `u = exp(-1/N_sat)`,
    /// rewritten as `k_max^2 exp(-2N(1-u)) expm1(N (1-u)^2)`.
    pub fn photon_noise_variance(&self, mean_photons: f64) -> Result<f64> {
        non_negative("mean photon number", mean_photons)?;
        let one_minus_u = -(-1.0 / self.n_sat).exp_m1();
        let decay = (-2.0 * mean_photons * one_minus_u).exp();
        let spread = (mean_photons * one_minus_u * one_minus_u).exp_m1();
        Ok(self.k_max * self.k_max * decay * spread)
    }

    /// Exact mean and variance of the compound Poisson–Gaussian electron count.
    ///
    /// The variance is the electronic term `E[sigma(n)^2]` plus the photon term
    /// from [`photon_noise_variance`](Self::photon_noise_variance). For
    /// `ShotScaled` noise, `E[sigma(n)^2] = c^2 E[mu(n)]`.
    pub fn exact_electron_moments(&self, mean_photons: f64) -> Result<ElectronMoments> {
        non_negative("mean photon number", mean_photons)?;
        let mean = self.k_max * -(-mean_photons / self.n_sat_eff).exp_m1();
        let electronic = match self.noise {
            NoiseWidth::Constant(sigma) => sigma * sigma,
            NoiseWidth::ShotScaled(c) => c * c * mean,
        };
        Ok(ElectronMoments {
            mean,
            variance: electronic + self.photon_noise_variance(mean_photons)?,
        })
    }

    pub fn classify_regime(&self, mean_photons: f64) -> Regime {
        let ratio = mean_photons / self.n_sat;
        if ratio < self.thresholds.linear {
            Regime::Linear
        } else if ratio < self.thresholds.oversaturated {
            Regime::Nonlinear
        } else {
            Regime::Oversaturated
        }
    }
}
