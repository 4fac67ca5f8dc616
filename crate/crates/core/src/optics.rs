//! Coherent fields and the lossless 50/50 beam splitter.
//!
//! Local-oscillator convention: the LO amplitude is stored as
//! `beta = |beta| e^{i phi}`. With the mixing rule
//! `out1 = (beta + i alpha)/sqrt(2)`, `out2 = (alpha + i beta)/sqrt(2)`
//! this gives `N2 - N1 = 2 |alpha beta| sin(chi - phi)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_phase(phase: f64) -> f64 {
    if phase > -PI && phase <= PI {
        return phase;
    }
    let wrapped = (phase + PI).rem_euclid(TAU) - PI;
    if wrapped <= -PI {
        wrapped + TAU
    } else {
        wrapped
    }
}

/// Single-mode coherent field `|magnitude| e^{i phase}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentField {
    magnitude: f64,
    phase: f64,
}

impl CoherentField {
    pub fn new(magnitude: f64, phase: f64) -> Result<Self> {
        if !(magnitude.is_finite() && magnitude >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "magnitude",
                value: magnitude,
                reason: "must be finite and >= 0",
            });
        }
        if !phase.is_finite() {
            return Err(Error::InvalidParameter {
                name: "phase",
                value: phase,
                reason: "must be finite",
            });
        }
        Ok(Self {
            magnitude,
            phase: normalize_phase(phase),
        })
    }

    /// Builds a field from its mean photon number `|amplitude|^2`.
    pub fn from_photons(mean_photons: f64, phase: f64) -> Result<Self> {
        if !(mean_photons.is_finite() && mean_photons >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "mean_photons",
                value: mean_photons,
                reason: "must be finite and >= 0",
            });
        }
        Self::new(mean_photons.sqrt(), phase)
    }

    pub fn vacuum() -> Self {
        Self {
            magnitude: 0.0,
            phase: 0.0,
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    /// Phase in `(-pi, pi]`.
    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn mean_photons(&self) -> f64 {
        self.magnitude * self.magnitude
    }

    pub fn amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase)
    }
}

/// Output amplitudes of the two beam-splitter ports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedPair {
    pub out1: Complex64,
    pub out2: Complex64,
}

impl MixedPair {
    /// Mean photon number at detector 1.
    pub fn photons1(&self) -> f64 {
        self.out1.norm_sqr()
    }

    /// Mean photon number at detector 2.
    pub fn photons2(&self) -> f64 {
        self.out2.norm_sqr()
    }
}

pub fn mix_on_beam_splitter(signal: &CoherentField, lo: &CoherentField) -> MixedPair {
    let alpha = signal.amplitude();
    let beta = lo.amplitude();
    let i = Complex64::i();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    MixedPair {
        out1: (beta + i * alpha) * scale,
        out2: (alpha + i * beta) * scale,
    }
}

/// `N2 - N1 = 2 |alpha| |beta| sin(chi - phi)`.
pub fn photon_number_difference(signal: &CoherentField, lo: &CoherentField) -> f64 {
    2.0 * signal.magnitude * lo.magnitude * (signal.phase - lo.phase).sin()
}

/// Expectation of the quadrature `X_phi` in the signal state: `|alpha| sin(chi - phi)`.
pub fn quadrature_expectation(signal: &CoherentField, lo_phase: f64) -> f64 {
    signal.magnitude * (signal.phase - lo_phase).sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn rel_diff(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn phase_is_normalized() {
        assert_eq!(CoherentField::new(1.0, -PI).unwrap().phase(), PI);
        assert_eq!(CoherentField::new(1.0, PI).unwrap().phase(), PI);
        let f = CoherentField::new(1.0, 3.0 * PI + 0.25).unwrap();
        assert!((f.phase() - (-PI + 0.25)).abs() < 1e-12);
        assert!(CoherentField::new(-1.0, 0.0).is_err());
        assert!(CoherentField::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn mean_photons_is_magnitude_squared() {
        let f = CoherentField::new(3.0, 0.1).unwrap();
        assert_eq!(f.mean_photons(), 9.0);
    }

    #[test]
    fn vacuum_signal_splits_lo_evenly() {
        let lo = CoherentField::from_photons(1e15, 0.7).unwrap();
        let mixed = mix_on_beam_splitter(&CoherentField::vacuum(), &lo);
        assert!(rel_diff(mixed.photons1(), 5e14) < 1e-12);
        assert!(rel_diff(mixed.photons2(), 5e14) < 1e-12);
    }

    #[test]
    fn maximal_quadrature_difference_at_large_photon_numbers() {
        let signal = CoherentField::from_photons(1e16, FRAC_PI_2).unwrap();
        let lo = CoherentField::from_photons(1e15, 0.0).unwrap();
        let mixed = mix_on_beam_splitter(&signal, &lo);
        let expected = 2.0 * (1e16f64 * 1e15).sqrt();
        assert!(rel_diff(expected, 6.324_555_320_336_759e15) < 1e-15);
        assert!(rel_diff(mixed.photons2() - mixed.photons1(), expected) < 1e-12);
        assert!(rel_diff(photon_number_difference(&signal, &lo), expected) < 1e-12);
    }

    #[test]
    fn in_phase_fields_give_zero_difference() {
        let signal = CoherentField::from_photons(4.0, 0.3).unwrap();
        let lo = CoherentField::from_photons(9.0, 0.3).unwrap();
        assert_eq!(photon_number_difference(&signal, &lo), 0.0);
        let mixed = mix_on_beam_splitter(&signal, &lo);
        assert!((mixed.photons2() - mixed.photons1()).abs() < 1e-12 * 13.0);
    }

    #[test]
    fn photon_number_difference_examples() {
        let one = |phase| CoherentField::new(1.0, phase).unwrap();
        assert!((photon_number_difference(&one(PI / 6.0), &one(0.0)) - 1.0).abs() < 1e-15);

        let signal = CoherentField::from_photons(1e16, 0.01).unwrap();
        let lo = CoherentField::from_photons(1e15, 0.0).unwrap();
        let expected = 2.0 * 1e31f64.sqrt() * 0.01f64.sin();
        assert!(rel_diff(photon_number_difference(&signal, &lo), expected) < 1e-15);
        assert!(rel_diff(expected, 6.3245e13) < 1e-4);

        let a = CoherentField::new(2.0, FRAC_PI_2).unwrap();
        let b = CoherentField::new(3.0, 0.0).unwrap();
        assert!((photon_number_difference(&a, &b) - 12.0).abs() < 1e-14);
    }

    #[test]
    fn quadrature_examples() {
        let f = CoherentField::new(1.0, 0.4).unwrap();
        assert_eq!(quadrature_expectation(&f, 0.4), 0.0);
        let f = CoherentField::from_photons(1e16, 0.01).unwrap();
        let q = quadrature_expectation(&f, 0.0);
        assert!(rel_diff(q, 1e8 * 0.01f64.sin()) < 1e-15);
        assert!(rel_diff(q, 9.99983e5) < 1e-6);
        let f = CoherentField::new(5.0, FRAC_PI_2).unwrap();
        assert!((quadrature_expectation(&f, 0.0) - 5.0).abs() < 1e-15);
    }

    fn field() -> impl Strategy<Value = CoherentField> {
        (-6.0f64..10.0, -10.0f64..10.0)
            .prop_map(|(log_mag, phase)| CoherentField::new(10f64.powf(log_mag), phase).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn beam_splitter_conserves_photons(signal in field(), lo in field()) {
            let m = mix_on_beam_splitter(&signal, &lo);
            let total = signal.mean_photons() + lo.mean_photons();
            prop_assert!(rel_diff(m.photons1() + m.photons2(), total) < 1e-12);
        }

        // Tolerance is relative to the total photon number: N2 - N1 is a
        // difference of two numbers of that size.
        #[test]
        fn closed_form_difference_matches_mixing(signal in field(), lo in field()) {
            let m = mix_on_beam_splitter(&signal, &lo);
            let total = signal.mean_photons() + lo.mean_photons();
            let diff = photon_number_difference(&signal, &lo);
            prop_assert!(((m.photons2() - m.photons1()) - diff).abs() <= 1e-10 * total);
        }
    }

    proptest! {
        #[test]
        fn outputs_are_2pi_periodic(mag in 0.0f64..1e4, chi in -3.0f64..3.0, phi in -3.0f64..3.0) {
            let lo = CoherentField::new(2.0, phi).unwrap();
            let s0 = CoherentField::new(mag, chi).unwrap();
            let s1 = CoherentField::new(mag, chi + TAU).unwrap();
            let d0 = photon_number_difference(&s0, &lo);
            let d1 = photon_number_difference(&s1, &lo);
            prop_assert!((d0 - d1).abs() <= 1e-12 * mag.max(1.0) * 2.0);
            let q0 = quadrature_expectation(&s0, phi);
            let q1 = quadrature_expectation(&s1, phi);
            prop_assert!((q0 - q1).abs() <= 1e-12 * mag.max(1.0));
        }

        #[test]
        fn difference_is_antisymmetric(mag in 0.0f64..1e4, lo_mag in 0.0f64..1e4, offset in -1.5f64..1.5) {
            let lo = CoherentField::new(lo_mag, 0.0).unwrap();
            let plus = photon_number_difference(&CoherentField::new(mag, offset).unwrap(), &lo);
            let minus = photon_number_difference(&CoherentField::new(mag, -offset).unwrap(), &lo);
            prop_assert_eq!(plus, -minus);
        }
    }
}
