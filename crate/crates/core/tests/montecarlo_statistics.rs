//! Statistical agreement between the shot sampler and the closed forms.

use homodyne_core::estimation::analytic_precision;
use homodyne_core::montecarlo::{run_ensemble, shot_rng, ShotSampler};
use homodyne_core::{
    CoherentField, DetectorModel, EnsembleSpec, HomodyneSetup, NoiseWidth, Protocol,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn single_detector(k_max: f64, n_sat: f64, sigma: f64, photons_per_detector: f64) -> HomodyneSetup {
    // signal and LO of equal strength in phase quadrature split evenly
    let det = DetectorModel::new(k_max, n_sat, NoiseWidth::Constant(sigma), 1e-4).unwrap();
    HomodyneSetup::symmetric(
        CoherentField::from_photons(photons_per_detector, 0.0).unwrap(),
        CoherentField::from_photons(photons_per_detector, 0.0).unwrap(),
        det,
    )
    .unwrap()
}

struct Sample {
    mean: f64,
    var: f64,
    m4: f64,
    n: f64,
}

fn summarize(xs: &[f64]) -> Sample {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    Sample { mean, var, m4, n }
}

impl Sample {
    fn mean_se(&self) -> f64 {
        (self.var / self.n).sqrt()
    }

    fn var_se(&self) -> f64 {
        ((self.m4 - self.var * self.var) / self.n).sqrt()
    }
}

fn electrons1(setup: &HomodyneSetup, seed: u64, shots: u64) -> Vec<f64> {
    let sampler = ShotSampler::new(setup);
    (0..shots)
        .map(|i| sampler.sample(&mut shot_rng(seed, i)).electrons1)
        .collect()
}

#[test]
fn electron_mean_matches_closed_form_exact_poisson() {
    // N1 = 10 photons at detector 1
    let setup = single_detector(5.0, 50.0, 0.3, 10.0);
    let (n1, _) = setup.mean_photons();
    assert!((n1 - 10.0).abs() < 1e-12);
    let s = summarize(&electrons1(&setup, 1, 1_000_000));
    let exact = setup.det1().exact_electron_moments(n1).unwrap();
    assert!((s.mean - exact.mean).abs() < 3.0 * s.mean_se(), "{} vs {}", s.mean, exact.mean);
}

#[test]
fn gaussian_branch_mean_current_matches_closed_form() {
    let det = DetectorModel::new(1e16, 1e17, NoiseWidth::default_for(1e16), 1e-4).unwrap();
    let setup = HomodyneSetup::symmetric(
        CoherentField::from_photons(1e16, 0.0).unwrap(),
        CoherentField::from_photons(1e16, 0.0).unwrap(),
        det,
    )
    .unwrap();
    let sampler = ShotSampler::new(&setup);
    assert!(sampler.uses_gaussian_approximation());
    let currents: Vec<f64> = (0..100_000)
        .map(|i| sampler.sample(&mut shot_rng(4, i)).current1)
        .collect();
    let s = summarize(&currents);
    let closed = det.mean_current(setup.mean_photons().0).unwrap();
    assert!((s.mean - closed).abs() < 3.0 * s.mean_se(), "{} vs {closed}", s.mean);
}

#[test]
fn ensemble_mean_currents_match_closed_form_for_random_setups() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let n_sat = 10f64.powf(rng.random_range(1.0..4.0));
        let k_max = n_sat * rng.random_range(0.05..2.0);
        let sigma = rng.random_range(0.0..5.0);
        let signal = n_sat * 10f64.powf(rng.random_range(-2.0..0.5));
        let lo = signal * 10f64.powf(rng.random_range(-1.0..1.0));
        let det = DetectorModel::new(k_max, n_sat, NoiseWidth::Constant(sigma), 1e-4).unwrap();
        let setup = HomodyneSetup::symmetric(
            CoherentField::from_photons(signal, rng.random_range(-1.0..1.0)).unwrap(),
            CoherentField::from_photons(lo, 0.0).unwrap(),
            det,
        )
        .unwrap();
        let stats = run_ensemble(&setup, &EnsembleSpec::new(100_000, Protocol::Linear, case)).unwrap();
        let (n1, n2) = setup.mean_photons();
        for (mean, var, n) in [
            (stats.mean_current1, stats.var_current1, n1),
            (stats.mean_current2, stats.var_current2, n2),
        ] {
            let closed = det.mean_current(n).unwrap();
            let se = (var / stats.shots as f64).sqrt();
            assert!(
                (mean - closed).abs() < 4.0 * se,
                "case {case}: {mean} vs {closed} (se {se})"
            );
        }
    }
}

#[test]
fn electron_variance_includes_photon_noise() {
    // photon term ~ 1.8e3 against sigma^2 = 25
    let setup = single_detector(1000.0, 100.0, 5.0, 50.0);
    let (n1, _) = setup.mean_photons();
    let det = setup.det1();
    let photon_term = det.photon_noise_variance(n1).unwrap();
    assert!(photon_term >= 10.0 * 25.0);
    let exact = det.exact_electron_moments(n1).unwrap();
    let s = summarize(&electrons1(&setup, 8, 400_000));
    assert!(
        (s.var - exact.variance).abs() < 4.0 * s.var_se(),
        "{} vs {} (se {})",
        s.var,
        exact.variance,
        s.var_se()
    );
    let excess = s.var - 25.0;
    assert!((excess - photon_term).abs() < 4.0 * s.var_se());
    assert!(excess > 0.5 * photon_term);
}

#[test]
fn block_estimator_spread_matches_error_propagation() {
    // photon-noise share of the electron variance is ~0.05%
    let det = DetectorModel::new(100.0, 1e4, NoiseWidth::Constant(10.0), 1e-4).unwrap();
    let setup = HomodyneSetup::symmetric(
        CoherentField::from_photons(1e3, 0.3).unwrap(),
        CoherentField::from_photons(1e2, 0.0).unwrap(),
        det,
    )
    .unwrap();
    let (n1, n2) = setup.mean_photons();
    for n in [n1, n2] {
        assert!(det.photon_noise_variance(n).unwrap() < 0.01 * 100.0);
    }
    let block = 500;
    let stats = run_ensemble(
        &setup,
        &EnsembleSpec::blocked(block, 200, Protocol::Nonlinear, 99),
    )
    .unwrap();
    let analytic = analytic_precision(&setup, 10.0, block).unwrap();
    let empirical = stats.estimator_std.unwrap();
    assert!(
        (empirical / analytic - 1.0).abs() < 0.10,
        "empirical {empirical} vs analytic {analytic}"
    );
    assert_eq!(stats.clamp_fraction, 0.0);
}

/// Two-sample Kolmogorov–Smirnov p-value (asymptotic).
fn ks_p_value(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * (-2.0 * k * k * lambda * lambda).exp();
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[test]
fn different_seeds_are_statistically_consistent() {
    let setup = single_detector(200.0, 300.0, 2.0, 80.0);
    let sampler = ShotSampler::new(&setup);
    let draw = |seed| -> Vec<f64> {
        (0..20_000)
            .map(|i| sampler.sample(&mut shot_rng(seed, i)).current1)
            .collect()
    };
    let p = ks_p_value(draw(1), draw(2));
    assert!(p > 0.001, "p = {p}");
    let a = draw(3);
    assert_eq!(a, draw(3));
}
