//! Shot-by-shot simulation of the compound Poisson–Gaussian measurement.
//!
//! Each shot draws a Poisson photon number at each detector, then a Gaussian
//! photoelectron count around `mu(n)`. Every shot owns an independent ChaCha8
//! stream selected by its global index, so any shot can be regenerated from
//! `(seed, index)` and the ensemble can be split across threads freely.
//! Partial sums are merged in a fixed chunk order, so results do not depend on
//! the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::DetectorModel;
use crate::estimation::{linear_from_currents, nonlinear_from_currents, HomodyneSetup, Protocol};
use crate::{Error, Result};

/// Means at or above this are sampled with a rounded Gaussian instead of an
/// exact Poisson draw.
pub const EXACT_POISSON_LIMIT: f64 = 1e6;

const CHUNK_SHOTS: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotSample {
    pub photons1: u64,
    pub photons2: u64,
    /// Gaussian tails may go negative; they are kept.
    pub electrons1: f64,
    pub electrons2: f64,
    pub current1: f64,
    pub current2: f64,
}

#[derive(Debug, Clone)]
enum PhotonLaw {
    Vacuum,
    Exact(Poisson<f64>),
    Gaussian { mean: f64, sd: f64 },
}

impl PhotonLaw {
    fn new(mean: f64) -> Self {
        if mean <= 0.0 {
            PhotonLaw::Vacuum
        } else if mean < EXACT_POISSON_LIMIT {
            PhotonLaw::Exact(Poisson::new(mean).expect("0 < mean < EXACT_POISSON_LIMIT"))
        } else {
            PhotonLaw::Gaussian {
                mean,
                sd: mean.sqrt(),
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            PhotonLaw::Vacuum => 0,
            PhotonLaw::Exact(poisson) => poisson.sample(rng) as u64,
            PhotonLaw::Gaussian { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                (mean + sd * z).round().max(0.0) as u64
            }
        }
    }
}

#[derive(Debug, Clone)]
struct DetectorSampler {
    det: DetectorModel,
    photons: PhotonLaw,
}

impl DetectorSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (u64, f64, f64) {
        let n = self.photons.sample(rng);
        let mu = self.det.mean_electrons_unchecked(n as f64);
        let sigma = self.det.noise().sigma_at(mu);
        let z: f64 = rng.sample(StandardNormal);
        let k = mu + sigma * z;
        (n, k, self.det.electrons_to_current(k))
    }
}

/// Precomputed per-detector sampling laws for one setup.
#[derive(Debug, Clone)]
pub struct ShotSampler {
    d1: DetectorSampler,
    d2: DetectorSampler,
}

impl ShotSampler {
    pub fn new(setup: &HomodyneSetup) -> Self {
        let (n1, n2) = setup.mean_photons();
        Self {
            d1: DetectorSampler {
                det: *setup.det1(),
                photons: PhotonLaw::new(n1),
            },
            d2: DetectorSampler {
                det: *setup.det2(),
                photons: PhotonLaw::new(n2),
            },
        }
    }

    /// True when either detector's mean photon number uses the Gaussian approximation.
    pub fn uses_gaussian_approximation(&self) -> bool {
        matches!(self.d1.photons, PhotonLaw::Gaussian { .. })
            || matches!(self.d2.photons, PhotonLaw::Gaussian { .. })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ShotSample {
        let (photons1, electrons1, current1) = self.d1.sample(rng);
        let (photons2, electrons2, current2) = self.d2.sample(rng);
        ShotSample {
            photons1,
            photons2,
            electrons1,
            electrons2,
            current1,
            current2,
        }
    }
}

/// Draws one shot. Use [`ShotSampler`] directly when sampling many shots of
/// the same setup.
pub fn sample_shot<R: Rng + ?Sized>(setup: &HomodyneSetup, rng: &mut R) -> ShotSample {
    ShotSampler::new(setup).sample(rng)
}

/// Random stream for shot `index` of the run seeded with `seed`.
pub fn shot_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    /// Total number of shots.
    pub shots: u64,
    /// Shots averaged into each phase estimate; must divide `shots`.
    pub block_size: u64,
    pub protocol: Protocol,
    pub seed: u64,
}

impl EnsembleSpec {
    /// One block spanning the whole ensemble.
    pub fn new(shots: u64, protocol: Protocol, seed: u64) -> Self {
        Self {
            shots,
            block_size: shots,
            protocol,
            seed,
        }
    }

    /// `blocks` independent ensembles of `block_shots` shots each.
    pub fn blocked(block_shots: u64, blocks: u64, protocol: Protocol, seed: u64) -> Self {
        Self {
            shots: block_shots.saturating_mul(blocks),
            block_size: block_shots,
            protocol,
            seed,
        }
    }

    pub fn blocks(&self) -> u64 {
        self.shots / self.block_size
    }

    fn validate(&self) -> Result<()> {
        if self.shots < 2 {
            return Err(Error::InvalidEnsemble(format!(
                "shots = {}: at least 2 shots are needed for a variance",
                self.shots
            )));
        }
        if self.block_size == 0 || self.block_size > self.shots {
            return Err(Error::InvalidEnsemble(format!(
                "block size {} must lie in [1, {}]",
                self.block_size, self.shots
            )));
        }
        if self.shots % self.block_size != 0 {
            return Err(Error::InvalidEnsemble(format!(
                "block size {} does not divide shots = {}",
                self.block_size, self.shots
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub shots: u64,
    pub block_size: u64,
    pub blocks: u64,
    pub protocol: Protocol,
    /// Per-shot current statistics over all shots (amperes, amperes²).
    pub mean_current1: f64,
    pub mean_current2: f64,
    pub var_current1: f64,
    pub var_current2: f64,
    /// Mean and sample standard deviation of the per-block phase estimates.
    /// `None` when no block produced an estimate.
    pub estimator_mean: Option<f64>,
    pub estimator_std: Option<f64>,
    /// Fraction of blocks that were clamped or could not be inverted.
    pub clamp_fraction: f64,
    /// Blocks whose averaged current was oversaturated or negative.
    pub failed_blocks: u64,
}

/// Running mean and sum of squared deviations (Welford / Chan).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let weight = other.count as f64 / count as f64;
        Self {
            count,
            mean: self.mean + delta * weight,
            m2: self.m2 + other.m2 + delta * delta * self.count as f64 * weight,
        }
    }

    fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct CurrentMoments {
    d1: Moments,
    d2: Moments,
}

impl CurrentMoments {
    fn merge(self, other: Self) -> Self {
        Self {
            d1: self.d1.merge(other.d1),
            d2: self.d2.merge(other.d2),
        }
    }
}

fn simulate_range(sampler: &ShotSampler, seed: u64, start: u64, end: u64) -> CurrentMoments {
    let chunks: Vec<(u64, u64)> = (start..end)
        .step_by(CHUNK_SHOTS as usize)
        .map(|lo| (lo, (lo + CHUNK_SHOTS).min(end)))
        .collect();
    chunks
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut acc = CurrentMoments::default();
            for index in lo..hi {
                let shot = sampler.sample(&mut shot_rng(seed, index));
                acc.d1.push(shot.current1);
                acc.d2.push(shot.current2);
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(CurrentMoments::default(), CurrentMoments::merge)
}

enum BlockOutcome {
    Estimate { phase: f64, clamped: bool },
    Failed,
}

/// Simulates `spec.shots` shots and estimates the phase from the averaged
/// currents of each block.
pub fn run_ensemble(setup: &HomodyneSetup, spec: &EnsembleSpec) -> Result<EnsembleStats> {
    spec.validate()?;
    if setup.signal().magnitude() == 0.0 {
        return Err(Error::DegenerateSignal);
    }
    let sampler = ShotSampler::new(setup);
    let blocks = spec.blocks();

    let per_block: Vec<CurrentMoments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * spec.block_size;
            simulate_range(&sampler, spec.seed, start, start + spec.block_size)
        })
        .collect();

    let mut estimates = Moments::default();
    let mut clamped_blocks = 0u64;
    let mut failed_blocks = 0u64;
    for block in &per_block {
        let (i1, i2) = (block.d1.mean, block.d2.mean);
        let outcome = match spec.protocol {
            Protocol::Linear => linear_from_currents(i1, i2, spec.block_size, setup),
            Protocol::Nonlinear => nonlinear_from_currents(i1, i2, spec.block_size, setup),
        }
        .map_or(BlockOutcome::Failed, |r| BlockOutcome::Estimate {
            phase: r.phase_estimate,
            clamped: r.clamped,
        });
        match outcome {
            BlockOutcome::Estimate { phase, clamped } => {
                estimates.push(phase);
                clamped_blocks += u64::from(clamped);
            }
            BlockOutcome::Failed => failed_blocks += 1,
        }
    }

    let total = per_block
        .into_iter()
        .fold(CurrentMoments::default(), CurrentMoments::merge);

    let (estimator_mean, estimator_std) = if estimates.count == 0 {
        (None, None)
    } else {
        (Some(estimates.mean), Some(estimates.sample_variance().sqrt()))
    };

    Ok(EnsembleStats {
        shots: spec.shots,
        block_size: spec.block_size,
        blocks,
        protocol: spec.protocol,
        mean_current1: total.d1.mean,
        mean_current2: total.d2.mean,
        var_current1: total.d1.sample_variance(),
        var_current2: total.d2.sample_variance(),
        estimator_mean,
        estimator_std,
        clamp_fraction: (clamped_blocks + failed_blocks) as f64 / blocks as f64,
        failed_blocks,
    })
}
