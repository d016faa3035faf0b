//! Circular complex Gaussian noise at a requested SNR.
//!
//! The SNR reference is the mean |sample|² over the whole phase history.
//! Noise is drawn from ChaCha20 seeded per sample so datasets regenerate
//! bit-identically in any order.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::PhaseHistory;

/// SNR treated as "no noise": the history passes through untouched.
pub const NO_NOISE_DB: f64 = 201.0;

/// Name recorded in manifests for the noise generator.
pub const GENERATOR_NAME: &str = "ChaCha20Rng (rand_chacha 0.9, SeedableRng::seed_from_u64) + rand_distr 0.5 StandardNormal; re then im per sample, row-major";

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("SNR {0} dB outside [0, 201]")]
    SnrRange(f64),
    #[error("phase history has zero energy; SNR {0} dB is undefined")]
    ZeroEnergy(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(snr_db: f64, seed: u64) -> Result<Self, NoiseError> {
        let spec = NoiseSpec { snr_db, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        if self.snr_db.is_finite() && (0.0..=NO_NOISE_DB).contains(&self.snr_db) {
            Ok(())
        } else {
            Err(NoiseError::SnrRange(self.snr_db))
        }
    }

    pub fn is_noise_free(&self) -> bool {
        self.snr_db >= NO_NOISE_DB
    }
}

/// Per-sample complex noise variance for a signal of mean power
/// `signal_power`: σ² = P·10^(−SNR/10).
pub fn noise_variance(signal_power: f64, snr_db: f64) -> f64 {
    signal_power * 10f64.powf(-snr_db / 10.0)
}

/// Returns `ph + n`, n ~ CN(0, σ²) i.i.d. per sample.
pub fn add_noise(ph: &PhaseHistory, spec: &NoiseSpec) -> Result<PhaseHistory, NoiseError> {
    spec.validate()?;
    if spec.is_noise_free() {
        return Ok(ph.clone());
    }
    let power = ph.mean_power();
    if power <= 0.0 {
        return Err(NoiseError::ZeroEnergy(spec.snr_db));
    }
    let sigma = (noise_variance(power, spec.snr_db) / 2.0).sqrt();
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut out = ph.clone();
    for z in out.samples_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *z += Complex64::new(sigma * re, sigma * im);
    }
    Ok(out)
}

/// 10·log10(P_signal / P̂_noise) where the noise is `noisy − clean`.
pub fn empirical_snr_db(clean: &PhaseHistory, noisy: &PhaseHistory) -> f64 {
    let noise: f64 = clean
        .samples()
        .iter()
        .zip(noisy.samples())
        .map(|(a, b)| (b - a).norm_sqr())
        .sum::<f64>()
        / clean.samples().len() as f64;
    10.0 * (clean.mean_power() / noise).log10()
}
