//! Stochastic and numerical oracles for the exact solver.
//!
//! Sampling is split into `batch_count` batches. Batch `b` of a run tagged
//! `tag` draws from `ChaCha8Rng::seed_from_u64(seed)` switched to stream
//! `(tag << 32) | b`, so each batch owns an independent substream that does
//! not depend on scheduling. Batch results are merged sequentially in batch
//! order, which makes every estimate bit-reproducible for a fixed seed with
//! or without the `parallel` feature.

mod diffusion;
mod jump;
mod quadrature;

pub use diffusion::{semigroup_agreement, simulate_diffusion, AgreementReport};
pub use jump::{feynman_kac_ou, simulate_dual, FK_EXPONENT_CAP, FK_EXPONENT_WARN};
pub use quadrature::{gauss_kronrod_adaptive, quadrature_normal_solution};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default seed when neither the caller nor the environment supplies one.
pub const DEFAULT_SEED: u64 = 0x5EED_2019;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub sample_count: usize,
    pub time_horizon: f64,
    pub em_step: f64,
    pub seed: u64,
    pub batch_count: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            sample_count: 100_000,
            time_horizon: 1.0,
            em_step: 1e-3,
            seed: DEFAULT_SEED,
            batch_count: 16,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::InvalidConfig(
                "sample_count must be at least 1".into(),
            ));
        }
        if !(self.em_step > 0.0 && self.em_step.is_finite()) {
            return Err(Error::InvalidConfig("em_step must be positive".into()));
        }
        if !(self.time_horizon >= 0.0 && self.time_horizon.is_finite()) {
            return Err(Error::InvalidConfig(
                "time_horizon must be non-negative".into(),
            ));
        }
        if self.batch_count == 0 || self.batch_count > self.sample_count {
            return Err(Error::InvalidConfig(
                "batch_count must be between 1 and sample_count".into(),
            ));
        }
        Ok(())
    }

    /// Sizes of each batch; they differ by at most one.
    pub fn batch_sizes(&self) -> Vec<usize> {
        let b = self.batch_count;
        let (q, r) = (self.sample_count / b, self.sample_count % b);
        (0..b).map(|i| q + usize::from(i < r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub mean: f64,
    pub std_error: f64,
    #[serde(rename = "n")]
    pub sample_count: usize,
    pub seed: u64,
}

impl EstimateWithError {
    /// `(self - other) / sqrt(se1² + se2²)`; zero when both are exact and
    /// equal, infinite when both are exact and differ.
    pub fn z_score(&self, other: &EstimateWithError) -> f64 {
        let diff = self.mean - other.mean;
        let se = self.std_error.hypot(other.std_error);
        if se > 0.0 {
            diff / se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }

    /// `|mean - value| <= k * std_error`, exact match required at zero error.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub(crate) fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub(crate) fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64) * (other.n as f64) / n as f64;
        self.n = n;
    }

    pub(crate) fn estimate(&self, seed: u64) -> EstimateWithError {
        let var = if self.n > 1 {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        } else {
            0.0
        };
        EstimateWithError {
            mean: self.mean,
            std_error: (var / self.n.max(1) as f64).sqrt(),
            sample_count: self.n as usize,
            seed,
        }
    }
}

pub(crate) mod stream {
    pub const DUAL: u64 = 1;
    pub const DIFFUSION: u64 = 2;
    pub const FEYNMAN_KAC: u64 = 3;
}

pub(crate) fn batch_rng(seed: u64, tag: u64, batch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 32) | batch as u64);
    rng
}

/// Run `work(rng, size)` for every batch and return results in batch order.
pub(crate) fn run_batches<T, F>(cfg: &SimConfig, tag: u64, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let sizes = cfg.batch_sizes();
    let job = |(b, &n): (usize, &usize)| {
        let mut rng = batch_rng(cfg.seed, tag, b);
        work(&mut rng, n)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        sizes.par_iter().enumerate().map(job).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        sizes.iter().enumerate().map(job).collect()
    }
}

pub(crate) fn merge_estimates(parts: &[Moments], seed: u64) -> EstimateWithError {
    let mut total = Moments::default();
    for p in parts {
        total.merge(p);
    }
    total.estimate(seed)
}
