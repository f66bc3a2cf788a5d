//! Seeded Wiener paths and shock series.
//!
//! Uniforms come from ChaCha8 (53 high bits of each `u64`), normals from the
//! Marsaglia polar method. Both are implemented here so the stream for a
//! given seed stays fixed across dependency upgrades.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StochasticError {
    #[error("dt must be finite and > 0, got {0}")]
    InvalidStep(f64),
    #[error("sigma must be finite and >= 0, got {0}")]
    InvalidSigma(f64),
    #[error("path has {have} values but {need} are required")]
    LengthMismatch { have: usize, need: usize },
    #[error("failed to build worker pool: {0}")]
    Pool(String),
}

/// Standard normal sampler over a seeded ChaCha8 stream.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        NormalStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let m = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * m);
                return u * m;
            }
        }
    }
}

/// Seed of path `index` in an ensemble: the SplitMix64 finaliser applied to
/// `master + (index + 1)·0x9E3779B97F4A7C15`.
pub fn derive_path_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Discrete Brownian path `W_0 = 0, W_1, …, W_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WienerPath {
    pub seed: u64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl WienerPath {
    pub fn n_steps(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn terminal(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

pub fn wiener_path(seed: u64, n_steps: usize, dt: f64) -> Result<WienerPath, StochasticError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(StochasticError::InvalidStep(dt));
    }
    let sd = dt.sqrt();
    let mut stream = NormalStream::new(seed);
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut w = 0.0;
    values.push(w);
    for _ in 0..n_steps {
        w += sd * stream.next_normal();
        values.push(w);
    }
    Ok(WienerPath { seed, dt, values })
}

/// `n_paths` paths seeded by [`derive_path_seed`], in index order.
///
/// `workers = None` uses the global rayon pool; the output does not depend
/// on the worker count.
pub fn wiener_ensemble(
    master_seed: u64,
    n_paths: usize,
    n_steps: usize,
    dt: f64,
    workers: Option<usize>,
) -> Result<Vec<WienerPath>, StochasticError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(StochasticError::InvalidStep(dt));
    }
    run_in_pool(workers, || {
        (0..n_paths)
            .into_par_iter()
            .map(|i| wiener_path(derive_path_seed(master_seed, i as u64), n_steps, dt))
            .collect()
    })
}

/// Runs `f` on a dedicated pool of `workers` threads, or inline on the
/// global pool.
pub(crate) fn run_in_pool<T, F>(workers: Option<usize>, f: F) -> Result<T, StochasticError>
where
    T: Send,
    F: FnOnce() -> Result<T, StochasticError> + Send,
{
    match workers {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| StochasticError::Pool(e.to_string()))?
            .install(f),
    }
}

/// Shock intensity and discretisation of a simulated shock path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockConfig {
    pub sigma: f64,
    pub n_steps: usize,
    pub dt: f64,
}

impl ShockConfig {
    pub fn validate(&self) -> Result<(), StochasticError> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(StochasticError::InvalidSigma(self.sigma));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(StochasticError::InvalidStep(self.dt));
        }
        Ok(())
    }
}

/// `sigma · W_i` for `i = 0..=n_steps`.
pub fn shock_series(cfg: &ShockConfig, path: &WienerPath) -> Result<Vec<f64>, StochasticError> {
    cfg.validate()?;
    let need = cfg.n_steps + 1;
    if path.values.len() < need {
        return Err(StochasticError::LengthMismatch {
            have: path.values.len(),
            need,
        });
    }
    Ok(path.values[..need].iter().map(|w| cfg.sigma * w).collect())
}
