//! Replicate execution: per-replicate RNG substreams, sequential and
//! data-parallel drivers, and mean/standard-error accumulation.
//!
//! Replicate `i` of a run seeded with `seed` always draws from the same ChaCha
//! stream, and results are reduced in index order, so every output is
//! independent of the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type ReplicateRng = ChaCha8Rng;

/// The RNG for replicate `index` of a run seeded with `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ReplicateRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Execution {
    Sequential,
    /// Rayon's global pool, or the pool installed by [`with_workers`].
    /// Without the `parallel` feature this runs sequentially.
    #[default]
    Parallel,
}

/// Runs `f(i, rng_i)` for `i in 0..reps` and returns results in index order.
pub fn map_replicates<T, F>(seed: u64, reps: u64, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ReplicateRng) -> T + Sync + Send,
{
    let run = |i: u64| {
        let mut rng = replicate_rng(seed, i);
        f(i, &mut rng)
    };
    match exec {
        Execution::Sequential => (0..reps).map(run).collect(),
        Execution::Parallel => par_map(reps, run),
    }
}

/// Maps `f` over `0..len` on the selected executor, preserving order.
pub fn map_indices<T, F>(len: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..len).map(f).collect(),
        Execution::Parallel => par_map(len as u64, |i| f(i as usize)),
    }
}

#[cfg(feature = "parallel")]
fn par_map<T: Send>(len: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T: Send>(len: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..len).map(f).collect()
}

/// Runs `op` with `workers` threads available to [`Execution::Parallel`].
/// `workers = 0` keeps the default pool.
#[cfg(feature = "parallel")]
pub fn with_workers<R: Send>(workers: usize, op: impl FnOnce() -> R + Send) -> R {
    if workers == 0 {
        return op();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(op),
        Err(e) => {
            log::warn!("could not build a {workers}-thread pool ({e}); using the global pool");
            op()
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<R: Send>(_workers: usize, op: impl FnOnce() -> R + Send) -> R {
    op()
}

/// Welford accumulator for a sample mean and its standard error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanSe {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanSe {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; 0 with fewer than two observations.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn se(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

impl FromIterator<f64> for MeanSe {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// Mean and standard error of a Monte-Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub reps: u64,
}

impl From<MeanSe> for McEstimate {
    fn from(acc: MeanSe) -> Self {
        Self { mean: acc.mean(), se: acc.se(), reps: acc.count() }
    }
}

impl McEstimate {
    /// `|mean − target| / se`, the deviation in standard errors (∞ if se = 0 and they differ).
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.se
        }
    }

    pub fn within(&self, target: f64, n_se: f64) -> bool {
        self.z_score(target) <= n_se
    }
}
