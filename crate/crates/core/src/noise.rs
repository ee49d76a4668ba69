//! Reproducible Wiener paths.
//!
//! Increment `(i, ρ)` of path `p` is a pure function of
//! `(master_seed, p, i, ρ)`: the ChaCha8 keystream keyed by `master_seed`,
//! stream `p`, supplies exactly four 32-bit words per entry at word position
//! `4·(i·d₁ + ρ)`, turned into a standard normal by Box–Muller. Paths can be
//! generated in any order on any number of workers with identical results.
//!
//! Only finitely many driving processes `W^1..W^{d₁}` are supported.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const WORDS_PER_ENTRY: u128 = 4;

fn unit_open(bits: u64) -> f64 {
    // (0, 1]
    ((bits >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}

fn unit_closed_open(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn box_muller(a: u64, b: u64) -> f64 {
    let r = (-2.0 * unit_open(a).ln()).sqrt();
    r * (std::f64::consts::TAU * unit_closed_open(b)).cos()
}

fn stream(master_seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(path_index);
    rng
}

/// Standard normal keyed by `(master_seed, path_index, entry)` with
/// `entry = step·d₁ + component`. Random access into the same values that
/// [`sample_path`] produces sequentially.
pub fn keyed_normal(master_seed: u64, path_index: u64, entry: u64) -> f64 {
    let mut rng = stream(master_seed, path_index);
    rng.set_word_pos(entry as u128 * WORDS_PER_ENTRY);
    let a = rng.next_u64();
    let b = rng.next_u64();
    box_muller(a, b)
}

/// `n + 1` equally spaced times from 0 to `horizon`.
pub fn uniform_times(horizon: f64, steps: usize) -> Vec<f64> {
    let tau = horizon / steps as f64;
    let mut t: Vec<f64> = (0..=steps).map(|i| i as f64 * tau).collect();
    t[steps] = horizon;
    t
}

#[derive(Clone, Debug, PartialEq)]
pub struct WienerPath {
    noise_count: usize,
    times: Arc<[f64]>,
    /// Row-major `steps × noise_count`.
    increments: Vec<f64>,
    master_seed: u64,
    path_index: u64,
}

pub fn sample_path(
    master_seed: u64,
    path_index: u64,
    times: &[f64],
    noise_count: usize,
) -> Result<WienerPath> {
    validate_times(times)?;
    let steps = times.len() - 1;
    let mut rng = stream(master_seed, path_index);
    let mut increments = Vec::with_capacity(steps * noise_count);
    for i in 0..steps {
        let sd = (times[i + 1] - times[i]).sqrt();
        for _ in 0..noise_count {
            let a = rng.next_u64();
            let b = rng.next_u64();
            increments.push(sd * box_muller(a, b));
        }
    }
    Ok(WienerPath {
        noise_count,
        times: times.into(),
        increments,
        master_seed,
        path_index,
    })
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::InvalidTimeGrid("need at least two times".into()));
    }
    if times[0] != 0.0 {
        return Err(Error::InvalidTimeGrid(format!("must start at 0, starts at {}", times[0])));
    }
    if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::InvalidTimeGrid(format!(
            "times must be strictly increasing and finite ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

impl WienerPath {
    /// A path with prescribed increments, for tests and manual experiments.
    pub fn from_increments(times: &[f64], noise_count: usize, increments: Vec<f64>) -> Result<Self> {
        validate_times(times)?;
        let expected = (times.len() - 1) * noise_count;
        if increments.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: increments.len(),
            });
        }
        Ok(Self {
            noise_count,
            times: times.into(),
            increments,
            master_seed: 0,
            path_index: 0,
        })
    }

    pub fn noise_count(&self) -> usize {
        self.noise_count
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `ΔW` over `[t_i, t_{i+1}]`, one entry per driving process.
    pub fn increment(&self, step: usize) -> &[f64] {
        &self.increments[step * self.noise_count..(step + 1) * self.noise_count]
    }

    /// `W(t_i)`.
    pub fn value_at_step(&self, step: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.noise_count];
        for i in 0..step {
            for (acc, dw) in w.iter_mut().zip(self.increment(i)) {
                *acc += dw;
            }
        }
        w
    }

    /// `W(t)` for a node `t` of the time grid.
    pub fn value_at(&self, t: f64) -> Result<Vec<f64>> {
        let step = self
            .times
            .iter()
            .position(|&s| s == t)
            .ok_or(Error::NotOnTimeGrid(t))?;
        Ok(self.value_at_step(step))
    }

    pub fn terminal_value(&self) -> Vec<f64> {
        self.value_at_step(self.steps())
    }

    /// Same Brownian path on every `factor`-th time node.
    pub fn coarsen(&self, factor: usize) -> Result<WienerPath> {
        if factor == 0 || !self.steps().is_multiple_of(factor) {
            return Err(Error::InvalidTimeGrid(format!(
                "cannot coarsen {} steps by a factor of {factor}",
                self.steps()
            )));
        }
        let times: Vec<f64> = self.times.iter().step_by(factor).copied().collect();
        let mut increments = vec![0.0; (self.steps() / factor) * self.noise_count];
        for step in 0..self.steps() {
            let coarse = step / factor;
            for (rho, dw) in self.increment(step).iter().enumerate() {
                increments[coarse * self.noise_count + rho] += dw;
            }
        }
        Ok(WienerPath {
            noise_count: self.noise_count,
            times: times.into(),
            increments,
            master_seed: self.master_seed,
            path_index: self.path_index,
        })
    }

    /// SHA-256 over the time grid and increments, little-endian, hex.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.noise_count as u64).to_le_bytes());
        for t in self.times.iter() {
            hasher.update(t.to_le_bytes());
        }
        for v in &self.increments {
            hasher.update(v.to_le_bytes());
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_stream_separated() {
        let times = uniform_times(1.0, 50);
        let a = sample_path(7, 0, &times, 2).unwrap();
        let b = sample_path(7, 0, &times, 2).unwrap();
        assert_eq!(a.increments(), b.increments());
        assert_eq!(a.digest(), b.digest());
        let c = sample_path(7, 1, &times, 2).unwrap();
        assert_ne!(a.increments(), c.increments());
        let d = sample_path(8, 0, &times, 2).unwrap();
        assert_ne!(a.increments(), d.increments());
    }

    #[test]
    fn random_access_matches_sequential() {
        let times = uniform_times(2.0, 13);
        let path = sample_path(99, 5, &times, 3).unwrap();
        for step in [0usize, 4, 12] {
            let sd = (times[step + 1] - times[step]).sqrt();
            for rho in 0..3 {
                let z = keyed_normal(99, 5, (step * 3 + rho) as u64);
                assert_eq!(path.increment(step)[rho], sd * z);
            }
        }
    }

    #[test]
    fn increment_variance_within_chi_square_band() {
        let n = 100_000;
        let times = uniform_times(n as f64 * 0.01, n);
        let path = sample_path(2024, 0, &times, 1).unwrap();
        let var = path.increments().iter().map(|d| d * d).sum::<f64>() / n as f64;
        assert!((0.0097..=0.0103).contains(&var), "variance {var}");
    }

    #[test]
    fn components_and_paths_uncorrelated() {
        let n = 10_000;
        let times = uniform_times(1.0, n);
        let path = sample_path(11, 3, &times, 2).unwrap();
        let other = sample_path(11, 4, &times, 1).unwrap();
        let corr = |x: &[f64], y: &[f64]| {
            let mx = x.iter().sum::<f64>() / x.len() as f64;
            let my = y.iter().sum::<f64>() / y.len() as f64;
            let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
            let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
            let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
            sxy / (sxx * syy).sqrt()
        };
        let w0: Vec<f64> = (0..n).map(|i| path.increment(i)[0]).collect();
        let w1: Vec<f64> = (0..n).map(|i| path.increment(i)[1]).collect();
        let bound = 4.0 / (n as f64).sqrt();
        assert!(corr(&w0, &w1).abs() < bound);
        assert!(corr(&w0, other.increments()).abs() < bound);
        // Lag-one correlation within a component.
        assert!(corr(&w0[..n - 1], &w0[1..]).abs() < bound);
    }

    #[test]
    fn value_at_is_prefix_sum() {
        let times = [0.0, 0.1, 0.2, 0.3];
        let path = WienerPath::from_increments(&times, 1, vec![0.1, -0.2, 0.3]).unwrap();
        assert_eq!(path.value_at(0.0).unwrap(), vec![0.0]);
        assert!((path.value_at(0.3).unwrap()[0] - 0.2).abs() < 1e-15);
        assert!(matches!(path.value_at(0.25), Err(Error::NotOnTimeGrid(_))));
    }

    #[test]
    fn rejects_bad_time_grids() {
        assert!(sample_path(0, 0, &[0.0, 0.5, 0.5], 1).is_err());
        assert!(sample_path(0, 0, &[0.1, 0.5], 1).is_err());
        assert!(sample_path(0, 0, &[0.0], 1).is_err());
        assert!(sample_path(0, 0, &[0.0, 0.3, 0.2], 1).is_err());
    }

    #[test]
    fn coarsening_preserves_values() {
        let times = uniform_times(1.0, 16);
        let fine = sample_path(3, 2, &times, 2).unwrap();
        let coarse = fine.coarsen(4).unwrap();
        assert_eq!(coarse.steps(), 4);
        for step in 0..=4 {
            let a = coarse.value_at_step(step);
            let b = fine.value_at_step(4 * step);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-14);
            }
        }
        assert!(fine.coarsen(3).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn terminal_equals_direct_sum(
                incs in proptest::collection::vec(-3.0f64..3.0, 1..40),
            ) {
                let times = uniform_times(1.0, incs.len());
                let path = WienerPath::from_increments(&times, 1, incs.clone()).unwrap();
                let direct: f64 = incs.iter().sum();
                prop_assert!((path.terminal_value()[0] - direct).abs() <= 1e-12);
                prop_assert_eq!(path.value_at(1.0).unwrap(), path.terminal_value());
            }
        }
    }
}
