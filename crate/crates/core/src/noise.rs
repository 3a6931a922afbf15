//! Control-error models and the classical dephasing bath.
//!
//! Pulse imperfections are static per realization: a fractional flip-angle
//! error `epsilon` (actual flip = nominal * (1 + epsilon)) and a resonance
//! offset in units of the nominal Rabi frequency. The environment is an
//! Ornstein-Uhlenbeck process standing in for a proton spin bath: Gaussian,
//! stationary, exponentially correlated.
//!
//! Every random stream is derived by hashing `(seed, index)`, so results are
//! independent of how trajectories are scheduled across threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Static control error applied to every pulse of a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlError {
    /// Fractional flip-angle error; the delivered flip is `nominal * (1 + epsilon)`.
    pub epsilon: f64,
    /// Detuning in units of the nominal Rabi frequency.
    pub offset: f64,
}

impl ControlError {
    pub fn new(epsilon: f64, offset: f64) -> Self {
        Self { epsilon, offset }
    }
}

/// Gaussian distribution of flip-angle errors, sampled deterministically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianEnsemble {
    /// Standard deviation of `epsilon`.
    pub sigma: f64,
    pub size: u32,
    pub seed: u64,
}

impl GaussianEnsemble {
    pub fn new(sigma: f64, size: u32, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ensemble sigma must be finite and >= 0, got {sigma}"
            )));
        }
        if size < 1 {
            return Err(Error::InvalidParameter("ensemble size must be >= 1".into()));
        }
        Ok(Self { sigma, size, seed })
    }
}

/// Ornstein-Uhlenbeck dephasing bath parameters.
///
/// `sigma_b` is the stationary standard deviation of the dephasing frequency
/// (rad/us), `tau_e` the bath correlation time. Trajectories are sampled on a
/// fixed grid `dt` and held piecewise-constant within each step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseProcess {
    pub tau_e: f64,
    pub sigma_b: f64,
    pub dt: f64,
    pub seed: u64,
}

impl NoiseProcess {
    pub fn new(tau_e: f64, sigma_b: f64, dt: f64, seed: u64) -> Result<Self> {
        if !(tau_e > 0.0 && tau_e.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tau_e must be finite and > 0, got {tau_e}"
            )));
        }
        if !(sigma_b >= 0.0 && sigma_b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma_b must be finite and >= 0, got {sigma_b}"
            )));
        }
        if !(dt > 0.0 && dt <= tau_e / 10.0) {
            return Err(Error::InvalidParameter(format!(
                "dt must satisfy 0 < dt <= tau_e/10, got dt={dt}, tau_e={tau_e}"
            )));
        }
        Ok(Self {
            tau_e,
            sigma_b,
            dt,
            seed,
        })
    }

    /// A silent bath (useful when only pulse errors are wanted).
    pub fn silent(seed: u64) -> Self {
        Self {
            tau_e: 100.0,
            sigma_b: 0.0,
            dt: 10.0,
            seed,
        }
    }
}

/// One sampled dephasing trajectory: `omega(t) = values[floor(t / dt)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OuPath {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl OuPath {
    /// Total time covered by the path.
    pub fn covered_time(&self) -> f64 {
        self.values.len() as f64 * self.dt
    }

    /// The dephasing frequency in effect at time `t`.
    pub fn omega_at(&self, t: f64) -> f64 {
        let k = (t / self.dt) as usize;
        self.values[k.min(self.values.len() - 1)]
    }
}

/// Mix `(seed, index)` into an independent stream seed (splitmix64 finalizer).
fn stream_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic RNG for trajectory or ensemble member `index`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, index))
}

/// Draw the flip-angle error ensemble. Each member has its own stream, so
/// any parallel partitioning of indices reproduces the same values.
pub fn sample_ensemble(ensemble: &GaussianEnsemble) -> Vec<ControlError> {
    (0..ensemble.size as u64)
        .map(|k| ControlError::new(sample_epsilon(ensemble, k), 0.0))
        .collect()
}

/// The `index`-th member of the ensemble.
pub fn sample_epsilon(ensemble: &GaussianEnsemble, index: u64) -> f64 {
    if ensemble.sigma == 0.0 {
        return 0.0;
    }
    let mut rng = stream_rng(ensemble.seed, index);
    let normal = Normal::new(0.0, ensemble.sigma).expect("validated sigma");
    normal.sample(&mut rng)
}

/// Sample one stationary OU trajectory covering at least `total_time`.
///
/// Exact discrete update: `w_{k+1} = w_k e^{-dt/tau_e} + sigma_b sqrt(1 - e^{-2 dt/tau_e}) xi_k`
/// with `w_0 ~ N(0, sigma_b^2)`, which reproduces the OU marginals and
/// autocovariance at the grid points with no time-step bias.
pub fn ou_trajectory(process: &NoiseProcess, total_time: f64, index: u64) -> Result<OuPath> {
    if !(total_time > 0.0 && total_time.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "total_time must be finite and > 0, got {total_time}"
        )));
    }
    let steps = (total_time / process.dt).ceil() as usize + 1;
    if process.sigma_b == 0.0 {
        return Ok(OuPath {
            dt: process.dt,
            values: vec![0.0; steps],
        });
    }
    let mut rng = stream_rng(process.seed, index);
    let decay = (-process.dt / process.tau_e).exp();
    let kick = process.sigma_b * (1.0 - decay * decay).sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut values = Vec::with_capacity(steps);
    let mut w = process.sigma_b * normal.sample(&mut rng);
    values.push(w);
    for _ in 1..steps {
        w = w * decay + kick * normal.sample(&mut rng);
        values.push(w);
    }
    Ok(OuPath {
        dt: process.dt,
        values,
    })
}

/// Uniform angle draw, used by randomized equivalence checks.
pub fn uniform_angle(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.0..std::f64::consts::TAU)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_gives_zero_errors() {
        let ens = GaussianEnsemble::new(0.0, 100, 7).unwrap();
        assert!(sample_ensemble(&ens).iter().all(|e| e.epsilon == 0.0));
    }

    #[test]
    fn ensemble_statistics() {
        let ens = GaussianEnsemble::new(0.1, 10_000, 42).unwrap();
        let eps: Vec<f64> = sample_ensemble(&ens).iter().map(|e| e.epsilon).collect();
        let n = eps.len() as f64;
        let mean = eps.iter().sum::<f64>() / n;
        let var = eps.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4.0 * 0.1 / n.sqrt(), "mean {mean}");
        assert!((var.sqrt() - 0.1).abs() < 0.05 * 0.1, "std {}", var.sqrt());
    }

    #[test]
    fn seeds_are_deterministic_and_distinct() {
        let a = sample_ensemble(&GaussianEnsemble::new(0.1, 50, 1).unwrap());
        let b = sample_ensemble(&GaussianEnsemble::new(0.1, 50, 1).unwrap());
        assert_eq!(a, b);
        let c = sample_ensemble(&GaussianEnsemble::new(0.1, 50, 2).unwrap());
        assert_ne!(a, c);
    }

    #[test]
    fn silent_bath_is_identically_zero() {
        let p = NoiseProcess::new(100.0, 0.0, 5.0, 3).unwrap();
        let path = ou_trajectory(&p, 500.0, 0).unwrap();
        assert!(path.values.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn frozen_noise_limit() {
        // tau_e at 1e9 times the run: the path must stay near its start
        let p = NoiseProcess::new(1e12, 0.5, 100.0, 11).unwrap();
        let path = ou_trajectory(&p, 1e3, 0).unwrap();
        let w0 = path.values[0];
        for &w in &path.values {
            assert!((w - w0).abs() < 1e-3 * 0.5, "drifted: {w} vs {w0}");
        }
    }

    #[test]
    fn trajectory_determinism_per_index() {
        let p = NoiseProcess::new(100.0, 0.1, 5.0, 9).unwrap();
        let a = ou_trajectory(&p, 300.0, 4).unwrap();
        let b = ou_trajectory(&p, 300.0, 4).unwrap();
        assert_eq!(a, b);
        let c = ou_trajectory(&p, 300.0, 5).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn path_lookup_covers_time() {
        let p = NoiseProcess::new(100.0, 0.1, 4.0, 9).unwrap();
        let path = ou_trajectory(&p, 101.0, 0).unwrap();
        assert!(path.covered_time() >= 101.0);
        let _ = path.omega_at(100.9999);
    }

    #[test]
    fn dt_bound_is_enforced() {
        assert!(NoiseProcess::new(100.0, 0.1, 11.0, 0).is_err());
        assert!(NoiseProcess::new(100.0, 0.1, 0.0, 0).is_err());
        assert!(NoiseProcess::new(100.0, 0.1, 10.0, 0).is_ok());
    }
}
