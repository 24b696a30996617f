//! Synthetic-noise recovery test: pollute an arbitrage-free surface, repair
//! it, and measure how many prices end up away from the clean ones.
//!
//! Randomness is keyed by `(seed, trial, index)`. For trial `t` the polluted
//! subset is drawn from ChaCha8 stream `2t`, and the Gaussian for price `j`
//! comes from stream `2t + 1` at word offset `4j` (two `u64` draws fed to
//! Box-Muller), so results do not depend on evaluation order.

use rand::seq::index::sample;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{build_constraints, detect_violations, DEFAULT_DETECT_TOL};
use crate::normalize::NormalizedSurface;
use crate::repair::{repair, RepairConfig, RepairError, DEFAULT_ZERO_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StressError {
    #[error("lambda must lie in (0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("at least one trial is required")]
    NoTrials,
    #[error("price {index} is {value}; noise needs strictly positive prices")]
    NonPositivePrice { index: usize, value: f64 },
    #[error("baseline surface has {violations} arbitrage violations")]
    InputNotArbitrageFree { violations: usize },
    #[error("repair failed in trial {trial}: {source}")]
    Repair { trial: usize, source: RepairError },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NoiseSpec {
    pub lambda: f64,
    /// Standard deviation of the log-price noise.
    pub sigma: f64,
    pub seed: u64,
    pub trials: usize,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), StressError> {
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(StressError::InvalidLambda(self.lambda));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(StressError::InvalidSigma(self.sigma));
        }
        if self.trials == 0 {
            return Err(StressError::NoTrials);
        }
        Ok(())
    }

    /// `ceil(lambda * n)`.
    pub fn polluted_count(&self, n: usize) -> usize {
        ((self.lambda * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
    }
}

/// What happens to the bid-ask bands of polluted prices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandPolicy {
    /// Bands stay as quoted around the clean mid.
    #[default]
    Keep,
    /// Bands are scaled by the same factor as the price.
    ScaleWithNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StressConfig {
    pub repair: RepairConfig,
    pub bands: BandPolicy,
    /// `|c_hat - c|` above this counts as a changed price.
    pub zero_tol: f64,
}

impl Default for StressConfig {
    fn default() -> Self {
        Self {
            repair: RepairConfig::default(),
            bands: BandPolicy::Keep,
            zero_tol: DEFAULT_ZERO_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialOutcome {
    pub trial: usize,
    pub polluted: Vec<usize>,
    /// Whether the noisy prices already satisfied every constraint.
    pub noisy_arbitrage_free: bool,
    pub lambda_hat: f64,
    pub n_perturbed: usize,
    pub n_effective: usize,
    pub objective_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StressReport {
    pub spec: NoiseSpec,
    pub n: usize,
    pub polluted_count: usize,
    pub trials: Vec<TrialOutcome>,
    pub mean_lambda_hat: f64,
    /// `ln(c_hat / c)` over changed prices with `c_hat > 0`, pooled across trials.
    pub log_ratios: Vec<f64>,
    /// Changed prices repaired to a non-positive value (excluded from `log_ratios`).
    pub non_positive_repaired: usize,
}

fn unit_open(bits: u64) -> f64 {
    // (0, 1]
    ((bits >> 11) + 1) as f64 / (1u64 << 53) as f64
}

fn unit_half_open(bits: u64) -> f64 {
    // [0, 1)
    (bits >> 11) as f64 / (1u64 << 53) as f64
}

/// Standard normal draw for `(seed, trial, index)`.
pub fn gaussian(seed: u64, trial: usize, index: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * trial as u64 + 1);
    rng.set_word_pos(4 * index as u128);
    let u1 = unit_open(rng.next_u64());
    let u2 = unit_half_open(rng.next_u64());
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Sorted indices polluted in `trial`.
pub fn polluted_indices(n: usize, spec: &NoiseSpec, trial: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(2 * trial as u64);
    let mut idx = sample(&mut rng, n, spec.polluted_count(n)).into_vec();
    idx.sort_unstable();
    idx
}

/// Multiplies `ceil(lambda N)` prices by `exp(sigma z)`; returns the noisy
/// prices and the polluted indices.
pub fn inject_noise(
    prices: &[f64],
    spec: &NoiseSpec,
    trial: usize,
) -> Result<(Vec<f64>, Vec<usize>), StressError> {
    spec.validate()?;
    if let Some((index, &value)) = prices
        .iter()
        .enumerate()
        .find(|(_, &v)| v.is_nan() || v <= 0.0)
    {
        return Err(StressError::NonPositivePrice { index, value });
    }
    let idx = polluted_indices(prices.len(), spec, trial);
    let mut noisy = prices.to_vec();
    for &j in &idx {
        noisy[j] *= (spec.sigma * gaussian(spec.seed, trial, j)).exp();
    }
    Ok((noisy, idx))
}

pub fn run_stress(
    surface: &NormalizedSurface,
    spec: &NoiseSpec,
    config: &StressConfig,
) -> Result<StressReport, StressError> {
    spec.validate()?;
    let system = build_constraints(surface);
    let clean = surface.prices();
    let baseline = detect_violations(&system, &clean, DEFAULT_DETECT_TOL).expect("sizes match");
    if !baseline.is_clean() {
        return Err(StressError::InputNotArbitrageFree {
            violations: baseline.total,
        });
    }
    let n = clean.len();
    let (ask, bid) = (surface.ask_spreads(), surface.bid_spreads());

    let mut trials = Vec::with_capacity(spec.trials);
    let mut log_ratios = Vec::new();
    let mut non_positive_repaired = 0;
    for trial in 0..spec.trials {
        let (noisy, polluted) = inject_noise(&clean, spec, trial)?;
        let mut noisy_surface = surface.with_prices(&noisy).expect("sizes match");
        if config.bands == BandPolicy::ScaleWithNoise {
            let f: Vec<f64> = noisy.iter().zip(&clean).map(|(a, b)| a / b).collect();
            let a: Vec<f64> = ask.iter().zip(&f).map(|(s, f)| s * f).collect();
            let b: Vec<f64> = bid.iter().zip(&f).map(|(s, f)| s * f).collect();
            noisy_surface = noisy_surface.with_spreads(&a, &b).expect("sizes match");
        }
        let noisy_arbitrage_free = detect_violations(&system, &noisy, DEFAULT_DETECT_TOL)
            .expect("sizes match")
            .is_clean();
        let result = repair(&noisy_surface, &system, &config.repair)
            .map_err(|source| StressError::Repair { trial, source })?;

        let mut changed = 0;
        for (c_hat, c) in result.repaired.iter().zip(&clean) {
            if (c_hat - c).abs() > config.zero_tol {
                changed += 1;
                if *c_hat > 0.0 {
                    log_ratios.push((c_hat / c).ln());
                } else {
                    non_positive_repaired += 1;
                }
            }
        }
        trials.push(TrialOutcome {
            trial,
            polluted,
            noisy_arbitrage_free,
            lambda_hat: changed as f64 / n as f64,
            n_perturbed: result.n_perturbed,
            n_effective: result.n_effective,
            objective_value: result.objective_value,
        });
    }
    let mean_lambda_hat = trials.iter().map(|t| t.lambda_hat).sum::<f64>() / trials.len() as f64;
    Ok(StressReport {
        spec: *spec,
        n,
        polluted_count: spec.polluted_count(n),
        trials,
        mean_lambda_hat,
        log_ratios,
        non_positive_repaired,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::fx_surface;

    fn spec(lambda: f64, sigma: f64) -> NoiseSpec {
        NoiseSpec {
            lambda,
            sigma,
            seed: 7,
            trials: 3,
        }
    }

    #[test]
    fn polluted_count_is_ceiling() {
        assert_eq!(spec(0.25, 1.0).polluted_count(117), 30);
        assert_eq!(spec(1.0, 1.0).polluted_count(117), 117);
        assert_eq!(spec(0.5, 1.0).polluted_count(10), 5);
        let idx = polluted_indices(117, &spec(0.25, 1.0), 0);
        assert_eq!(idx.len(), 30);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(
            spec(0.0, 1.0).validate(),
            Err(StressError::InvalidLambda(_))
        ));
        assert!(matches!(
            spec(1.5, 1.0).validate(),
            Err(StressError::InvalidLambda(_))
        ));
        assert!(matches!(
            spec(0.5, 0.0).validate(),
            Err(StressError::InvalidSigma(_))
        ));
        let mut s = spec(0.5, 1.0);
        s.trials = 0;
        assert_eq!(s.validate(), Err(StressError::NoTrials));
    }

    #[test]
    fn noise_is_deterministic_and_tiny_noise_is_harmless() {
        let c = vec![0.5; 40];
        let a = inject_noise(&c, &spec(0.3, 0.5), 2).unwrap();
        let b = inject_noise(&c, &spec(0.3, 0.5), 2).unwrap();
        assert_eq!(a, b);
        let (tiny, _) = inject_noise(&c, &spec(0.3, 1e-12), 2).unwrap();
        for (x, y) in tiny.iter().zip(&c) {
            assert!(((x - y) / y).abs() < 1e-9);
        }
        assert!(matches!(
            inject_noise(&[0.1, 0.0], &spec(0.5, 1.0), 0),
            Err(StressError::NonPositivePrice { index: 1, .. })
        ));
    }

    #[test]
    fn gaussian_moments() {
        let n = 20000;
        let z: Vec<f64> = (0..n).map(|j| gaussian(11, 0, j)).collect();
        let mean = z.iter().sum::<f64>() / n as f64;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.03);
        assert!((var - 1.0).abs() < 0.05);
    }

    #[test]
    fn rejects_polluted_baseline() {
        let s = fx_surface(0.2).normalize().unwrap();
        let mut c = s.prices();
        c[3] *= 3.0;
        let bad = s.with_prices(&c).unwrap();
        assert!(matches!(
            run_stress(&bad, &spec(0.25, 1.0), &StressConfig::default()),
            Err(StressError::InputNotArbitrageFree { .. })
        ));
    }

    #[test]
    fn degenerate_noise_changes_nothing() {
        let s = fx_surface(0.2).normalize().unwrap();
        let mut sp = spec(0.25, 1e-12);
        sp.trials = 1;
        let r = run_stress(&s, &sp, &StressConfig::default()).unwrap();
        assert_eq!(r.trials[0].lambda_hat, 0.0);
        assert!(r.trials[0].noisy_arbitrage_free);
    }
}
