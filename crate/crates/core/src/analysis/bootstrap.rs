//! Event-level bootstrap error estimates.

use crate::rng::{stream, Purpose};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

pub const MIN_RESAMPLES: usize = 50;

#[derive(Debug, Error, PartialEq)]
pub enum BootstrapError {
    #[error("bootstrap needs at least {MIN_RESAMPLES} resamples, got {0}")]
    TooFewResamples(usize),
    #[error("cannot resample an empty sample")]
    EmptySample,
}

/// Standard deviation of `estimator` over `resamples` draws with replacement.
///
/// Resample `b` uses its own stream of `seed`, so the result is independent
/// of scheduling.
pub fn bootstrap_errors<T, F>(items: &[T], estimator: F, resamples: usize, seed: u64) -> Result<f64, BootstrapError>
where
    T: Clone + Send + Sync,
    F: Fn(&[T]) -> f64 + Sync,
{
    if resamples < MIN_RESAMPLES {
        return Err(BootstrapError::TooFewResamples(resamples));
    }
    if items.is_empty() {
        return Err(BootstrapError::EmptySample);
    }
    let n = items.len();
    let values: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, Purpose::Bootstrap, b as u64);
            let sample: Vec<T> = (0..n).map(|_| items[rng.random_range(0..n)].clone()).collect();
            estimator(&sample)
        })
        .collect();
    let mean = values.iter().sum::<f64>() / resamples as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    Ok(var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_estimator_has_no_spread() {
        let items: Vec<f64> = (0..100).map(f64::from).collect();
        assert_eq!(bootstrap_errors(&items, |_| 3.0, 60, 1), Ok(0.0));
    }

    #[test]
    fn sample_mean_error() {
        // mean of 0/1 values: σ = 0.5/√n
        let items: Vec<f64> = (0..2_000).map(|i| f64::from(i % 2)).collect();
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let sigma = bootstrap_errors(&items, mean, 400, 7).unwrap();
        let expected = 0.5 / (2_000f64).sqrt();
        assert!((sigma / expected - 1.0).abs() < 0.15, "{sigma} vs {expected}");
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            bootstrap_errors(&[1.0], |_| 0.0, 10, 1),
            Err(BootstrapError::TooFewResamples(10))
        );
        assert_eq!(
            bootstrap_errors::<f64, _>(&[], |_| 0.0, 100, 1),
            Err(BootstrapError::EmptySample)
        );
    }

    #[test]
    fn reproducible() {
        let items: Vec<f64> = (0..500).map(|i| (i as f64).sin()).collect();
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        assert_eq!(
            bootstrap_errors(&items, mean, 100, 3),
            bootstrap_errors(&items, mean, 100, 3)
        );
    }
}
