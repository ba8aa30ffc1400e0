//! Left/right classification and analyzing-power-calibrated correlation
//! estimates.

use crate::spin_models::{normalize_deg, MeasurementAxis};
use crate::timing::{CoincidenceClass, SubtractionWeights};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_2_PI;
use thiserror::Error;

/// Events per reduction chunk. Floating-point sums are formed per chunk and
/// combined in chunk order, so results do not depend on the thread count.
pub const REDUCTION_CHUNK: usize = 8192;

#[derive(Debug, Error, PartialEq)]
pub enum EstimateError {
    #[error("analyzing power must be positive for calibration, got {0}")]
    Calibration(f64),
    #[error("no accepted events to estimate from")]
    EmptySample,
    #[error("net event weight is not positive ({0}) after random subtraction")]
    NonPositiveWeight(f64),
}

/// Dilution of a spin correlation by binary left/right classification.
pub const CLASSIFICATION_DILUTION: f64 = FRAC_2_PI;

/// `sgn(cos(φ − axis))`, with `φ − axis = ±90°` counted as +1.
pub fn classify(phi_deg: f64, axis: MeasurementAxis) -> i8 {
    let d = normalize_deg(phi_deg - axis.angle_deg());
    if d <= 90.0 || d >= 270.0 {
        1
    } else {
        -1
    }
}

/// An accepted pair reduced to what the estimators need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzedPair {
    pub phi1_deg: f64,
    pub phi2_deg: f64,
    pub class: CoincidenceClass,
}

/// Weighted outcome counts, indexed `pp, pm, mp, mm`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub n_pp: f64,
    pub n_pm: f64,
    pub n_mp: f64,
    pub n_mm: f64,
}

impl OutcomeCounts {
    pub fn total(&self) -> f64 {
        self.n_pp + self.n_pm + self.n_mp + self.n_mm
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub axis_a: MeasurementAxis,
    pub axis_b: MeasurementAxis,
    /// Calibrated estimate of E(a, b).
    pub e_value: f64,
    pub sigma: f64,
    /// Raw signed moment ⟨s1·s2⟩.
    pub raw_moment: f64,
    pub counts: OutcomeCounts,
    pub n_events: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct ClassCounts {
    true_: [u64; 4],
    random: [u64; 4],
}

impl ClassCounts {
    fn add(mut self, o: ClassCounts) -> ClassCounts {
        for i in 0..4 {
            self.true_[i] += o.true_[i];
            self.random[i] += o.random[i];
        }
        self
    }
}

fn outcome_index(s1: i8, s2: i8) -> usize {
    match (s1 > 0, s2 > 0) {
        (true, true) => 0,
        (true, false) => 1,
        (false, true) => 2,
        (false, false) => 3,
    }
}

fn count_outcomes(pairs: &[AnalyzedPair], a: MeasurementAxis, b: MeasurementAxis) -> ClassCounts {
    pairs
        .par_chunks(REDUCTION_CHUNK)
        .map(|chunk| {
            let mut c = ClassCounts::default();
            for p in chunk {
                let idx = outcome_index(classify(p.phi1_deg, a), classify(p.phi2_deg, b));
                match p.class {
                    CoincidenceClass::True => c.true_[idx] += 1,
                    CoincidenceClass::Random => c.random[idx] += 1,
                    CoincidenceClass::OutsideWindow => {}
                }
            }
            c
        })
        .reduce(ClassCounts::default, ClassCounts::add)
}

/// Net weight, sum of squared weights and events carrying nonzero weight.
fn weight_totals(n_true: u64, n_random: u64, w: &SubtractionWeights) -> (f64, f64, u64) {
    let (nt, nr) = (n_true as f64, n_random as f64);
    let sum = w.true_weight * nt + w.random_weight * nr;
    let sum_sq = w.true_weight.powi(2) * nt + w.random_weight.powi(2) * nr;
    let used = if w.true_weight != 0.0 { n_true } else { 0 } + if w.random_weight != 0.0 { n_random } else { 0 };
    (sum, sum_sq, used)
}

/// Calibrated correlation `E(a, b) = ⟨s1 s2⟩ / ((2/π)² A²)` with signed
/// coincidence weights.
pub fn estimate_correlation(
    pairs: &[AnalyzedPair],
    axis_a: MeasurementAxis,
    axis_b: MeasurementAxis,
    analyzing_power: f64,
    weights: &SubtractionWeights,
) -> Result<CorrelationEstimate, EstimateError> {
    if !(analyzing_power > 0.0) {
        return Err(EstimateError::Calibration(analyzing_power));
    }
    let c = count_outcomes(pairs, axis_a, axis_b);
    let n_true: u64 = c.true_.iter().sum();
    let n_random: u64 = c.random.iter().sum();
    let (sum_w, sum_w2, n_events) = weight_totals(n_true, n_random, weights);
    if n_events == 0 {
        return Err(EstimateError::EmptySample);
    }
    if !(sum_w > 0.0) {
        return Err(EstimateError::NonPositiveWeight(sum_w));
    }
    let weighted = |i: usize| weights.true_weight * c.true_[i] as f64 + weights.random_weight * c.random[i] as f64;
    let counts = OutcomeCounts {
        n_pp: weighted(0),
        n_pm: weighted(1),
        n_mp: weighted(2),
        n_mm: weighted(3),
    };
    let moment = (counts.n_pp + counts.n_mm - counts.n_pm - counts.n_mp) / sum_w;
    let n_eff = sum_w * sum_w / sum_w2;
    let scale = (CLASSIFICATION_DILUTION * analyzing_power).powi(2);
    let sigma = ((1.0 - moment * moment).max(0.0) / n_eff).sqrt() / scale;
    Ok(CorrelationEstimate {
        axis_a,
        axis_b,
        e_value: moment / scale,
        sigma,
        raw_moment: moment,
        counts,
        n_events,
    })
}

/// A probability with its propagated error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub value: f64,
    pub sigma: f64,
}

/// Same-sign probability `(1 + E)/2`.
pub fn wigner_probability(estimate: &CorrelationEstimate) -> ProbabilityEstimate {
    ProbabilityEstimate {
        value: 0.5 * (1.0 + estimate.e_value),
        sigma: 0.5 * estimate.sigma,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AnalyzingPowerCalibration {
    Calibrated {
        value: f64,
        sigma: f64,
        moment: f64,
        moment_sigma: f64,
    },
    /// ⟨cos(φ1 − φ2)⟩ was not negative, so there is no real root.
    Failed { moment: f64, moment_sigma: f64 },
}

impl AnalyzingPowerCalibration {
    pub fn value(&self) -> Option<f64> {
        match self {
            AnalyzingPowerCalibration::Calibrated { value, .. } => Some(*value),
            AnalyzingPowerCalibration::Failed { .. } => None,
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self {
            AnalyzingPowerCalibration::Calibrated { sigma, .. } => Some(*sigma),
            AnalyzingPowerCalibration::Failed { .. } => None,
        }
    }
}

/// Infer A from singlet pairs: `⟨cos(φ1 − φ2)⟩ = −A²/2`.
pub fn self_calibrate_analyzing_power(
    pairs: &[AnalyzedPair],
    weights: &SubtractionWeights,
) -> Result<AnalyzingPowerCalibration, EstimateError> {
    // (Σw, Σw², Σw·cos, Σw·cos², events with weight)
    let sums: Vec<[f64; 5]> = pairs
        .par_chunks(REDUCTION_CHUNK)
        .map(|chunk| {
            let mut s = [0.0; 5];
            for p in chunk {
                let w = weights.weight(p.class);
                if w == 0.0 {
                    continue;
                }
                let c = (p.phi1_deg - p.phi2_deg).to_radians().cos();
                s[0] += w;
                s[1] += w * w;
                s[2] += w * c;
                s[3] += w * c * c;
                s[4] += 1.0;
            }
            s
        })
        .collect();
    let mut t = [0.0; 5];
    for s in &sums {
        for i in 0..5 {
            t[i] += s[i];
        }
    }
    let [sum_w, sum_w2, sum_c, sum_c2, used] = t;
    if used == 0.0 {
        return Err(EstimateError::EmptySample);
    }
    if !(sum_w > 0.0) {
        return Err(EstimateError::NonPositiveWeight(sum_w));
    }
    let moment = sum_c / sum_w;
    let variance = (sum_c2 / sum_w - moment * moment).max(0.0);
    let moment_sigma = (variance * sum_w2 / (sum_w * sum_w)).sqrt();
    if moment >= 0.0 {
        return Ok(AnalyzingPowerCalibration::Failed { moment, moment_sigma });
    }
    let value = (-2.0 * moment).sqrt();
    Ok(AnalyzingPowerCalibration::Calibrated {
        value,
        sigma: moment_sigma / value,
        moment,
        moment_sigma,
    })
}
