//! Cyclotron bunch structure, hit-time stamping, coincidence classification
//! and sideband subtraction of random coincidences.

use crate::histogram::{Histogram, HistogramError};
use crate::kinematics::PairEvent;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TimingError {
    #[error("invalid timing config: {0}")]
    InvalidConfig(String),
    #[error("event {0} has no hit times")]
    MissingTimes(u64),
    #[error("{n_random} random-class events but the sideband holds no whole bunch period")]
    DegenerateSideband { n_random: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingConfig {
    pub rf_frequency_mhz: f64,
    pub hardware_window_ns: f64,
    pub true_window_ns: f64,
    /// TDC quantum; zero disables quantization.
    pub tdc_bin_ns: f64,
    pub tdc_range_ns: f64,
    pub time_resolution_sigma_ns: f64,
    /// Per-track flight-time offsets are uniform in `[0, flight_spread_ns]`.
    pub flight_spread_ns: f64,
    pub random_pair_fraction: f64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            rf_frequency_mhz: 43.0,
            hardware_window_ns: 150.0,
            true_window_ns: 20.0,
            tdc_bin_ns: 1.0,
            tdc_range_ns: 350.0,
            time_resolution_sigma_ns: 0.5,
            flight_spread_ns: 5.0,
            random_pair_fraction: 0.0,
        }
    }
}

impl TimingConfig {
    pub fn validate(&self) -> Result<(), TimingError> {
        let bad = |m: &str| Err(TimingError::InvalidConfig(m.to_string()));
        if !(self.rf_frequency_mhz > 0.0 && self.rf_frequency_mhz.is_finite()) {
            return bad("rf_frequency_mhz must be positive");
        }
        if !(self.true_window_ns > 0.0
            && self.true_window_ns < self.hardware_window_ns
            && self.hardware_window_ns <= self.tdc_range_ns
            && self.tdc_range_ns.is_finite())
        {
            return bad("need 0 < true_window < hardware_window <= tdc_range");
        }
        if !(self.time_resolution_sigma_ns > 0.0 && self.time_resolution_sigma_ns.is_finite()) {
            return bad("time_resolution_sigma_ns must be positive");
        }
        if !(self.tdc_bin_ns >= 0.0 && self.tdc_bin_ns.is_finite()) {
            return bad("tdc_bin_ns must be non-negative");
        }
        if !(self.flight_spread_ns >= 0.0 && self.flight_spread_ns.is_finite()) {
            return bad("flight_spread_ns must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.random_pair_fraction) {
            return bad("random_pair_fraction must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn bunch_period_ns(&self) -> f64 {
        1000.0 / self.rf_frequency_mhz
    }

    /// Whole bunch periods on one side of zero that fit inside `window`.
    fn bunches_within(&self, window_ns: f64) -> u32 {
        (window_ns / self.bunch_period_ns()).floor() as u32
    }

    /// Largest |k| a random pair may be displaced by.
    pub fn max_bunch_offset(&self) -> i32 {
        self.bunches_within(self.hardware_window_ns) as i32
    }

    /// Bunches (both signs together) inside the true window.
    pub fn true_bunches(&self) -> u32 {
        2 * self.bunches_within(self.true_window_ns) + 1
    }

    /// Bunches (both signs together) inside the random sideband.
    pub fn sideband_bunches(&self) -> u32 {
        2 * (self.bunches_within(self.hardware_window_ns) - self.bunches_within(self.true_window_ns))
    }

    /// Time of the reference bunch inside the TDC range.
    fn reference_time_ns(&self) -> f64 {
        0.5 * self.tdc_range_ns
    }

    fn quantize(&self, t: f64) -> f64 {
        if self.tdc_bin_ns > 0.0 {
            (t / self.tdc_bin_ns).floor() * self.tdc_bin_ns
        } else {
            t
        }
    }
}

/// Stamp both hit times. True pairs share a bunch; a random pair's second
/// track comes from bunch `k`, uniform over `−K..=K` (same-bunch randoms
/// included). Returns the event and `k`.
pub fn stamp_times<R: Rng + ?Sized>(
    event: &PairEvent,
    is_random_pair: bool,
    cfg: &TimingConfig,
    rng: &mut R,
) -> (PairEvent, i32) {
    let k = if is_random_pair {
        let kmax = cfg.max_bunch_offset();
        rng.random_range(-kmax..=kmax)
    } else {
        0
    };
    let jitter = Normal::new(0.0, cfg.time_resolution_sigma_ns).expect("validated resolution");
    let t0 = cfg.reference_time_ns();
    let hit = |bunch: i32, rng: &mut R| {
        let flight = cfg.flight_spread_ns * rng.random::<f64>();
        cfg.quantize(t0 + f64::from(bunch) * cfg.bunch_period_ns() + flight + jitter.sample(rng))
    };
    let t1 = hit(0, rng);
    let t2 = hit(k, rng);

    let mut out = *event;
    out.times = Some((t1, t2));
    if let Some(truth) = out.truth.as_mut() {
        truth.random_pair = is_random_pair;
        truth.bunch_offset = k;
    }
    (out, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoincidenceClass {
    True,
    Random,
    OutsideWindow,
}

/// Boundaries are inclusive on the tighter side.
pub fn classify_dt(dt_ns: f64, cfg: &TimingConfig) -> CoincidenceClass {
    let adt = dt_ns.abs();
    if adt <= cfg.true_window_ns {
        CoincidenceClass::True
    } else if adt <= cfg.hardware_window_ns {
        CoincidenceClass::Random
    } else {
        CoincidenceClass::OutsideWindow
    }
}

pub fn delta_t(event: &PairEvent) -> Result<f64, TimingError> {
    let (t1, t2) = event.times.ok_or(TimingError::MissingTimes(event.event_id))?;
    Ok(t2 - t1)
}

pub fn classify_coincidence(event: &PairEvent, cfg: &TimingConfig) -> Result<CoincidenceClass, TimingError> {
    Ok(classify_dt(delta_t(event)?, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CoincidenceCounts {
    pub n_true: u64,
    pub n_random: u64,
    pub n_outside: u64,
}

impl CoincidenceCounts {
    pub fn record(&mut self, class: CoincidenceClass) {
        match class {
            CoincidenceClass::True => self.n_true += 1,
            CoincidenceClass::Random => self.n_random += 1,
            CoincidenceClass::OutsideWindow => self.n_outside += 1,
        }
    }

    pub fn merge(&mut self, o: &CoincidenceCounts) {
        self.n_true += o.n_true;
        self.n_random += o.n_random;
        self.n_outside += o.n_outside;
    }
}

/// Signed per-class weights applied by the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubtractionWeights {
    pub true_weight: f64,
    pub random_weight: f64,
    /// True-window bunches over sideband bunches.
    pub sideband_ratio: f64,
}

impl SubtractionWeights {
    /// Keep true-window events only, no subtraction.
    pub const TRUE_ONLY: SubtractionWeights = SubtractionWeights {
        true_weight: 1.0,
        random_weight: 0.0,
        sideband_ratio: 0.0,
    };

    pub fn weight(&self, class: CoincidenceClass) -> f64 {
        match class {
            CoincidenceClass::True => self.true_weight,
            CoincidenceClass::Random => self.random_weight,
            CoincidenceClass::OutsideWindow => 0.0,
        }
    }
}

/// Weights that remove the expected random contribution from true-window
/// counts: true events `+1`, sideband events `−w` with `w` the ratio of
/// whole bunch periods in the true window to those in the sideband.
pub fn random_subtraction_weights(
    counts: &CoincidenceCounts,
    cfg: &TimingConfig,
) -> Result<SubtractionWeights, TimingError> {
    let side = cfg.sideband_bunches();
    if side == 0 {
        if counts.n_random > 0 {
            return Err(TimingError::DegenerateSideband {
                n_random: counts.n_random,
            });
        }
        return Ok(SubtractionWeights::TRUE_ONLY);
    }
    let w = f64::from(cfg.true_bunches()) / f64::from(side);
    Ok(SubtractionWeights {
        true_weight: 1.0,
        random_weight: -w,
        sideband_ratio: w,
    })
}

/// Empty Δt histogram spanning the hardware window.
pub fn delta_t_histogram(cfg: &TimingConfig, bin_ns: f64) -> Result<Histogram, HistogramError> {
    if !(bin_ns > 0.0 && bin_ns.is_finite()) {
        return Err(HistogramError::InvalidBinWidth(bin_ns));
    }
    let half = (cfg.hardware_window_ns / bin_ns).ceil() * bin_ns;
    Histogram::centered(-half, half, bin_ns)
}
