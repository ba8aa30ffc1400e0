//! Run drivers: event generation, offline analysis and the combined pipeline.
//!
//! Every event draws from its own random stream keyed by `(seed, event_id)`,
//! and every reduction sums fixed-size chunks in order, so outputs do not
//! depend on the number of worker threads.

use super::config::{AnalyzingPowerSource, ConfigError, ConfigFile, RunConfig};
use super::event_file::{EventFileError, EventReader, EventWriter};
use crate::analysis::{
    bell_case, estimate_correlation, evaluate_bell, evaluate_wigner, self_calibrate_analyzing_power,
    wigner_case, wigner_probability, AnalyzedPair, AnalyzingPowerCalibration, CorrelationEstimate, EstimateError,
    InequalityError, InequalityResult,
};
use crate::histogram::{Histogram, HistogramError};
use crate::kinematics::{
    energy_sum_histogram, generate_background_event, generate_signal_event, Channel, EventSource, KinematicsError,
    PairEvent, SelectionReport, Truth,
};
use crate::polarimeter::{accept_scatter, sample_scatter, BandCut, PolarimeterError, ScatterRejection};
use crate::rng::event_stream;
use crate::spin_models::{sample_hidden_state, MeasurementAxis};
use crate::timing::{
    classify_coincidence, delta_t, delta_t_histogram, random_subtraction_weights, stamp_times, CoincidenceClass,
    CoincidenceCounts, SubtractionWeights, TimingError,
};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

/// Events generated per parallel block.
pub const GENERATION_BLOCK: u64 = 1 << 16;

pub const RESULTS_FORMAT: &str = "spinpair-results/1";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("event {event_id}: {source}")]
    Generation {
        event_id: u64,
        #[source]
        source: KinematicsError,
    },
    #[error(transparent)]
    Polarimeter(#[from] PolarimeterError),
    #[error(transparent)]
    Timing(#[from] TimingError),
    #[error(transparent)]
    EventFile(#[from] EventFileError),
    #[error(transparent)]
    Histogram(#[from] HistogramError),
    #[error(transparent)]
    Inequality(#[from] InequalityError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot serialize results: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot write table: {0}")]
    Csv(#[from] csv::Error),
}

impl PipelineError {
    /// Process exit code: 2 for configuration problems, 3 for data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GenerationReport {
    pub seed: u64,
    pub n_events: u64,
    pub hydrogen: u64,
    pub carbon: u64,
    pub background: u64,
    pub random_pairs: u64,
    /// Kinematic draws rejected by the momentum window and redrawn.
    pub regenerations: u64,
}

impl GenerationReport {
    fn record(&mut self, e: &PairEvent, regenerations: u32) {
        self.n_events += 1;
        match e.source {
            EventSource::Hydrogen => self.hydrogen += 1,
            EventSource::Carbon => self.carbon += 1,
            EventSource::Background => self.background += 1,
        }
        if e.truth.is_some_and(|t| t.random_pair) {
            self.random_pairs += 1;
        }
        self.regenerations += u64::from(regenerations);
    }
}

/// Fully simulate one event: source, kinematics, coincidence type, hidden
/// state, analyzer scatters and hit times.
pub fn generate_event(cfg: &RunConfig, event_id: u64) -> Result<(PairEvent, u32), PipelineError> {
    let mut rng = event_stream(cfg.seed, event_id);
    let g = &cfg.generator;
    let background = rng.random::<f64>() < g.background_fraction;
    let (mut event, regenerations) = if background {
        (generate_background_event(g, event_id, &mut rng), 0)
    } else {
        let channel = if rng.random::<f64>() < g.carbon_probability() {
            Channel::Carbon
        } else {
            Channel::Hydrogen
        };
        generate_signal_event(g, channel, event_id, &mut rng)
            .map_err(|source| PipelineError::Generation { event_id, source })?
    };
    let random_pair = rng.random::<f64>() < cfg.timing.random_pair_fraction;
    event.truth = Some(if background || random_pair {
        Truth::unpolarized()
    } else {
        Truth {
            spin_model: cfg.model,
            hidden: sample_hidden_state(&cfg.model, &mut rng),
            random_pair: false,
            bunch_offset: 0,
        }
    });
    let event = sample_scatter(&event, &cfg.analyzer, &mut rng)?;
    let (event, _) = stamp_times(&event, random_pair, &cfg.timing, &mut rng);
    Ok((event, regenerations))
}

/// Generate events `start..end` in parallel, in id order.
pub fn generate_range(cfg: &RunConfig, start: u64, end: u64) -> Result<Vec<(PairEvent, u32)>, PipelineError> {
    let results: Vec<_> = (start..end).into_par_iter().map(|id| generate_event(cfg, id)).collect();
    // first failure in id order, independent of scheduling
    results.into_iter().collect()
}

/// Generate all `cfg.n_events` events block by block, handing each block
/// to `sink` in order.
pub fn for_each_block<F>(cfg: &RunConfig, mut sink: F) -> Result<GenerationReport, PipelineError>
where
    F: FnMut(&[PairEvent]) -> Result<(), PipelineError>,
{
    let mut report = GenerationReport {
        seed: cfg.seed,
        ..GenerationReport::default()
    };
    let mut start = 0;
    while start < cfg.n_events {
        let end = (start + GENERATION_BLOCK).min(cfg.n_events);
        let block = generate_range(cfg, start, end)?;
        let events: Vec<PairEvent> = block
            .iter()
            .map(|(e, regen)| {
                report.record(e, *regen);
                *e
            })
            .collect();
        sink(&events)?;
        start = end;
    }
    Ok(report)
}

/// Generate and write an event file.
pub fn run_generate<W: Write>(cfg: &RunConfig, out: W) -> Result<GenerationReport, PipelineError> {
    let mut writer = EventWriter::new(out, cfg.write_truth)?;
    let report = for_each_block(cfg, |events| {
        for e in events {
            writer.write(e)?;
        }
        Ok(())
    })?;
    writer.finish()?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScatterReport {
    pub accepted: u64,
    pub not_scattered: u64,
    pub coulomb: u64,
    pub below_band: u64,
    pub above_band: u64,
}

impl ScatterReport {
    fn record(&mut self, outcome: Result<(), ScatterRejection>) {
        match outcome {
            Ok(()) => self.accepted += 1,
            Err(ScatterRejection::NotScattered) => self.not_scattered += 1,
            Err(ScatterRejection::Track { cut, .. }) => match cut {
                BandCut::Coulomb => self.coulomb += 1,
                BandCut::BelowBand => self.below_band += 1,
                BandCut::AboveBand => self.above_band += 1,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    EmptySample,
    CalibrationFailed,
    /// Random subtraction left no positive net weight.
    NonPositiveWeight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzingPowerReport {
    pub source: AnalyzingPowerSource,
    pub value: Option<f64>,
    pub sigma: Option<f64>,
    pub calibration: Option<AnalyzingPowerCalibration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub format: String,
    pub status: RunStatus,
    pub config: ConfigFile,
    pub n_input: u64,
    pub selection: SelectionReport,
    pub scatter: ScatterReport,
    pub coincidences: CoincidenceCounts,
    pub subtraction: SubtractionWeights,
    /// Accepted pairs with non-zero weight.
    pub n_analyzed: u64,
    pub analyzing_power: AnalyzingPowerReport,
    pub correlations: Vec<CorrelationEstimate>,
    pub bell: Vec<InequalityResult>,
    pub wigner: Vec<InequalityResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub document: ResultsDocument,
    pub energy_sum: Histogram,
    pub delta_t: Histogram,
}

/// Streaming event reduction.
pub struct Accumulator {
    cfg: RunConfig,
    n_input: u64,
    selection: SelectionReport,
    scatter: ScatterReport,
    coincidences: CoincidenceCounts,
    energy_sum: Histogram,
    delta_t: Histogram,
    pairs: Vec<AnalyzedPair>,
}

impl Accumulator {
    pub fn new(cfg: &RunConfig) -> Result<Self, PipelineError> {
        Ok(Accumulator {
            cfg: cfg.clone(),
            n_input: 0,
            selection: SelectionReport::default(),
            scatter: ScatterReport::default(),
            coincidences: CoincidenceCounts::default(),
            energy_sum: energy_sum_histogram(cfg.analysis.energy_bin_mev)?,
            delta_t: delta_t_histogram(&cfg.timing, cfg.analysis.dt_bin_ns)?,
            pairs: Vec::new(),
        })
    }

    pub fn push(&mut self, e: &PairEvent) -> Result<(), PipelineError> {
        self.n_input += 1;
        self.delta_t.fill(delta_t(e)?);

        let selected = self.cfg.analysis.cuts.check(e);
        self.selection.record(selected);
        if selected.is_err() {
            return Ok(());
        }
        self.energy_sum.fill(e.energy_sum());

        let scattered = accept_scatter(e, &self.cfg.analyzer);
        self.scatter.record(scattered);
        if scattered.is_err() {
            return Ok(());
        }

        let class = classify_coincidence(e, &self.cfg.timing)?;
        self.coincidences.record(class);
        if class == CoincidenceClass::OutsideWindow {
            return Ok(());
        }
        let [s1, s2] = e.scatter.expect("accepted scatter");
        self.pairs.push(AnalyzedPair {
            phi1_deg: s1.phi_deg,
            phi2_deg: s2.phi_deg,
            class,
        });
        Ok(())
    }

    /// Accepted pairs so far.
    pub fn pairs(&self) -> &[AnalyzedPair] {
        &self.pairs
    }

    pub fn subtraction_weights(&self) -> Result<SubtractionWeights, PipelineError> {
        if self.cfg.analysis.subtract_randoms {
            Ok(random_subtraction_weights(&self.coincidences, &self.cfg.timing)?)
        } else {
            Ok(SubtractionWeights::TRUE_ONLY)
        }
    }

    pub fn finish(self) -> Result<Analysis, PipelineError> {
        let weights = self.subtraction_weights()?;
        let opts = &self.cfg.analysis;
        let n_analyzed = self.pairs.iter().filter(|p| weights.weight(p.class) != 0.0).count() as u64;

        let mut doc = ResultsDocument {
            format: RESULTS_FORMAT.to_string(),
            status: RunStatus::Ok,
            config: self.cfg.to_file(),
            n_input: self.n_input,
            selection: self.selection,
            scatter: self.scatter,
            coincidences: self.coincidences,
            subtraction: weights,
            n_analyzed,
            analyzing_power: AnalyzingPowerReport {
                source: opts.analyzing_power_source,
                value: None,
                sigma: None,
                calibration: None,
            },
            correlations: Vec::new(),
            bell: Vec::new(),
            wigner: Vec::new(),
        };

        let status = if n_analyzed == 0 {
            RunStatus::EmptySample
        } else {
            fill_estimates(&mut doc, &self.pairs, &self.cfg, &weights)?
        };
        doc.status = status;
        Ok(Analysis {
            document: doc,
            energy_sum: self.energy_sum,
            delta_t: self.delta_t,
        })
    }
}

fn status_of(e: EstimateError) -> RunStatus {
    match e {
        EstimateError::EmptySample => RunStatus::EmptySample,
        EstimateError::NonPositiveWeight(_) => RunStatus::NonPositiveWeight,
        EstimateError::Calibration(_) => RunStatus::CalibrationFailed,
    }
}

fn fill_estimates(
    doc: &mut ResultsDocument,
    pairs: &[AnalyzedPair],
    cfg: &RunConfig,
    weights: &SubtractionWeights,
) -> Result<RunStatus, PipelineError> {
    let opts = &cfg.analysis;
    let analyzing_power = match opts.analyzing_power_source {
        AnalyzingPowerSource::Fixed => {
            doc.analyzing_power.value = Some(cfg.analyzer.analyzing_power);
            doc.analyzing_power.sigma = Some(0.0);
            cfg.analyzer.analyzing_power
        }
        AnalyzingPowerSource::SelfCalibrated => {
            let cal = match self_calibrate_analyzing_power(pairs, weights) {
                Ok(cal) => cal,
                Err(e) => return Ok(status_of(e)),
            };
            doc.analyzing_power.value = cal.value();
            doc.analyzing_power.sigma = cal.sigma();
            doc.analyzing_power.calibration = Some(cal.clone());
            match cal.value() {
                Some(a) => a,
                None => return Ok(RunStatus::CalibrationFailed),
            }
        }
    };

    let mut cache: Vec<CorrelationEstimate> = Vec::new();
    let mut estimate = |a: MeasurementAxis, b: MeasurementAxis| -> Result<CorrelationEstimate, EstimateError> {
        if let Some(e) = cache.iter().find(|e| e.axis_a == a && e.axis_b == b) {
            return Ok(e.clone());
        }
        let e = estimate_correlation(pairs, a, b, analyzing_power, weights)?;
        cache.push(e.clone());
        Ok(e)
    };

    let mut bell = Vec::new();
    for &id in &opts.bell_cases {
        let case = bell_case(id)?;
        let mut est = Vec::with_capacity(4);
        for (a, b) in case.axis_pairs() {
            match estimate(a, b) {
                Ok(e) => est.push(e),
                Err(e) => return Ok(status_of(e)),
            }
        }
        bell.push(evaluate_bell(&case, [&est[0], &est[1], &est[2], &est[3]])?);
    }
    let mut wigner = Vec::new();
    for &id in &opts.wigner_cases {
        let case = wigner_case(id)?;
        let mut probs = Vec::with_capacity(3);
        for (a, b) in case.axis_pairs() {
            match estimate(a, b) {
                Ok(e) => probs.push(wigner_probability(&e)),
                Err(e) => return Ok(status_of(e)),
            }
        }
        wigner.push(evaluate_wigner(&case, [probs[0], probs[1], probs[2]]));
    }
    if let (Some(a), Some(sigma_a)) = (doc.analyzing_power.value, doc.analyzing_power.sigma) {
        let r = sigma_a / a;
        bell = bell.into_iter().map(|b| b.with_calibration_uncertainty(r)).collect();
        wigner = wigner.into_iter().map(|w| w.with_calibration_uncertainty(r)).collect();
    }
    doc.correlations = cache;
    doc.bell = bell;
    doc.wigner = wigner;
    Ok(RunStatus::Ok)
}

/// Analyze in-memory events.
pub fn analyze_events(events: &[PairEvent], cfg: &RunConfig) -> Result<Analysis, PipelineError> {
    let mut acc = Accumulator::new(cfg)?;
    for e in events {
        acc.push(e)?;
    }
    acc.finish()
}

/// Analyze an event file.
pub fn run_analyze<R: BufRead>(input: R, cfg: &RunConfig) -> Result<Analysis, PipelineError> {
    let mut acc = Accumulator::new(cfg)?;
    for e in EventReader::new(input)? {
        acc.push(&e?)?;
    }
    acc.finish()
}

/// Calibrate the analyzing power from an event file, whatever the
/// configured source.
pub fn run_calibrate<R: BufRead>(input: R, cfg: &RunConfig) -> Result<Analysis, PipelineError> {
    let mut cfg = cfg.clone();
    cfg.analysis.analyzing_power_source = AnalyzingPowerSource::SelfCalibrated;
    cfg.analysis.bell_cases.clear();
    cfg.analysis.wigner_cases.clear();
    run_analyze(input, &cfg)
}

/// Generate and analyze in one pass, optionally writing the events too.
/// Produces the same analysis as `run_generate` followed by `run_analyze`.
pub fn run_pipeline<W: Write>(
    cfg: &RunConfig,
    events_out: Option<W>,
) -> Result<(GenerationReport, Analysis), PipelineError> {
    let mut acc = Accumulator::new(cfg)?;
    let mut writer = match events_out {
        Some(w) => Some(EventWriter::new(w, cfg.write_truth)?),
        None => None,
    };
    let report = for_each_block(cfg, |events| {
        for e in events {
            if let Some(w) = writer.as_mut() {
                w.write(e)?;
            }
            acc.push(e)?;
        }
        Ok(())
    })?;
    if let Some(w) = writer {
        w.finish()?;
    }
    Ok((report, acc.finish()?))
}

fn histogram_csv(h: &Histogram) -> Result<Vec<u8>, PipelineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bin_center", "count"])?;
    for (center, count) in h.rows() {
        w.write_record([center.to_string(), count.to_string()])?;
    }
    w.into_inner().map_err(|e| PipelineError::Io(e.into_error()))
}

fn inequality_csv(results: &[InequalityResult]) -> Result<Vec<u8>, PipelineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["case_id", "measured", "sigma", "qm", "limit"])?;
    for r in results {
        w.write_record([
            r.case_id.to_string(),
            r.measured.to_string(),
            r.sigma.to_string(),
            r.prediction_qm.to_string(),
            r.classical_limit.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| PipelineError::Io(e.into_error()))
}

impl Analysis {
    pub fn results_json(&self) -> Result<String, PipelineError> {
        let mut s = serde_json::to_string_pretty(&self.document)?;
        s.push('\n');
        Ok(s)
    }

    /// `results.json` plus the spectrum and inequality CSV tables.
    pub fn write_outputs(&self, dir: &Path) -> Result<(), PipelineError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("results.json"), self.results_json()?)?;
        fs::write(dir.join("energy_sum.csv"), histogram_csv(&self.energy_sum)?)?;
        fs::write(dir.join("delta_t.csv"), histogram_csv(&self.delta_t)?)?;
        fs::write(dir.join("bell.csv"), inequality_csv(&self.document.bell)?)?;
        fs::write(dir.join("wigner.csv"), inequality_csv(&self.document.wigner)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64, n: u64) -> RunConfig {
        let mut cfg = RunConfig::with_seed(seed);
        cfg.n_events = n;
        cfg
    }

    #[test]
    fn events_depend_only_on_seed_and_id() {
        let cfg = small(11, 10);
        let (a, _) = generate_event(&cfg, 7).unwrap();
        let (b, _) = generate_event(&cfg, 7).unwrap();
        assert_eq!(a, b);
        let (c, _) = generate_event(&small(12, 10), 7).unwrap();
        assert_ne!(a, c);
        let block = generate_range(&cfg, 5, 9).unwrap();
        assert_eq!(block[2].0, a);
    }

    #[test]
    fn generated_events_are_complete() {
        let mut cfg = small(3, 2000);
        cfg.generator.background_fraction = 0.3;
        cfg.timing.random_pair_fraction = 0.2;
        let mut seen = 0;
        let report = for_each_block(&cfg, |events| {
            for e in events {
                assert!(e.scatter.is_some() && e.times.is_some());
                let t = e.truth.unwrap();
                if !t.random_pair {
                    assert_eq!(t.bunch_offset, 0);
                }
                if e.source == EventSource::Background || t.random_pair {
                    assert_eq!(t.hidden, crate::spin_models::HiddenState::Unpolarized);
                }
                seen += 1;
            }
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, 2000);
        assert_eq!(report.hydrogen + report.carbon + report.background, 2000);
        assert!(report.random_pairs > 300 && report.random_pairs < 500);
    }

    #[test]
    fn pipeline_matches_generate_then_analyze() {
        let cfg = small(5, 3000);
        let mut file = Vec::new();
        let report = run_generate(&cfg, &mut file).unwrap();
        let from_file = run_analyze(file.as_slice(), &cfg).unwrap();
        let (report2, direct) = run_pipeline::<Vec<u8>>(&cfg, None).unwrap();
        assert_eq!(report, report2);
        assert_eq!(from_file, direct);
        assert_eq!(from_file.results_json().unwrap(), direct.results_json().unwrap());
    }

    #[test]
    fn empty_run_reports_empty_sample() {
        let cfg = small(1, 0);
        let (report, analysis) = run_pipeline::<Vec<u8>>(&cfg, None).unwrap();
        assert_eq!(report.n_events, 0);
        assert_eq!(analysis.document.status, RunStatus::EmptySample);
        assert!(analysis.document.bell.is_empty());
    }

    #[test]
    fn accumulator_counts_are_consistent() {
        let mut cfg = small(8, 5000);
        cfg.generator.background_fraction = 0.5;
        let (_, a) = run_pipeline::<Vec<u8>>(&cfg, None).unwrap();
        let d = &a.document;
        assert_eq!(d.n_input, 5000);
        assert_eq!(d.selection.input, 5000);
        assert_eq!(a.delta_t.total(), 5000);
        assert_eq!(a.energy_sum.total(), d.selection.pass_relative_ke);
        let s = d.scatter;
        assert_eq!(
            s.accepted + s.not_scattered + s.coulomb + s.below_band + s.above_band,
            d.selection.pass_relative_ke
        );
        let c = d.coincidences;
        assert_eq!(c.n_true + c.n_random + c.n_outside, s.accepted);
        assert_eq!(d.status, RunStatus::Ok);
        assert_eq!(d.bell.len(), 8);
        assert_eq!(d.wigner.len(), 6);
    }

    #[test]
    fn outputs_are_written() {
        let cfg = small(2, 500);
        let (_, a) = run_pipeline::<Vec<u8>>(&cfg, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        a.write_outputs(dir.path()).unwrap();
        let bell = fs::read_to_string(dir.path().join("bell.csv")).unwrap();
        assert!(bell.starts_with("case_id,measured,sigma,qm,limit\n1,"));
        assert_eq!(bell.lines().count(), 9);
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("results.json")).unwrap()).unwrap();
        assert_eq!(json["config"]["seed"], 2);
        assert!(json["config"].get("workers").is_none());
        let dt = fs::read_to_string(dir.path().join("delta_t.csv")).unwrap();
        assert!(dt.starts_with("bin_center,count\n"));
    }
}
