#![allow(dead_code)]

pub mod quadrature;

use rayon::prelude::*;
use spinpair::analysis::{estimate_correlation, AnalyzedPair, CorrelationEstimate};
use spinpair::kinematics::{EventSource, FourVector, PairEvent, Truth, PROTON_MASS};
use spinpair::pipeline_io::{for_each_block, run_pipeline, Accumulator, Analysis, RunConfig};
use spinpair::polarimeter::{sample_scatter, AnalyzerConfig};
use spinpair::rng::event_stream;
use spinpair::spin_models::{sample_hidden_state, MeasurementAxis, SourceKind, SourceModelSpec};
use spinpair::timing::CoincidenceClass;

/// Azimuth pairs straight from the polarimeter, every scatter in the band.
pub fn azimuth_pairs(model: SourceModelSpec, analyzing_power: f64, n: u64, seed: u64) -> Vec<AnalyzedPair> {
    let cfg = AnalyzerConfig {
        analyzing_power,
        coulomb_fraction: 0.0,
        ..AnalyzerConfig::default()
    };
    let p = FourVector::on_shell(PROTON_MASS, [0.0, 0.0, 400.0]);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = event_stream(seed, i);
            let mut e = PairEvent::kinematic(i, EventSource::Hydrogen, p, p);
            e.truth = Some(if model.kind == SourceKind::UnpolarizedBackground {
                Truth::unpolarized()
            } else {
                Truth {
                    spin_model: model,
                    hidden: sample_hidden_state(&model, &mut rng),
                    random_pair: false,
                    bunch_offset: 0,
                }
            });
            let [s1, s2] = sample_scatter(&e, &cfg, &mut rng).unwrap().scatter.unwrap();
            AnalyzedPair {
                phi1_deg: s1.phi_deg,
                phi2_deg: s2.phi_deg,
                class: CoincidenceClass::True,
            }
        })
        .collect()
}

/// End-to-end run without an event file.
pub fn pipeline(cfg: &RunConfig) -> Analysis {
    run_pipeline::<Vec<u8>>(cfg, None).unwrap().1
}

pub fn config(seed: u64, n_events: u64, overrides: &[&str]) -> RunConfig {
    let mut all = vec![format!("seed={seed}"), format!("n_events={n_events}")];
    all.extend(overrides.iter().map(|s| s.to_string()));
    RunConfig::from_toml_str("", &all).unwrap()
}

/// `E(a, b)` from a full run at arbitrary axes, with the configured fixed A.
pub fn correlation(cfg: &RunConfig, a: f64, b: f64) -> CorrelationEstimate {
    let mut acc = Accumulator::new(cfg).unwrap();
    for_each_block(cfg, |events| events.iter().try_for_each(|e| acc.push(e))).unwrap();
    let weights = acc.subtraction_weights().unwrap();
    let axis = MeasurementAxis::new;
    estimate_correlation(acc.pairs(), axis(a), axis(b), cfg.analyzer.analyzing_power, &weights).unwrap()
}

/// Mean and standard error of `E(a, b)` over independent 200k-event runs.
pub fn run_series(fraction: f64, a: f64, b: f64, runs: u64, seed0: u64) -> (f64, f64) {
    let values: Vec<f64> = (0..runs)
        .map(|r| {
            let cfg = config(
                seed0 + r,
                200_000,
                &[&format!("random_pair_fraction={fraction}"), "analyzing_power_source=\"fixed\""],
            );
            correlation(&cfg, a, b).e_value
        })
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
