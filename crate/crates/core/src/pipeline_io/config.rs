//! Run configuration.
//!
//! On disk a run is a flat TOML file of `key = value` lines with units in
//! the key names. Every key except `seed` has a default.

use crate::kinematics::{GeneratorConfig, KinematicsError, MomentumWindow, SelectionCuts};
use crate::polarimeter::{AnalyzerConfig, PolarimeterError};
use crate::spin_models::{LhvResponse, SourceKind, SourceModelSpec};
use crate::timing::{TimingConfig, TimingError};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("bad override {0:?}; expected key=value")]
    Override(String),
    #[error("`seed` is required (there is no wall-clock default)")]
    MissingSeed,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Generator(#[from] KinematicsError),
    #[error(transparent)]
    Analyzer(#[from] PolarimeterError),
    #[error(transparent)]
    Timing(#[from] TimingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyzingPowerSource {
    Fixed,
    SelfCalibrated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub cuts: SelectionCuts,
    pub analyzing_power_source: AnalyzingPowerSource,
    pub subtract_randoms: bool,
    pub bell_cases: Vec<u8>,
    pub wigner_cases: Vec<u8>,
    pub energy_bin_mev: f64,
    pub dt_bin_ns: f64,
}

/// Fully resolved, validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub n_events: u64,
    pub write_truth: bool,
    pub model: SourceModelSpec,
    pub generator: GeneratorConfig,
    pub analyzer: AnalyzerConfig,
    pub timing: TimingConfig,
    pub analysis: AnalysisOptions,
}

/// The flat on-disk form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub n_events: u64,
    pub write_truth: bool,

    pub source_model: SourceKind,
    pub lhv_response: LhvResponse,

    pub beam_energy_mev: f64,
    pub peak_sum_h_mev: f64,
    pub peak_sum_c_mev: f64,
    pub peak_sigma_mev: f64,
    pub relative_ke_max_gen_mev: f64,
    pub background_fraction: f64,
    pub carbon_to_hydrogen_ratio: f64,
    pub momentum_min_mev_c: f64,
    pub momentum_max_mev_c: f64,
    pub forward_cone_deg: f64,
    pub max_attempts: u32,

    pub analyzing_power: f64,
    pub coulomb_cut_deg: f64,
    pub band_min_deg: f64,
    pub band_max_deg: f64,
    pub coulomb_fraction: f64,

    pub rf_frequency_mhz: f64,
    pub hardware_window_ns: f64,
    pub true_window_ns: f64,
    pub tdc_bin_ns: f64,
    pub tdc_range_ns: f64,
    pub time_resolution_sigma_ns: f64,
    pub flight_spread_ns: f64,
    pub random_pair_fraction: f64,

    pub relative_ke_cut_mev: f64,
    pub analyzing_power_source: AnalyzingPowerSource,
    pub subtract_randoms: bool,
    pub bell_cases: Vec<u8>,
    pub wigner_cases: Vec<u8>,
    pub energy_bin_mev: f64,
    pub dt_bin_ns: f64,
}

impl Default for ConfigFile {
    fn default() -> Self {
        let g = GeneratorConfig::default();
        let a = AnalyzerConfig::default();
        let t = TimingConfig::default();
        let cuts = SelectionCuts::default();
        ConfigFile {
            seed: None,
            n_events: 100_000,
            write_truth: true,
            source_model: SourceKind::QuantumSinglet,
            lhv_response: LhvResponse::Sign,
            beam_energy_mev: g.beam_energy_mev,
            peak_sum_h_mev: g.peak_sum_h_mev,
            peak_sum_c_mev: g.peak_sum_c_mev,
            peak_sigma_mev: g.peak_sigma_mev,
            relative_ke_max_gen_mev: g.relative_ke_max_gen_mev,
            background_fraction: g.background_fraction,
            carbon_to_hydrogen_ratio: g.carbon_to_hydrogen_ratio,
            momentum_min_mev_c: g.momentum_window.min_mev_c,
            momentum_max_mev_c: g.momentum_window.max_mev_c,
            forward_cone_deg: g.forward_cone_deg,
            max_attempts: g.max_attempts,
            analyzing_power: a.analyzing_power,
            coulomb_cut_deg: a.coulomb_cut_deg,
            band_min_deg: a.band_min_deg,
            band_max_deg: a.band_max_deg,
            coulomb_fraction: a.coulomb_fraction,
            rf_frequency_mhz: t.rf_frequency_mhz,
            hardware_window_ns: t.hardware_window_ns,
            true_window_ns: t.true_window_ns,
            tdc_bin_ns: t.tdc_bin_ns,
            tdc_range_ns: t.tdc_range_ns,
            time_resolution_sigma_ns: t.time_resolution_sigma_ns,
            flight_spread_ns: t.flight_spread_ns,
            random_pair_fraction: t.random_pair_fraction,
            relative_ke_cut_mev: cuts.relative_ke_cut_mev,
            analyzing_power_source: AnalyzingPowerSource::SelfCalibrated,
            subtract_randoms: true,
            bell_cases: (1..=8).collect(),
            wigner_cases: (1..=6).collect(),
            energy_bin_mev: 1.0,
            dt_bin_ns: 1.0,
        }
    }
}

impl ConfigFile {
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let seed = self.seed.ok_or(ConfigError::MissingSeed)?;
        let window = MomentumWindow {
            min_mev_c: self.momentum_min_mev_c,
            max_mev_c: self.momentum_max_mev_c,
        };
        let generator = GeneratorConfig {
            beam_energy_mev: self.beam_energy_mev,
            peak_sum_h_mev: self.peak_sum_h_mev,
            peak_sum_c_mev: self.peak_sum_c_mev,
            peak_sigma_mev: self.peak_sigma_mev,
            relative_ke_max_gen_mev: self.relative_ke_max_gen_mev,
            background_fraction: self.background_fraction,
            carbon_to_hydrogen_ratio: self.carbon_to_hydrogen_ratio,
            momentum_window: window,
            forward_cone_deg: self.forward_cone_deg,
            max_attempts: self.max_attempts,
        };
        let analyzer = AnalyzerConfig {
            analyzing_power: self.analyzing_power,
            coulomb_cut_deg: self.coulomb_cut_deg,
            band_min_deg: self.band_min_deg,
            band_max_deg: self.band_max_deg,
            coulomb_fraction: self.coulomb_fraction,
        };
        let timing = TimingConfig {
            rf_frequency_mhz: self.rf_frequency_mhz,
            hardware_window_ns: self.hardware_window_ns,
            true_window_ns: self.true_window_ns,
            tdc_bin_ns: self.tdc_bin_ns,
            tdc_range_ns: self.tdc_range_ns,
            time_resolution_sigma_ns: self.time_resolution_sigma_ns,
            flight_spread_ns: self.flight_spread_ns,
            random_pair_fraction: self.random_pair_fraction,
        };
        generator.validate()?;
        analyzer.validate()?;
        timing.validate()?;

        if !(self.relative_ke_cut_mev >= 0.0 && self.relative_ke_cut_mev.is_finite()) {
            return Err(ConfigError::Invalid("relative_ke_cut_mev must be non-negative".into()));
        }
        for (name, v) in [("energy_bin_mev", self.energy_bin_mev), ("dt_bin_ns", self.dt_bin_ns)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::Invalid(format!("{name} must be positive")));
            }
        }
        if let Some(bad) = self.bell_cases.iter().find(|&&c| !(1..=8).contains(&c)) {
            return Err(ConfigError::Invalid(format!("bell case {bad} does not exist (1-8)")));
        }
        if let Some(bad) = self.wigner_cases.iter().find(|&&c| !(1..=6).contains(&c)) {
            return Err(ConfigError::Invalid(format!("wigner case {bad} does not exist (1-6)")));
        }
        if self.analyzing_power_source == AnalyzingPowerSource::Fixed && self.analyzing_power <= 0.0 {
            return Err(ConfigError::Invalid(
                "a fixed analyzing power must be positive to calibrate correlations".into(),
            ));
        }

        Ok(RunConfig {
            seed,
            n_events: self.n_events,
            write_truth: self.write_truth,
            model: SourceModelSpec::with_response(self.source_model, self.lhv_response),
            generator,
            analyzer,
            timing,
            analysis: AnalysisOptions {
                cuts: SelectionCuts {
                    relative_ke_cut_mev: self.relative_ke_cut_mev,
                    momentum_window: window,
                },
                analyzing_power_source: self.analyzing_power_source,
                subtract_randoms: self.subtract_randoms,
                bell_cases: self.bell_cases.clone(),
                wigner_cases: self.wigner_cases.clone(),
                energy_bin_mev: self.energy_bin_mev,
                dt_bin_ns: self.dt_bin_ns,
            },
        })
    }
}

/// Parse `key=value`, reading the value as TOML and falling back to a bare string.
fn parse_override(raw: &str) -> Result<(String, toml::Value), ConfigError> {
    let (key, value) = raw.split_once('=').ok_or_else(|| ConfigError::Override(raw.to_string()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::Override(raw.to_string()));
    }
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key.to_string(), parsed))
}

impl RunConfig {
    /// Parse flat TOML text and apply `key=value` overrides on top.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        for raw in overrides {
            let (k, v) = parse_override(raw)?;
            table.insert(k, v);
        }
        let file: ConfigFile = table
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        file.resolve()
    }

    pub fn from_path(path: &Path, overrides: &[String]) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, overrides)
    }

    /// Default configuration with the given seed.
    pub fn with_seed(seed: u64) -> RunConfig {
        ConfigFile {
            seed: Some(seed),
            ..ConfigFile::default()
        }
        .resolve()
        .expect("defaults are valid")
    }

    pub fn to_file(&self) -> ConfigFile {
        let g = &self.generator;
        let a = &self.analyzer;
        let t = &self.timing;
        let o = &self.analysis;
        ConfigFile {
            seed: Some(self.seed),
            n_events: self.n_events,
            write_truth: self.write_truth,
            source_model: self.model.kind,
            lhv_response: self.model.response,
            beam_energy_mev: g.beam_energy_mev,
            peak_sum_h_mev: g.peak_sum_h_mev,
            peak_sum_c_mev: g.peak_sum_c_mev,
            peak_sigma_mev: g.peak_sigma_mev,
            relative_ke_max_gen_mev: g.relative_ke_max_gen_mev,
            background_fraction: g.background_fraction,
            carbon_to_hydrogen_ratio: g.carbon_to_hydrogen_ratio,
            momentum_min_mev_c: g.momentum_window.min_mev_c,
            momentum_max_mev_c: g.momentum_window.max_mev_c,
            forward_cone_deg: g.forward_cone_deg,
            max_attempts: g.max_attempts,
            analyzing_power: a.analyzing_power,
            coulomb_cut_deg: a.coulomb_cut_deg,
            band_min_deg: a.band_min_deg,
            band_max_deg: a.band_max_deg,
            coulomb_fraction: a.coulomb_fraction,
            rf_frequency_mhz: t.rf_frequency_mhz,
            hardware_window_ns: t.hardware_window_ns,
            true_window_ns: t.true_window_ns,
            tdc_bin_ns: t.tdc_bin_ns,
            tdc_range_ns: t.tdc_range_ns,
            time_resolution_sigma_ns: t.time_resolution_sigma_ns,
            flight_spread_ns: t.flight_spread_ns,
            random_pair_fraction: t.random_pair_fraction,
            relative_ke_cut_mev: o.cuts.relative_ke_cut_mev,
            analyzing_power_source: o.analyzing_power_source,
            subtract_randoms: o.subtract_randoms,
            bell_cases: o.bell_cases.clone(),
            wigner_cases: o.wigner_cases.clone(),
            energy_bin_mev: o.energy_bin_mev,
            dt_bin_ns: o.dt_bin_ns,
        }
    }

    /// Flat TOML text that resolves back to this config.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_file()).expect("flat config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_is_required() {
        assert!(matches!(RunConfig::from_toml_str("", &[]), Err(ConfigError::MissingSeed)));
        let cfg = RunConfig::from_toml_str("seed = 7", &[]).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.generator, GeneratorConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml_str("seed = 1\npeak_sigma = 2.0", &[]).unwrap_err();
        assert!(err.to_string().contains("peak_sigma"), "{err}");
    }

    #[test]
    fn overrides_apply() {
        let cfg = RunConfig::from_toml_str(
            "seed = 1\nn_events = 10",
            &[
                "n_events=20".into(),
                "source_model=lhv_vector".into(),
                "peak_sigma_mev = 2.5".into(),
                "bell_cases=[1,8]".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.n_events, 20);
        assert_eq!(cfg.model.kind, SourceKind::LhvVector);
        assert_eq!(cfg.generator.peak_sigma_mev, 2.5);
        assert_eq!(cfg.analysis.bell_cases, vec![1, 8]);
        assert!(matches!(
            RunConfig::from_toml_str("seed = 1", &["oops".into()]),
            Err(ConfigError::Override(_))
        ));
    }

    #[test]
    fn invalid_values_are_rejected() {
        for bad in [
            "background_fraction = 1.5",
            "band_min_deg = 25.0",
            "true_window_ns = 160.0",
            "bell_cases = [9]",
            "energy_bin_mev = 0.0",
            "momentum_min_mev_c = 600.0",
        ] {
            let text = format!("seed = 1\n{bad}");
            assert!(RunConfig::from_toml_str(&text, &[]).is_err(), "{bad} accepted");
        }
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::from_toml_str(
            "seed = 99\nsource_model = \"lhv_deterministic\"\nlhv_response = \"cosine\"\nrandom_pair_fraction = 0.2",
            &[],
        )
        .unwrap();
        let text = cfg.to_toml_string();
        assert_eq!(RunConfig::from_toml_str(&text, &[]).unwrap(), cfg);
    }
}
