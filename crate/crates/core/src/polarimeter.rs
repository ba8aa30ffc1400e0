//! Spin-dependent scattering in the carbon analyzer.
//!
//! A scatter at azimuth φ analyzes the spin component along the transverse
//! direction at angle φ. Polar angles come from two populations: a
//! Coulomb spike below the Coulomb cut (no analyzing power) and nuclear
//! scatters uniform over the analyzing band.

use crate::kinematics::{PairEvent, Scatter};
use crate::spin_models::{normalize_deg, HiddenState, LhvResponse, SourceKind};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_2_PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PolarimeterError {
    #[error("event {0} has no truth record; cannot sample spin-dependent scattering")]
    MissingTruth(u64),
    #[error("invalid analyzer config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzerConfig {
    pub analyzing_power: f64,
    pub coulomb_cut_deg: f64,
    pub band_min_deg: f64,
    pub band_max_deg: f64,
    /// Fraction of scatters landing in the Coulomb spike.
    pub coulomb_fraction: f64,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        AnalyzerConfig {
            analyzing_power: 0.25,
            coulomb_cut_deg: 3.0,
            band_min_deg: 5.0,
            band_max_deg: 20.0,
            coulomb_fraction: 0.5,
        }
    }
}

impl AnalyzerConfig {
    /// The earlier KVI estimate: A = 0.2 over 5–20°.
    pub fn prior_estimate() -> Self {
        AnalyzerConfig {
            analyzing_power: 0.2,
            ..AnalyzerConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), PolarimeterError> {
        let bad = |m: &str| Err(PolarimeterError::InvalidConfig(m.to_string()));
        if !(0.0..=1.0).contains(&self.analyzing_power) {
            return bad("analyzing_power must lie in [0, 1]");
        }
        if !(0.0 <= self.coulomb_cut_deg
            && self.coulomb_cut_deg <= self.band_min_deg
            && self.band_min_deg < self.band_max_deg
            && self.band_max_deg <= 180.0)
        {
            return bad("need 0 <= coulomb_cut <= band_min < band_max <= 180");
        }
        if !(0.0..=1.0).contains(&self.coulomb_fraction) {
            return bad("coulomb_fraction must lie in [0, 1]");
        }
        Ok(())
    }
}

fn uniform_azimuth<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    normalize_deg(360.0 * rng.random::<f64>())
}

/// φ from `(1/2π)[1 + a·cos(φ − β)]` by rejection against a uniform proposal.
fn cosine_azimuth<R: Rng + ?Sized>(a: f64, beta_deg: f64, rng: &mut R) -> f64 {
    loop {
        let phi = uniform_azimuth(rng);
        let density = 1.0 + a * (phi - beta_deg).to_radians().cos();
        if rng.random::<f64>() * (1.0 + a) < density {
            return phi;
        }
    }
}

/// Sign response: with probability `(2/π)·a` the azimuth sits exactly on
/// `beta`, otherwise it is uniform. Classifying along axis `x` then gives
/// `⟨s⟩ = (2/π)·a·sgn(cos(β − x))`.
fn sign_azimuth<R: Rng + ?Sized>(a: f64, beta_deg: f64, rng: &mut R) -> f64 {
    if rng.random::<f64>() < FRAC_2_PI * a {
        normalize_deg(beta_deg)
    } else {
        uniform_azimuth(rng)
    }
}

/// Singlet pair from `(1/4π²)[1 − a1·a2·cos(φ1 − φ2)]`.
fn singlet_azimuths<R: Rng + ?Sized>(a1: f64, a2: f64, rng: &mut R) -> (f64, f64) {
    let k = a1 * a2;
    loop {
        let phi1 = uniform_azimuth(rng);
        let phi2 = uniform_azimuth(rng);
        let density = 1.0 - k * (phi1 - phi2).to_radians().cos();
        if rng.random::<f64>() * (1.0 + k) < density {
            return (phi1, phi2);
        }
    }
}

/// Polar angle and the analyzing power that goes with it.
fn polar_angle<R: Rng + ?Sized>(cfg: &AnalyzerConfig, rng: &mut R) -> (f64, f64) {
    if rng.random::<f64>() < cfg.coulomb_fraction {
        (cfg.coulomb_cut_deg * rng.random::<f64>(), 0.0)
    } else {
        let span = cfg.band_max_deg - cfg.band_min_deg;
        (cfg.band_min_deg + span * rng.random::<f64>(), cfg.analyzing_power)
    }
}

/// Sample both scatters of `event` from its source model's joint density.
pub fn sample_scatter<R: Rng + ?Sized>(
    event: &PairEvent,
    cfg: &AnalyzerConfig,
    rng: &mut R,
) -> Result<PairEvent, PolarimeterError> {
    let truth = event.truth.ok_or(PolarimeterError::MissingTruth(event.event_id))?;
    let (theta1, a1) = polar_angle(cfg, rng);
    let (theta2, a2) = polar_angle(cfg, rng);

    let (phi1, phi2) = match (truth.spin_model.kind, truth.hidden) {
        (SourceKind::QuantumSinglet, HiddenState::Entangled) => singlet_azimuths(a1, a2, rng),
        (SourceKind::LhvVector, HiddenState::Lhv { lambda_deg }) => (
            cosine_azimuth(a1, lambda_deg, rng),
            cosine_azimuth(a2, lambda_deg + 180.0, rng),
        ),
        (SourceKind::LhvDeterministic, HiddenState::Lhv { lambda_deg }) => match truth.spin_model.response {
            LhvResponse::Sign => (
                sign_azimuth(a1, lambda_deg, rng),
                sign_azimuth(a2, lambda_deg + 180.0, rng),
            ),
            LhvResponse::Cosine => (
                cosine_azimuth(a1, lambda_deg, rng),
                cosine_azimuth(a2, lambda_deg + 180.0, rng),
            ),
        },
        // unpolarized, or a truth record whose hidden state does not fit the model
        _ => (uniform_azimuth(rng), uniform_azimuth(rng)),
    };

    let mut out = *event;
    out.scatter = Some([
        Scatter {
            theta_deg: theta1,
            phi_deg: phi1,
        },
        Scatter {
            theta_deg: theta2,
            phi_deg: phi2,
        },
    ]);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandCut {
    /// Inside the Coulomb region, below the Coulomb cut.
    Coulomb,
    /// Between the Coulomb cut and the band minimum.
    BelowBand,
    AboveBand,
}

/// Why a pair failed the analyzer acceptance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScatterRejection {
    NotScattered,
    Track { track: u8, cut: BandCut },
}

fn band_check(theta: f64, cfg: &AnalyzerConfig) -> Option<BandCut> {
    if theta < cfg.coulomb_cut_deg {
        Some(BandCut::Coulomb)
    } else if theta < cfg.band_min_deg {
        Some(BandCut::BelowBand)
    } else if theta > cfg.band_max_deg {
        Some(BandCut::AboveBand)
    } else {
        None
    }
}

/// Both polar angles must lie in the inclusive analyzing band.
pub fn accept_scatter(event: &PairEvent, cfg: &AnalyzerConfig) -> Result<(), ScatterRejection> {
    let [s1, s2] = event.scatter.ok_or(ScatterRejection::NotScattered)?;
    for (track, s) in [(1u8, s1), (2u8, s2)] {
        if let Some(cut) = band_check(s.theta_deg, cfg) {
            return Err(ScatterRejection::Track { track, cut });
        }
    }
    Ok(())
}
