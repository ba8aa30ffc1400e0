//! Closed-form correlation physics for the pair sources.
//!
//! All angles are in degrees. A source is either the quantum singlet, one of
//! two local hidden-variable (LHV) reference models, or unpolarized
//! background.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Normalize an angle in degrees into `[0, 360)`.
pub fn normalize_deg(angle: f64) -> f64 {
    let r = angle.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Unsigned separation of two directions in degrees, in `[0, 180]`.
pub fn separation_deg(a: f64, b: f64) -> f64 {
    let d = normalize_deg(a - b);
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

/// An analysis direction in the transverse (analyzer) plane.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(into = "f64", from = "f64")]
pub struct MeasurementAxis(f64);

impl MeasurementAxis {
    pub fn new(angle_deg: f64) -> Self {
        MeasurementAxis(normalize_deg(angle_deg))
    }

    pub fn angle_deg(self) -> f64 {
        self.0
    }

    pub fn rotated(self, delta_deg: f64) -> Self {
        MeasurementAxis::new(self.0 + delta_deg)
    }

    /// Angle between the two axes as directions, in `[0, 180]`.
    pub fn separation(self, other: MeasurementAxis) -> f64 {
        separation_deg(self.0, other.0)
    }
}

impl From<f64> for MeasurementAxis {
    fn from(v: f64) -> Self {
        MeasurementAxis::new(v)
    }
}

impl From<MeasurementAxis> for f64 {
    fn from(a: MeasurementAxis) -> f64 {
        a.0
    }
}

impl fmt::Display for MeasurementAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    QuantumSinglet,
    LhvVector,
    LhvDeterministic,
    UnpolarizedBackground,
}

impl SourceKind {
    pub fn tag(self) -> &'static str {
        match self {
            SourceKind::QuantumSinglet => "quantum_singlet",
            SourceKind::LhvVector => "lhv_vector",
            SourceKind::LhvDeterministic => "lhv_deterministic",
            SourceKind::UnpolarizedBackground => "unpolarized_background",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        [
            SourceKind::QuantumSinglet,
            SourceKind::LhvVector,
            SourceKind::LhvDeterministic,
            SourceKind::UnpolarizedBackground,
        ]
        .into_iter()
        .find(|k| k.tag() == tag)
    }
}

/// Azimuth-level response of the deterministic LHV model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LhvResponse {
    /// Outcomes `sgn(cos(λ − a))` for proton 1 and `−sgn(cos(λ − b))` for proton 2.
    #[default]
    Sign,
    /// Cosine response; the same distribution as [`SourceKind::LhvVector`].
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceModelSpec {
    pub kind: SourceKind,
    #[serde(default)]
    pub response: LhvResponse,
}

impl SourceModelSpec {
    pub const QUANTUM: SourceModelSpec = SourceModelSpec {
        kind: SourceKind::QuantumSinglet,
        response: LhvResponse::Sign,
    };
    pub const BACKGROUND: SourceModelSpec = SourceModelSpec {
        kind: SourceKind::UnpolarizedBackground,
        response: LhvResponse::Sign,
    };

    pub fn new(kind: SourceKind) -> Self {
        SourceModelSpec {
            kind,
            response: LhvResponse::Sign,
        }
    }

    pub fn with_response(kind: SourceKind, response: LhvResponse) -> Self {
        SourceModelSpec { kind, response }
    }

    /// Stable text tag, e.g. `lhv_deterministic:sign`.
    pub fn tag(&self) -> String {
        match self.kind {
            SourceKind::LhvDeterministic => {
                let r = match self.response {
                    LhvResponse::Sign => "sign",
                    LhvResponse::Cosine => "cosine",
                };
                format!("{}:{}", self.kind.tag(), r)
            }
            k => k.tag().to_string(),
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        let (kind, response) = match tag.split_once(':') {
            Some((k, "sign")) => (k, LhvResponse::Sign),
            Some((k, "cosine")) => (k, LhvResponse::Cosine),
            Some(_) => return None,
            None => (tag, LhvResponse::Sign),
        };
        let kind = SourceKind::from_tag(kind)?;
        if kind != SourceKind::LhvDeterministic && tag.contains(':') {
            return None;
        }
        Some(SourceModelSpec { kind, response })
    }

    /// Closed-form correlation `E(θ)` for the model, θ the axis separation.
    pub fn expectation(&self, theta_deg: f64) -> f64 {
        match (self.kind, self.response) {
            (SourceKind::QuantumSinglet, _) => qm_expectation(theta_deg),
            (SourceKind::LhvVector, _) | (SourceKind::LhvDeterministic, LhvResponse::Cosine) => {
                lhv_vector_expectation(theta_deg)
            }
            (SourceKind::LhvDeterministic, LhvResponse::Sign) => {
                lhv_deterministic_expectation(theta_deg)
            }
            (SourceKind::UnpolarizedBackground, _) => 0.0,
        }
    }

    /// Probability that both outcomes agree in sign, `(1 + E)/2`.
    pub fn correlated_probability(&self, theta_deg: f64) -> f64 {
        0.5 * (1.0 + self.expectation(theta_deg))
    }
}

/// Per-pair hidden variable, or its absence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HiddenState {
    /// Quantum singlet: no per-event hidden value.
    Entangled,
    /// LHV azimuth λ in degrees, `[0, 360)`.
    Lhv { lambda_deg: f64 },
    /// No polarization at all.
    Unpolarized,
}

impl HiddenState {
    pub fn lambda_deg(&self) -> Option<f64> {
        match self {
            HiddenState::Lhv { lambda_deg } => Some(*lambda_deg),
            _ => None,
        }
    }
}

/// Singlet correlation `−cos θ`.
pub fn qm_expectation(theta_deg: f64) -> f64 {
    -theta_deg.to_radians().cos()
}

/// Singlet probability of outcomes `(s1, s2)` along axes separated by θ.
///
/// Equal signs have probability `(1 − cos θ)/4` each, opposite signs
/// `(1 + cos θ)/4`. Outcomes are ±1; any positive value counts as +1.
pub fn qm_joint_probability(theta_deg: f64, outcome1: i8, outcome2: i8) -> f64 {
    let c = theta_deg.to_radians().cos();
    if (outcome1 > 0) == (outcome2 > 0) {
        0.25 * (1.0 - c)
    } else {
        0.25 * (1.0 + c)
    }
}

/// Singlet probability that both spin projections point the same way.
pub fn qm_wigner_probability(theta_deg: f64) -> f64 {
    let half = 0.5 * theta_deg.to_radians();
    half.sin().powi(2)
}

/// Sign-model LHV correlation `−1 + 2θ/π`, θ the axis separation.
pub fn lhv_deterministic_expectation(theta_deg: f64) -> f64 {
    let theta = separation_deg(theta_deg, 0.0);
    -1.0 + theta / 90.0
}

/// Anti-parallel polarization-vector LHV correlation `−cos(θ)/2`.
pub fn lhv_vector_expectation(theta_deg: f64) -> f64 {
    -0.5 * theta_deg.to_radians().cos()
}

/// Draw the per-pair hidden state for `model`.
pub fn sample_hidden_state<R: Rng + ?Sized>(model: &SourceModelSpec, rng: &mut R) -> HiddenState {
    match model.kind {
        SourceKind::QuantumSinglet => HiddenState::Entangled,
        SourceKind::LhvVector | SourceKind::LhvDeterministic => HiddenState::Lhv {
            lambda_deg: normalize_deg(rng.random::<f64>() * 360.0),
        },
        SourceKind::UnpolarizedBackground => HiddenState::Unpolarized,
    }
}
