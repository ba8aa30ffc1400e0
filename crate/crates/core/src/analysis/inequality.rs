//! Bell (CHSH) and Wigner inequality cases and their evaluation.

use super::estimator::{CorrelationEstimate, ProbabilityEstimate};
use crate::spin_models::{qm_expectation, qm_wigner_probability, MeasurementAxis, SourceModelSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Local hidden-variable bound on the CHSH sum.
pub const BELL_LIMIT: f64 = 2.0;
/// Local hidden-variable bound on the Wigner combination.
pub const WIGNER_LIMIT: f64 = 0.0;
/// |measured − limit| below this many σ is inconclusive.
pub const VERDICT_SIGMAS: f64 = 2.0;

#[derive(Debug, Error, PartialEq)]
pub enum InequalityError {
    #[error("estimate {index} is for ({got_a}, {got_b}) but case {case} needs ({want_a}, {want_b})")]
    AxisMismatch {
        case: u8,
        index: usize,
        got_a: MeasurementAxis,
        got_b: MeasurementAxis,
        want_a: MeasurementAxis,
        want_b: MeasurementAxis,
    },
    #[error("unknown {kind} case {id}")]
    UnknownCase { kind: &'static str, id: u8 },
}

/// One row of the Bell table: `E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellCase {
    pub id: u8,
    pub a: MeasurementAxis,
    pub b: MeasurementAxis,
    pub a_prime: MeasurementAxis,
    pub b_prime: MeasurementAxis,
    /// Tabulated quantum prediction.
    pub qm_prediction: f64,
    pub limit: f64,
    /// Published measurement, reference only.
    pub reference_value: f64,
    pub reference_error: f64,
}

impl BellCase {
    /// Axis pairs in the order the four estimates are combined.
    pub fn axis_pairs(&self) -> [(MeasurementAxis, MeasurementAxis); 4] {
        [
            (self.a, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b),
            (self.a_prime, self.b_prime),
        ]
    }

    /// |CHSH| from a model's closed-form correlation.
    pub fn closed_form(&self, model: &SourceModelSpec) -> f64 {
        chsh_sum(self.axis_pairs(), |a, b| model.expectation(a.separation(b)))
    }

    /// |CHSH| from the singlet correlation −cos θ.
    pub fn qm_closed_form(&self) -> f64 {
        chsh_sum(self.axis_pairs(), |a, b| qm_expectation(a.separation(b)))
    }
}

/// `|E1 − E2 + E3 + E4|` over the four axis pairs.
pub fn chsh_sum(
    pairs: [(MeasurementAxis, MeasurementAxis); 4],
    e: impl Fn(MeasurementAxis, MeasurementAxis) -> f64,
) -> f64 {
    let [p1, p2, p3, p4] = pairs.map(|(a, b)| e(a, b));
    (p1 - p2 + p3 + p4).abs()
}

/// One row of the Wigner table: `P(a,c) − P(a,b) − P(b,c)` with b bisecting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerCase {
    pub id: u8,
    pub a: MeasurementAxis,
    pub b: MeasurementAxis,
    pub c: MeasurementAxis,
    pub reference_value: f64,
    pub reference_error: f64,
}

impl WignerCase {
    /// Axis pairs in the order `(a,c), (a,b), (b,c)`.
    pub fn axis_pairs(&self) -> [(MeasurementAxis, MeasurementAxis); 3] {
        [(self.a, self.c), (self.a, self.b), (self.b, self.c)]
    }

    pub fn is_bisected(&self) -> bool {
        (self.a.separation(self.b) - self.b.separation(self.c)).abs() < 1e-9
    }

    /// Singlet prediction `sin²(θ_ac/2) − 2 sin²(θ_ac/4)`.
    pub fn qm_closed_form(&self) -> f64 {
        let ac = self.a.separation(self.c);
        qm_wigner_probability(ac) - 2.0 * qm_wigner_probability(0.5 * ac)
    }

    pub fn closed_form(&self, model: &SourceModelSpec) -> f64 {
        wigner_combination(self.axis_pairs(), |a, b| model.correlated_probability(a.separation(b)))
    }
}

/// `P1 − P2 − P3`.
pub fn wigner_combination(
    pairs: [(MeasurementAxis, MeasurementAxis); 3],
    p: impl Fn(MeasurementAxis, MeasurementAxis) -> f64,
) -> f64 {
    let [p1, p2, p3] = pairs.map(|(a, b)| p(a, b));
    p1 - p2 - p3
}

const BELL_ROWS: [(u8, f64, f64, f64, f64); 8] = [
    (1, 25.0, 2.46, 0.67, 2.30),
    (2, 30.0, 2.60, 1.21, 2.42),
    (3, 35.0, 2.72, 1.54, 2.76),
    (4, 40.0, 2.80, 2.11, 2.86),
    (5, 45.0, 2.83, 2.23, 2.48),
    (6, 50.0, 2.79, 2.39, 2.87),
    (7, 55.0, 2.69, 2.58, 2.91),
    (8, 60.0, 2.50, 2.75, 2.95),
];

const WIGNER_ROWS: [(u8, f64, f64, f64); 6] = [
    (1, 15.0, 0.20, 0.78),
    (2, 30.0, -0.38, 0.77),
    (3, 45.0, -0.54, 0.79),
    (4, 60.0, -0.71, 0.81),
    (5, 75.0, -0.62, 0.80),
    (6, 90.0, 0.13, 0.76),
];

/// The eight Bell cases: a = 0, b = β, a′ = 2β, b′ = 3β.
pub fn bell_cases() -> Vec<BellCase> {
    BELL_ROWS
        .iter()
        .map(|&(id, beta, qm, value, error)| BellCase {
            id,
            a: MeasurementAxis::new(0.0),
            b: MeasurementAxis::new(beta),
            a_prime: MeasurementAxis::new(2.0 * beta),
            b_prime: MeasurementAxis::new(3.0 * beta),
            qm_prediction: qm,
            limit: BELL_LIMIT,
            reference_value: value,
            reference_error: error,
        })
        .collect()
}

/// The six Wigner cases: a = 0, b = β, c = 2β.
pub fn wigner_cases() -> Vec<WignerCase> {
    WIGNER_ROWS
        .iter()
        .map(|&(id, beta, value, error)| WignerCase {
            id,
            a: MeasurementAxis::new(0.0),
            b: MeasurementAxis::new(beta),
            c: MeasurementAxis::new(2.0 * beta),
            reference_value: value,
            reference_error: error,
        })
        .collect()
}

pub fn bell_case(id: u8) -> Result<BellCase, InequalityError> {
    bell_cases()
        .into_iter()
        .find(|c| c.id == id)
        .ok_or(InequalityError::UnknownCase { kind: "bell", id })
}

pub fn wigner_case(id: u8) -> Result<WignerCase, InequalityError> {
    wigner_cases()
        .into_iter()
        .find(|c| c.id == id)
        .ok_or(InequalityError::UnknownCase { kind: "wigner", id })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    Bell,
    Wigner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ViolatesClassical,
    Consistent,
    Inconclusive,
}

impl Verdict {
    pub fn decide(measured: f64, sigma: f64, limit: f64) -> Verdict {
        if (measured - limit).abs() < VERDICT_SIGMAS * sigma {
            Verdict::Inconclusive
        } else if measured > limit {
            Verdict::ViolatesClassical
        } else {
            Verdict::Consistent
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityResult {
    pub kind: InequalityKind,
    pub case_id: u8,
    pub measured: f64,
    pub sigma: f64,
    pub prediction_qm: f64,
    pub classical_limit: f64,
    pub verdict: Verdict,
}

impl InequalityResult {
    /// (measured − limit)/σ.
    pub fn significance(&self) -> f64 {
        (self.measured - self.classical_limit) / self.sigma
    }

    /// Add the error from an estimated analyzing power, `σ_A / A`, in
    /// quadrature. Every correlation scales as `1/A²`; for Wigner only the
    /// correlation part of `P = (1 + E)/2` scales.
    pub fn with_calibration_uncertainty(self, relative_sigma_a: f64) -> Self {
        let scaled = match self.kind {
            InequalityKind::Bell => self.measured,
            InequalityKind::Wigner => self.measured + 0.5,
        };
        let sigma = self.sigma.hypot(2.0 * scaled * relative_sigma_a);
        InequalityResult {
            sigma,
            verdict: Verdict::decide(self.measured, sigma, self.classical_limit),
            ..self
        }
    }
}

fn check_axes(
    case: u8,
    index: usize,
    want: (MeasurementAxis, MeasurementAxis),
    got: (MeasurementAxis, MeasurementAxis),
) -> Result<(), InequalityError> {
    let same = |x: MeasurementAxis, y: MeasurementAxis| (x.angle_deg() - y.angle_deg()).abs() < 1e-9;
    if same(want.0, got.0) && same(want.1, got.1) {
        Ok(())
    } else {
        Err(InequalityError::AxisMismatch {
            case,
            index,
            got_a: got.0,
            got_b: got.1,
            want_a: want.0,
            want_b: want.1,
        })
    }
}

/// Combine four correlation estimates, ordered as [`BellCase::axis_pairs`].
pub fn evaluate_bell(
    case: &BellCase,
    estimates: [&CorrelationEstimate; 4],
) -> Result<InequalityResult, InequalityError> {
    for (i, (want, est)) in case.axis_pairs().iter().zip(estimates).enumerate() {
        check_axes(case.id, i, *want, (est.axis_a, est.axis_b))?;
    }
    let [e1, e2, e3, e4] = estimates;
    let measured = (e1.e_value - e2.e_value + e3.e_value + e4.e_value).abs();
    let sigma = estimates.iter().map(|e| e.sigma * e.sigma).sum::<f64>().sqrt();
    Ok(InequalityResult {
        kind: InequalityKind::Bell,
        case_id: case.id,
        measured,
        sigma,
        prediction_qm: case.qm_closed_form(),
        classical_limit: case.limit,
        verdict: Verdict::decide(measured, sigma, case.limit),
    })
}

/// Combine three same-sign probabilities ordered `(a,c), (a,b), (b,c)`.
pub fn evaluate_wigner(case: &WignerCase, probabilities: [ProbabilityEstimate; 3]) -> InequalityResult {
    let [p_ac, p_ab, p_bc] = probabilities;
    let measured = p_ac.value - p_ab.value - p_bc.value;
    let sigma = probabilities.iter().map(|p| p.sigma * p.sigma).sum::<f64>().sqrt();
    InequalityResult {
        kind: InequalityKind::Wigner,
        case_id: case.id,
        measured,
        sigma,
        prediction_qm: case.qm_closed_form(),
        classical_limit: WIGNER_LIMIT,
        verdict: Verdict::decide(measured, sigma, WIGNER_LIMIT),
    }
}
