//! Four-vector algebra, (d,²He) pair generation and the offline kinematic
//! selection.
//!
//! Energies are in MeV, momenta in MeV/c, angles in degrees.

use crate::histogram::{Histogram, HistogramError};
use crate::spin_models::{HiddenState, SourceModelSpec};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Neg, Sub};
use thiserror::Error;

/// Proton rest mass, MeV.
pub const PROTON_MASS: f64 = 938.272;

/// Energy-sum spectra are binned over this span of bin centres, MeV.
pub const ENERGY_SUM_SPAN_MEV: (f64, f64) = (50.0, 350.0);

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("total four-momentum is not timelike (s = {s})")]
    NotTimelike { s: f64 },
    #[error("no event inside the momentum window after {attempts} attempts")]
    GenerationExhausted { attempts: u32 },
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FourVector {
    pub e: f64,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

impl FourVector {
    pub const fn new(e: f64, px: f64, py: f64, pz: f64) -> Self {
        FourVector { e, px, py, pz }
    }

    /// On-shell vector of mass `mass` with momentum `p`.
    pub fn on_shell(mass: f64, p: [f64; 3]) -> Self {
        let e = (mass * mass + p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        FourVector::new(e, p[0], p[1], p[2])
    }

    pub fn momentum(&self) -> [f64; 3] {
        [self.px, self.py, self.pz]
    }

    pub fn p_sq(&self) -> f64 {
        self.px * self.px + self.py * self.py + self.pz * self.pz
    }

    pub fn p_mag(&self) -> f64 {
        self.p_sq().sqrt()
    }

    pub fn mass_sq(&self) -> f64 {
        self.e * self.e - self.p_sq()
    }

    pub fn mass(&self) -> f64 {
        self.mass_sq().max(0.0).sqrt()
    }

    /// Kinetic energy assuming a proton.
    pub fn kinetic_energy(&self) -> f64 {
        self.e - PROTON_MASS
    }

    /// Velocity of the frame in which this vector is at rest.
    pub fn velocity(&self) -> [f64; 3] {
        [self.px / self.e, self.py / self.e, self.pz / self.e]
    }

    /// The same vector seen from a frame moving with velocity `beta`.
    pub fn boost(&self, beta: [f64; 3]) -> FourVector {
        let b2 = beta[0] * beta[0] + beta[1] * beta[1] + beta[2] * beta[2];
        if b2 == 0.0 {
            return *self;
        }
        let gamma = 1.0 / (1.0 - b2).sqrt();
        let bp = beta[0] * self.px + beta[1] * self.py + beta[2] * self.pz;
        // (γ − 1)/β² written without the cancellation at small β
        let k = gamma * gamma / (gamma + 1.0);
        let coef = k * bp - gamma * self.e;
        FourVector {
            e: gamma * (self.e - bp),
            px: self.px + coef * beta[0],
            py: self.py + coef * beta[1],
            pz: self.pz + coef * beta[2],
        }
    }
}

impl Add for FourVector {
    type Output = FourVector;
    fn add(self, o: FourVector) -> FourVector {
        FourVector::new(self.e + o.e, self.px + o.px, self.py + o.py, self.pz + o.pz)
    }
}

impl Sub for FourVector {
    type Output = FourVector;
    fn sub(self, o: FourVector) -> FourVector {
        FourVector::new(self.e - o.e, self.px - o.px, self.py - o.py, self.pz - o.pz)
    }
}

impl Neg for FourVector {
    type Output = FourVector;
    fn neg(self) -> FourVector {
        FourVector::new(-self.e, -self.px, -self.py, -self.pz)
    }
}

fn timelike_total(p1: &FourVector, p2: &FourVector) -> Result<FourVector, KinematicsError> {
    let total = *p1 + *p2;
    let s = total.mass_sq();
    if !(s > 0.0 && total.e > 0.0) {
        return Err(KinematicsError::NotTimelike { s });
    }
    Ok(total)
}

/// Both tracks expressed in the pair centre-of-mass frame.
pub fn boost_to_pair_cm(
    p1: &FourVector,
    p2: &FourVector,
) -> Result<(FourVector, FourVector), KinematicsError> {
    let beta = timelike_total(p1, p2)?.velocity();
    Ok((p1.boost(beta), p2.boost(beta)))
}

/// `√s − 2 m_p` of the pair.
pub fn relative_kinetic_energy(p1: &FourVector, p2: &FourVector) -> Result<f64, KinematicsError> {
    let total = timelike_total(p1, p2)?;
    Ok(total.mass_sq().sqrt() - 2.0 * PROTON_MASS)
}

/// Reaction channel producing the ²He pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Hydrogen,
    Carbon,
}

/// What produced the two tracks of an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventSource {
    Hydrogen,
    Carbon,
    Background,
}

impl EventSource {
    pub fn tag(self) -> &'static str {
        match self {
            EventSource::Hydrogen => "hydrogen",
            EventSource::Carbon => "carbon",
            EventSource::Background => "background",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "hydrogen" => Some(EventSource::Hydrogen),
            "carbon" => Some(EventSource::Carbon),
            "background" => Some(EventSource::Background),
            _ => None,
        }
    }
}

impl From<Channel> for EventSource {
    fn from(c: Channel) -> Self {
        match c {
            Channel::Hydrogen => EventSource::Hydrogen,
            Channel::Carbon => EventSource::Carbon,
        }
    }
}

/// Polar and azimuthal scattering angle in the carbon analyzer, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scatter {
    pub theta_deg: f64,
    pub phi_deg: f64,
}

/// Generator-side knowledge about an event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub spin_model: SourceModelSpec,
    pub hidden: HiddenState,
    pub random_pair: bool,
    /// Bunch index of track 2 relative to track 1.
    pub bunch_offset: i32,
}

impl Truth {
    pub fn unpolarized() -> Self {
        Truth {
            spin_model: SourceModelSpec::BACKGROUND,
            hidden: HiddenState::Unpolarized,
            random_pair: false,
            bunch_offset: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairEvent {
    pub event_id: u64,
    pub source: EventSource,
    pub p1: FourVector,
    pub p2: FourVector,
    pub scatter: Option<[Scatter; 2]>,
    /// Hit times `(t1, t2)` in ns.
    pub times: Option<(f64, f64)>,
    pub truth: Option<Truth>,
}

impl PairEvent {
    pub fn kinematic(event_id: u64, source: EventSource, p1: FourVector, p2: FourVector) -> Self {
        PairEvent {
            event_id,
            source,
            p1,
            p2,
            scatter: None,
            times: None,
            truth: None,
        }
    }

    pub fn energy_sum(&self) -> f64 {
        self.p1.kinetic_energy() + self.p2.kinetic_energy()
    }

    pub fn relative_kinetic_energy(&self) -> Result<f64, KinematicsError> {
        relative_kinetic_energy(&self.p1, &self.p2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumWindow {
    pub min_mev_c: f64,
    pub max_mev_c: f64,
}

impl MomentumWindow {
    pub fn contains(&self, p: f64) -> bool {
        p >= self.min_mev_c && p <= self.max_mev_c
    }

    pub fn contains_pair(&self, e: &PairEvent) -> bool {
        self.contains(e.p1.p_mag()) && self.contains(e.p2.p_mag())
    }
}

impl Default for MomentumWindow {
    fn default() -> Self {
        MomentumWindow {
            min_mev_c: 300.0,
            max_mev_c: 500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub beam_energy_mev: f64,
    pub peak_sum_h_mev: f64,
    pub peak_sum_c_mev: f64,
    pub peak_sigma_mev: f64,
    pub relative_ke_max_gen_mev: f64,
    pub background_fraction: f64,
    pub carbon_to_hydrogen_ratio: f64,
    pub momentum_window: MomentumWindow,
    /// Half-angle of the forward cone holding pair and background directions.
    pub forward_cone_deg: f64,
    /// Attempts per event before giving up on the momentum window.
    pub max_attempts: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            beam_energy_mev: 170.0,
            peak_sum_h_mev: 170.0,
            peak_sum_c_mev: 158.0,
            peak_sigma_mev: 1.0,
            relative_ke_max_gen_mev: 0.8,
            background_fraction: 0.0,
            carbon_to_hydrogen_ratio: 1.0,
            momentum_window: MomentumWindow::default(),
            forward_cone_deg: 30.0,
            max_attempts: 1000,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        let bad = |m: &str| Err(KinematicsError::InvalidConfig(m.to_string()));
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.beam_energy_mev) {
            return bad("beam_energy_mev must be positive");
        }
        if !positive(self.peak_sum_h_mev) || !positive(self.peak_sum_c_mev) {
            return bad("energy-sum peaks must be positive");
        }
        if self.peak_sum_h_mev.max(self.peak_sum_c_mev) > self.beam_energy_mev + 5.0 * self.peak_sigma_mev {
            return bad("energy-sum peaks exceed the beam energy");
        }
        if !(self.peak_sigma_mev >= 0.0 && self.peak_sigma_mev.is_finite()) {
            return bad("peak_sigma_mev must be non-negative");
        }
        if !positive(self.relative_ke_max_gen_mev) {
            return bad("relative_ke_max_gen_mev must be positive");
        }
        if !(0.0..=1.0).contains(&self.background_fraction) {
            return bad("background_fraction must lie in [0, 1]");
        }
        if !(self.carbon_to_hydrogen_ratio >= 0.0 && self.carbon_to_hydrogen_ratio.is_finite()) {
            return bad("carbon_to_hydrogen_ratio must be non-negative");
        }
        let w = &self.momentum_window;
        if !(w.min_mev_c >= 0.0 && w.max_mev_c > w.min_mev_c && w.max_mev_c.is_finite()) {
            return bad("momentum window must be a non-empty interval");
        }
        if !(self.forward_cone_deg > 0.0 && self.forward_cone_deg <= 180.0) {
            return bad("forward_cone_deg must lie in (0, 180]");
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be at least 1");
        }
        Ok(())
    }

    pub fn peak_sum(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Hydrogen => self.peak_sum_h_mev,
            Channel::Carbon => self.peak_sum_c_mev,
        }
    }

    /// Probability that a signal event comes from the carbon channel.
    pub fn carbon_probability(&self) -> f64 {
        let r = self.carbon_to_hydrogen_ratio;
        r / (1.0 + r)
    }
}

/// Unit vector uniform in solid angle within `half_angle_deg` of +z.
fn cone_direction<R: Rng + ?Sized>(half_angle_deg: f64, rng: &mut R) -> [f64; 3] {
    let cos_min = half_angle_deg.to_radians().cos();
    let cos_t = cos_min + (1.0 - cos_min) * rng.random::<f64>();
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    let phi = 2.0 * PI * rng.random::<f64>();
    [sin_t * phi.cos(), sin_t * phi.sin(), cos_t]
}

fn scale(v: [f64; 3], s: f64) -> [f64; 3] {
    [v[0] * s, v[1] * s, v[2] * s]
}

/// A ¹S₀ pair from `channel`; returns the event and how many draws fell
/// outside the momentum window first.
pub fn generate_signal_event<R: Rng + ?Sized>(
    cfg: &GeneratorConfig,
    channel: Channel,
    event_id: u64,
    rng: &mut R,
) -> Result<(PairEvent, u32), KinematicsError> {
    let m = PROTON_MASS;
    let energy_sum = Normal::new(cfg.peak_sum(channel), cfg.peak_sigma_mev)
        .map_err(|e| KinematicsError::InvalidConfig(e.to_string()))?;
    for attempt in 0..cfg.max_attempts {
        let t_sum = energy_sum.sample(rng);
        let eps = cfg.relative_ke_max_gen_mev * rng.random::<f64>();
        if t_sum <= eps {
            continue;
        }
        let pair_mass = 2.0 * m + eps;
        let pair_energy = t_sum + 2.0 * m;
        let pair_p = ((pair_energy - pair_mass) * (pair_energy + pair_mass)).sqrt();
        let dir = cone_direction(cfg.forward_cone_deg, rng);

        let q = (0.25 * pair_mass * pair_mass - m * m).max(0.0).sqrt();
        let decay = cone_direction(180.0, rng);
        let p1_cm = FourVector::on_shell(m, scale(decay, q));
        let p2_cm = FourVector::on_shell(m, scale(decay, -q));

        let beta = scale(dir, -pair_p / pair_energy);
        let p1 = p1_cm.boost(beta);
        let p2 = p2_cm.boost(beta);
        let event = PairEvent::kinematic(event_id, channel.into(), p1, p2);
        if cfg.momentum_window.contains_pair(&event) {
            return Ok((event, attempt));
        }
    }
    Err(KinematicsError::GenerationExhausted {
        attempts: cfg.max_attempts,
    })
}

/// Two uncorrelated, unpolarized protons inside the window and cone.
pub fn generate_background_event<R: Rng + ?Sized>(
    cfg: &GeneratorConfig,
    event_id: u64,
    rng: &mut R,
) -> PairEvent {
    let w = cfg.momentum_window;
    let track = |rng: &mut R| {
        let p = w.min_mev_c + (w.max_mev_c - w.min_mev_c) * rng.random::<f64>();
        FourVector::on_shell(PROTON_MASS, scale(cone_direction(cfg.forward_cone_deg, rng), p))
    };
    let p1 = track(rng);
    let p2 = track(rng);
    let mut event = PairEvent::kinematic(event_id, EventSource::Background, p1, p2);
    event.truth = Some(Truth::unpolarized());
    event
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionCuts {
    pub relative_ke_cut_mev: f64,
    pub momentum_window: MomentumWindow,
}

impl Default for SelectionCuts {
    fn default() -> Self {
        SelectionCuts {
            relative_ke_cut_mev: 1.0,
            momentum_window: MomentumWindow::default(),
        }
    }
}

/// Why an event was dropped by the kinematic selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionFailure {
    MomentumWindow,
    RelativeKineticEnergy,
}

impl SelectionCuts {
    /// Momentum window first, then relative kinetic energy (strict `<`).
    pub fn check(&self, e: &PairEvent) -> Result<(), SelectionFailure> {
        if !self.momentum_window.contains_pair(e) {
            return Err(SelectionFailure::MomentumWindow);
        }
        match e.relative_kinetic_energy() {
            Ok(eps) if eps < self.relative_ke_cut_mev => Ok(()),
            _ => Err(SelectionFailure::RelativeKineticEnergy),
        }
    }
}

/// Pass/fail counts per cut, in application order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SelectionReport {
    pub input: u64,
    pub pass_momentum_window: u64,
    pub fail_momentum_window: u64,
    pub pass_relative_ke: u64,
    pub fail_relative_ke: u64,
}

impl SelectionReport {
    pub fn record(&mut self, outcome: Result<(), SelectionFailure>) {
        self.input += 1;
        match outcome {
            Ok(()) => {
                self.pass_momentum_window += 1;
                self.pass_relative_ke += 1;
            }
            Err(SelectionFailure::MomentumWindow) => self.fail_momentum_window += 1,
            Err(SelectionFailure::RelativeKineticEnergy) => {
                self.pass_momentum_window += 1;
                self.fail_relative_ke += 1;
            }
        }
    }

    pub fn merge(&mut self, o: &SelectionReport) {
        self.input += o.input;
        self.pass_momentum_window += o.pass_momentum_window;
        self.fail_momentum_window += o.fail_momentum_window;
        self.pass_relative_ke += o.pass_relative_ke;
        self.fail_relative_ke += o.fail_relative_ke;
    }
}

pub fn select_pairs(events: &[PairEvent], cuts: &SelectionCuts) -> (Vec<PairEvent>, SelectionReport) {
    let mut report = SelectionReport::default();
    let mut kept = Vec::new();
    for e in events {
        let outcome = cuts.check(e);
        report.record(outcome);
        if outcome.is_ok() {
            kept.push(*e);
        }
    }
    (kept, report)
}

/// Empty energy-sum histogram with bins centred on multiples of `bin_width_mev`.
pub fn energy_sum_histogram(bin_width_mev: f64) -> Result<Histogram, HistogramError> {
    if !(bin_width_mev > 0.0 && bin_width_mev.is_finite()) {
        return Err(HistogramError::InvalidBinWidth(bin_width_mev));
    }
    let (lo, hi) = ENERGY_SUM_SPAN_MEV;
    let first = (lo / bin_width_mev).floor() * bin_width_mev;
    let last = (hi / bin_width_mev).ceil() * bin_width_mev;
    Histogram::centered(first, last, bin_width_mev)
}

/// Histogram of `T1 + T2`.
pub fn energy_sum_spectrum(events: &[PairEvent], bin_width_mev: f64) -> Result<Histogram, HistogramError> {
    let mut h = energy_sum_histogram(bin_width_mev)?;
    for e in events {
        h.fill(e.energy_sum());
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{event_stream, stream, Purpose};
    use rand::Rng;
    use proptest::prelude::*;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    fn proton(p: [f64; 3]) -> FourVector {
        FourVector::on_shell(PROTON_MASS, p)
    }

    fn signal(n: u64, channel: Channel, cfg: &GeneratorConfig) -> Vec<PairEvent> {
        (0..n)
            .map(|i| generate_signal_event(cfg, channel, i, &mut event_stream(11, i)).unwrap().0)
            .collect()
    }

    fn background(n: u64, cfg: &GeneratorConfig) -> Vec<PairEvent> {
        (0..n)
            .map(|i| generate_background_event(cfg, i, &mut event_stream(12, i)))
            .collect()
    }

    #[test]
    fn back_to_back_pair_is_already_cm() {
        let p1 = proton([0.0, 0.0, 600.0]);
        let p2 = proton([0.0, 0.0, -600.0]);
        let (a, b) = boost_to_pair_cm(&p1, &p2).unwrap();
        for (x, y) in [(a, p1), (b, p2)] {
            assert!((x.e - y.e).abs() < 1e-9 && (x.pz - y.pz).abs() < 1e-9);
        }
        let expected = 2.0 * (600.0f64 * 600.0 + PROTON_MASS * PROTON_MASS).sqrt() - 2.0 * PROTON_MASS;
        assert!((relative_kinetic_energy(&p1, &p2).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn identical_tracks_have_zero_relative_energy() {
        let p = proton([10.0, -20.0, 400.0]);
        let (a, b) = boost_to_pair_cm(&p, &p).unwrap();
        assert!(a.p_mag() < 1e-9 && b.p_mag() < 1e-9);
        assert!(rel_close(a.e, PROTON_MASS, 1e-12));
        assert!(relative_kinetic_energy(&p, &p).unwrap().abs() < 1e-9);
    }

    #[test]
    fn spacelike_total_is_rejected() {
        let p1 = FourVector::new(1.0, 0.0, 0.0, 10.0);
        let p2 = FourVector::new(1.0, 0.0, 0.0, 10.0);
        assert!(matches!(boost_to_pair_cm(&p1, &p2), Err(KinematicsError::NotTimelike { .. })));
        assert!(relative_kinetic_energy(&p1, &p2).is_err());
    }

    #[test]
    fn signal_relative_energy_respects_generation_bound() {
        let cfg = GeneratorConfig {
            relative_ke_max_gen_mev: 0.5,
            ..GeneratorConfig::default()
        };
        for i in 0..200 {
            let (e, _) = generate_signal_event(&cfg, Channel::Carbon, i, &mut event_stream(5, i)).unwrap();
            let eps = e.relative_kinetic_energy().unwrap();
            assert!((0.0..0.5).contains(&eps), "eps = {eps}");
        }
    }

    #[test]
    fn fixed_epsilon_is_recovered() {
        // CM pair with ε = 0.5 MeV, moved to a lab frame
        let m = PROTON_MASS;
        let eps = 0.5;
        let pair_mass = 2.0 * m + eps;
        let q = (0.25 * pair_mass * pair_mass - m * m).sqrt();
        let (sx, cz) = (0.3, 0.09f64.mul_add(-1.0, 1.0).sqrt());
        let p1 = proton([sx * q, 0.0, cz * q]);
        let p2 = proton([-sx * q, 0.0, -cz * q]);
        let beta = [0.05, -0.1, -0.4];
        let (l1, l2) = (p1.boost(beta), p2.boost(beta));
        assert!((relative_kinetic_energy(&l1, &l2).unwrap() - eps).abs() < 1e-6);
    }

    #[test]
    fn energy_sum_means() {
        let cfg = GeneratorConfig::default();
        for (channel, peak) in [(Channel::Hydrogen, 170.0), (Channel::Carbon, 158.0)] {
            let events = signal(100_000, channel, &cfg);
            let mean = events.iter().map(PairEvent::energy_sum).sum::<f64>() / events.len() as f64;
            assert!((mean - peak).abs() < 0.02, "{channel:?}: mean {mean}");
            assert!(events
                .iter()
                .all(|e| e.relative_kinetic_energy().unwrap() < cfg.relative_ke_max_gen_mev));
        }
    }

    #[test]
    fn impossible_window_exhausts() {
        let cfg = GeneratorConfig {
            momentum_window: MomentumWindow {
                min_mev_c: 550.0,
                max_mev_c: 650.0,
            },
            max_attempts: 50,
            ..GeneratorConfig::default()
        };
        let err = generate_signal_event(&cfg, Channel::Hydrogen, 0, &mut event_stream(1, 0)).unwrap_err();
        assert_eq!(err, KinematicsError::GenerationExhausted { attempts: 50 });
    }

    #[test]
    fn background_properties() {
        let cfg = GeneratorConfig::default();
        let events = background(100_000, &cfg);
        assert!(events
            .iter()
            .all(|e| e.truth.unwrap().spin_model == SourceModelSpec::BACKGROUND));
        let below = events
            .iter()
            .filter(|e| e.relative_kinetic_energy().unwrap() < 1.0)
            .count() as f64
            / events.len() as f64;
        // frozen from a reference run: 0.032 at the default window and cone
        assert!(below < 0.05, "background below 1 MeV: {below}");

        let h = energy_sum_spectrum(&events, 1.0).unwrap();
        let mut occupied: Vec<u64> = h.counts.iter().copied().filter(|&c| c > 0).collect();
        occupied.sort_unstable();
        let median = occupied[occupied.len() / 2];
        let max = *occupied.last().unwrap();
        assert!(max < 3 * median, "max bin {max}, median {median}");
    }

    #[test]
    fn selection_examples() {
        let cfg = GeneratorConfig::default();
        let cuts = SelectionCuts::default();
        let sig = signal(20_000, Channel::Hydrogen, &cfg);
        let (kept, report) = select_pairs(&sig, &cuts);
        assert_eq!(kept.len(), sig.len());
        assert_eq!(report.pass_relative_ke, sig.len() as u64);

        let bg = background(20_000, &cfg);
        let mixed: Vec<PairEvent> = sig.iter().chain(&bg).copied().collect();
        let (kept, report) = select_pairs(&mixed, &cuts);
        let bg_kept = kept.iter().filter(|e| e.source == EventSource::Background).count() as f64;
        assert!(bg_kept / (kept.len() as f64) < 0.10);
        assert_eq!(report.input, mixed.len() as u64);
        assert_eq!(report.pass_momentum_window + report.fail_momentum_window, report.input);
        assert_eq!(report.pass_relative_ke + report.fail_relative_ke, report.pass_momentum_window);

        let zero = SelectionCuts {
            relative_ke_cut_mev: 0.0,
            ..cuts
        };
        assert!(select_pairs(&mixed, &zero).0.is_empty());

        let (none, empty) = select_pairs(&[], &cuts);
        assert!(none.is_empty());
        assert_eq!(empty, SelectionReport::default());

        let (again, _) = select_pairs(&kept, &cuts);
        assert_eq!(again, kept);
    }

    #[test]
    fn energy_sum_peaks() {
        let cfg = GeneratorConfig::default();
        for (channel, peak) in [(Channel::Hydrogen, 170.0), (Channel::Carbon, 158.0)] {
            let h = energy_sum_spectrum(&signal(20_000, channel, &cfg), 1.0).unwrap();
            let (lo, hi) = h.bin_range(h.argmax().unwrap());
            assert!(lo <= peak && peak < hi, "{channel:?}: argmax [{lo}, {hi})");
            assert_eq!(h.total(), 20_000);
        }
        let empty = energy_sum_spectrum(&[], 1.0).unwrap();
        assert!(empty.counts.iter().all(|&c| c == 0));
        assert!(energy_sum_spectrum(&[], 0.0).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GeneratorConfig::default();
        let a = generate_signal_event(&cfg, Channel::Carbon, 77, &mut event_stream(3, 77)).unwrap();
        let b = generate_signal_event(&cfg, Channel::Carbon, 77, &mut event_stream(3, 77)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0.p1.e.to_bits(), b.0.p1.e.to_bits());
    }

    #[test]
    fn generated_tracks_are_on_shell() {
        let cfg = GeneratorConfig {
            background_fraction: 0.5,
            ..GeneratorConfig::default()
        };
        let mut events = signal(2_000, Channel::Hydrogen, &cfg);
        events.extend(background(2_000, &cfg));
        for e in &events {
            for p in [e.p1, e.p2] {
                assert!(rel_close(p.mass_sq(), PROTON_MASS * PROTON_MASS, 1e-6));
            }
        }
    }

    fn arb_momentum() -> impl Strategy<Value = [f64; 3]> {
        prop::array::uniform3(-800.0f64..800.0)
    }

    fn arb_beta() -> impl Strategy<Value = [f64; 3]> {
        prop::array::uniform3(-0.55f64..0.55)
    }

    proptest! {
        #[test]
        fn cm_frame_has_zero_momentum(a in arb_momentum(), b in arb_momentum()) {
            let (p1, p2) = (proton(a), proton(b));
            let (c1, c2) = boost_to_pair_cm(&p1, &p2).unwrap();
            let total = c1 + c2;
            prop_assert!(total.p_mag() < 1e-6);
            let s = (p1 + p2).mass();
            prop_assert!(rel_close(total.mass(), s, 1e-9));
            prop_assert!(rel_close(total.e, s, 1e-9));
        }

        #[test]
        fn boost_inverts(a in arb_momentum(), beta in arb_beta()) {
            let p = proton(a);
            let back = p.boost(beta).boost([-beta[0], -beta[1], -beta[2]]);
            for (x, y) in [(back.e, p.e), (back.px, p.px), (back.py, p.py), (back.pz, p.pz)] {
                prop_assert!(rel_close(x, y, 1e-9), "{} vs {}", x, y);
            }
        }

        #[test]
        fn relative_energy_is_frame_invariant(a in arb_momentum(), b in arb_momentum(), beta in arb_beta()) {
            let (p1, p2) = (proton(a), proton(b));
            let lab = relative_kinetic_energy(&p1, &p2).unwrap();
            let boosted = relative_kinetic_energy(&p1.boost(beta), &p2.boost(beta)).unwrap();
            prop_assert!((lab - boosted).abs() < 1e-6);
            prop_assert!(lab > -1e-9);
        }
    }

    #[test]
    fn frame_invariance_on_generated_pairs() {
        let cfg = GeneratorConfig::default();
        let mut rng = stream(99, Purpose::Auxiliary, 0);
        for e in signal(1_000, Channel::Hydrogen, &cfg) {
            let beta = [
                0.6 * (rng.random::<f64>() - 0.5),
                0.6 * (rng.random::<f64>() - 0.5),
                0.6 * (rng.random::<f64>() - 0.5),
            ];
            let lab = e.relative_kinetic_energy().unwrap();
            let moved = relative_kinetic_energy(&e.p1.boost(beta), &e.p2.boost(beta)).unwrap();
            assert!((lab - moved).abs() < 1e-6);
        }
    }
}
