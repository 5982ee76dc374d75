//! Domain types and the unit bridge.
//!
//! Units: quantization volume and electron charge are both 1, and `√(ħω/2)`
//! is absorbed into the amplitudes. A coherent mode with amplitude `α` then
//! carries a photon flux of `|α|²/2` photon/s and a local oscillator with
//! amplitude `ℰ` carries `ℰ²` photon/s. Frequencies are stored as angular
//! detunings (rad/s) from a common optical carrier; the carrier itself is only
//! used for validation and reporting.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasor::{PhasorSum, FREQ_EPS};

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn hz_to_angular(f: f64) -> f64 {
    2.0 * PI * f
}

pub fn angular_to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeLabel {
    Signal,
    Image1,
    Image2,
    /// Member of a signal-field sideband pair.
    Sideband,
}

/// One discrete optical mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldMode {
    /// Angular detuning from the carrier (rad/s).
    pub detuning: f64,
    /// Coherent amplitude in √(photon/s); zero for vacuum modes.
    pub amplitude: Complex64,
    pub label: ModeLabel,
}

impl FieldMode {
    pub fn vacuum(detuning: f64, label: ModeLabel) -> Self {
        Self { detuning, amplitude: Complex64::new(0.0, 0.0), label }
    }

    pub fn coherent(detuning: f64, amplitude: f64, label: ModeLabel) -> Self {
        Self { detuning, amplitude: Complex64::new(amplitude, 0.0), label }
    }

    pub fn is_vacuum(&self) -> bool {
        self.amplitude.norm() == 0.0
    }
}

/// Whether the image sideband modes belong to the signal field or to two
/// additional independent fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hypothesis {
    OneField,
    ThreeFields,
}

impl Hypothesis {
    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::OneField => "one-field",
            Hypothesis::ThreeFields => "three-fields",
        }
    }
}

/// Which field a mode is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldTag {
    Signal,
    Image1,
    Image2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseMode {
    /// Deterministic signal phase θ_s (rad).
    Fixed(f64),
    /// θ_s uniformly distributed; powers use ⟨cos²⟩ = 1/2.
    Averaged,
}

/// Two-mode squeezing of the modes at detunings `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezePair {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub phi: f64,
}

impl SqueezePair {
    /// Pair placed symmetrically at `center ± offset`.
    pub fn symmetric(center: f64, offset: f64, r: f64, phi: f64) -> Self {
        Self { a: center - offset, b: center + offset, r, phi }
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.a + self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezeSpec {
    pub pairs: Vec<SqueezePair>,
    /// Bandwidth (Hz) represented by each discrete squeezed mode. A mode with
    /// occupation N carries a fluctuation flux of N × bandwidth photon/s.
    pub mode_bandwidth: f64,
    /// Keep correlations between modes of different fields under the
    /// three-field hypothesis (image fields inside the squeezing bandwidth).
    pub cross_field_correlations: bool,
}

impl SqueezeSpec {
    pub fn new(pairs: Vec<SqueezePair>, mode_bandwidth: f64) -> Self {
        Self { pairs, mode_bandwidth, cross_field_correlations: false }
    }

    pub fn is_trivial(&self) -> bool {
        self.pairs.iter().all(|p| p.r == 0.0)
    }
}

/// Builder input for [`build_field_state`].
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    /// Optical carrier (rad/s), normally the signal frequency.
    pub carrier: f64,
    pub modes: Vec<FieldMode>,
    pub hypothesis: Hypothesis,
    pub squeeze: Option<SqueezeSpec>,
    pub phase_mode: PhaseMode,
}

impl FieldSpec {
    pub fn single_mode(carrier: f64, amplitude: f64) -> Self {
        Self {
            carrier,
            modes: vec![FieldMode::coherent(0.0, amplitude, ModeLabel::Signal)],
            hypothesis: Hypothesis::OneField,
            squeeze: None,
            phase_mode: PhaseMode::Averaged,
        }
    }

    /// Signal mode at the carrier plus vacuum image modes at `±2Ω`, i.e. at
    /// ω₁+Ω and ω₂−Ω for a bichromatic LO at ω_s ± Ω.
    pub fn with_images(carrier: f64, amplitude: f64, heterodyne: f64, hypothesis: Hypothesis) -> Self {
        Self {
            carrier,
            modes: vec![
                FieldMode::coherent(0.0, amplitude, ModeLabel::Signal),
                FieldMode::vacuum(2.0 * heterodyne, ModeLabel::Image1),
                FieldMode::vacuum(-2.0 * heterodyne, ModeLabel::Image2),
            ],
            hypothesis,
            squeeze: None,
            phase_mode: PhaseMode::Averaged,
        }
    }
}

/// A validated multimode input field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    carrier: f64,
    modes: Vec<FieldMode>,
    hypothesis: Hypothesis,
    squeeze: Option<SqueezeSpec>,
    phase_mode: PhaseMode,
}

pub fn build_field_state(spec: FieldSpec) -> Result<FieldState> {
    let FieldSpec { carrier, modes, hypothesis, squeeze, phase_mode } = spec;
    if !(carrier.is_finite() && carrier > 0.0) {
        return Err(Error::InvalidSpec(format!("carrier must be positive, got {carrier}")));
    }
    if modes.is_empty() {
        return Err(Error::InvalidSpec("at least one mode is required".into()));
    }
    for (i, m) in modes.iter().enumerate() {
        if !m.detuning.is_finite() || !(m.amplitude.re.is_finite() && m.amplitude.im.is_finite()) {
            return Err(Error::InvalidSpec(format!("mode {i} has non-finite parameters")));
        }
        if carrier + m.detuning <= 0.0 {
            return Err(Error::InvalidSpec(format!("mode {i} has non-positive frequency")));
        }
        for (j, other) in modes.iter().enumerate().skip(i + 1) {
            if (m.detuning - other.detuning).abs() <= FREQ_EPS {
                return Err(Error::InvalidSpec(format!(
                    "modes {i} and {j} share frequency offset {} rad/s",
                    m.detuning
                )));
            }
        }
    }
    let images1 = modes.iter().filter(|m| m.label == ModeLabel::Image1).count();
    let images2 = modes.iter().filter(|m| m.label == ModeLabel::Image2).count();
    if hypothesis == Hypothesis::ThreeFields && (images1 != 1 || images2 != 1) {
        return Err(Error::InvalidSpec(
            "three-field hypothesis needs exactly one mode in each image field".into(),
        ));
    }
    if let PhaseMode::Fixed(theta) = phase_mode {
        if !theta.is_finite() {
            return Err(Error::InvalidSpec("signal phase must be finite".into()));
        }
    }
    if let Some(sq) = &squeeze {
        if !(sq.mode_bandwidth.is_finite() && sq.mode_bandwidth > 0.0) {
            return Err(Error::InvalidSpec("squeeze mode bandwidth must be positive".into()));
        }
        let mut seen: Vec<f64> = Vec::new();
        for p in &sq.pairs {
            if !(p.r.is_finite() && p.r >= 0.0) {
                return Err(Error::InvalidSpec(format!("squeeze parameter must be >= 0, got {}", p.r)));
            }
            if !p.phi.is_finite() {
                return Err(Error::InvalidSpec("squeeze phase must be finite".into()));
            }
            if (p.a - p.b).abs() <= FREQ_EPS {
                return Err(Error::InvalidSpec("a squeeze pair needs two distinct modes".into()));
            }
            for f in [p.a, p.b] {
                if seen.iter().any(|s| (s - f).abs() <= FREQ_EPS) {
                    return Err(Error::InvalidSpec(format!(
                        "frequency offset {f} rad/s appears in more than one squeeze pair"
                    )));
                }
                seen.push(f);
            }
        }
    }
    Ok(FieldState { carrier, modes, hypothesis, squeeze, phase_mode })
}

impl FieldState {
    pub fn carrier(&self) -> f64 {
        self.carrier
    }

    pub fn modes(&self) -> &[FieldMode] {
        &self.modes
    }

    pub fn hypothesis(&self) -> Hypothesis {
        self.hypothesis
    }

    pub fn squeeze(&self) -> Option<&SqueezeSpec> {
        self.squeeze.as_ref()
    }

    pub fn phase_mode(&self) -> PhaseMode {
        self.phase_mode
    }

    /// Absolute angular frequency of mode `i`.
    pub fn frequency(&self, i: usize) -> f64 {
        self.carrier + self.modes[i].detuning
    }

    pub fn is_squeezed(&self) -> bool {
        self.squeeze.as_ref().is_some_and(|s| !s.pairs.is_empty())
    }

    pub fn mode_index(&self, detuning: f64) -> Option<usize> {
        self.modes.iter().position(|m| (m.detuning - detuning).abs() <= FREQ_EPS)
    }

    pub fn signal_mode(&self) -> Option<&FieldMode> {
        self.modes.iter().find(|m| m.label == ModeLabel::Signal)
    }

    /// Field a mode is attributed to under the state's hypothesis.
    pub fn field_of(&self, i: usize) -> FieldTag {
        match (self.hypothesis, self.modes[i].label) {
            (Hypothesis::ThreeFields, ModeLabel::Image1) => FieldTag::Image1,
            (Hypothesis::ThreeFields, ModeLabel::Image2) => FieldTag::Image2,
            _ => FieldTag::Signal,
        }
    }

    /// Signal phase used for time-domain quantities. Averaged mode evaluates
    /// at θ_s = 0; phase averaging is applied to powers, not traces.
    pub fn signal_phase(&self) -> f64 {
        match self.phase_mode {
            PhaseMode::Fixed(t) => t,
            PhaseMode::Averaged => 0.0,
        }
    }

    pub fn with_phase_mode(&self, phase_mode: PhaseMode) -> Self {
        Self { phase_mode, ..self.clone() }
    }

    pub fn with_hypothesis(&self, hypothesis: Hypothesis) -> Result<Self> {
        build_field_state(FieldSpec {
            carrier: self.carrier,
            modes: self.modes.clone(),
            hypothesis,
            squeeze: self.squeeze.clone(),
            phase_mode: self.phase_mode,
        })
    }

    /// Mean positive-frequency field `⟨Ê_t^{(+)}(t)⟩` as a phasor sum.
    pub fn mean_field_phasors(&self) -> PhasorSum {
        let rot = Complex64::from_polar(FRAC_1_SQRT_2, self.signal_phase()) * Complex64::i();
        let mut s = PhasorSum::zero();
        for m in &self.modes {
            s.push(m.amplitude * rot, m.detuning);
        }
        s
    }

    /// Coherent photon flux Σ|α_k|²/2 regardless of squeezing.
    pub fn coherent_flux(&self) -> f64 {
        self.modes.iter().map(|m| m.amplitude.norm_sqr() / 2.0).sum()
    }
}

/// Coherent-state photon flux (photon/s).
pub fn photon_flux(state: &FieldState) -> Result<f64> {
    if state.is_squeezed() {
        return Err(Error::Unsupported(
            "closed-form flux holds for coherent states only".into(),
        ));
    }
    Ok(state.coherent_flux())
}

/// Photon energy that makes `10·log10(η·P·t/E)` equal `snr_in_db`.
pub fn calibrate_photon_energy(power: f64, window: f64, eta: f64, snr_in_db: f64) -> Result<f64> {
    for (name, v) in [("power", power), ("window", window), ("eta", eta)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidSpec(format!("{name} must be positive, got {v}")));
        }
    }
    if !snr_in_db.is_finite() {
        return Err(Error::InvalidSpec("SNR must be finite".into()));
    }
    let photons = 10f64.powf(snr_in_db / 10.0);
    Ok(eta * power * window / photons)
}

pub fn photon_wavelength(photon_energy: f64) -> f64 {
    PLANCK * SPEED_OF_LIGHT / photon_energy
}

/// Coherent amplitude for a signal of the given optical power.
pub fn amplitude_for_power(power: f64, photon_energy: f64) -> f64 {
    (2.0 * power / photon_energy).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LoKind {
    Mono { detuning: f64, theta: f64 },
    Bichromatic { detuning1: f64, theta1: f64, detuning2: f64, theta2: f64 },
}

/// Classical local oscillator. `amplitude` is ℰ_l; total LO flux is ℰ_l²
/// for either kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalOscillator {
    pub kind: LoKind,
    pub amplitude: f64,
}

impl LocalOscillator {
    pub fn mono(amplitude: f64, detuning: f64, theta: f64) -> Result<Self> {
        Self::checked(LoKind::Mono { detuning, theta }, amplitude)
    }

    /// Two tones at `center ± heterodyne`, tone 1 on the high side.
    pub fn bichromatic(amplitude: f64, heterodyne: f64, theta1: f64, theta2: f64) -> Result<Self> {
        Self::checked(
            LoKind::Bichromatic {
                detuning1: heterodyne,
                theta1,
                detuning2: -heterodyne,
                theta2,
            },
            amplitude,
        )
    }

    pub fn checked(kind: LoKind, amplitude: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::InvalidSpec(format!("LO amplitude must be >= 0, got {amplitude}")));
        }
        if let LoKind::Bichromatic { detuning1, detuning2, .. } = kind {
            if detuning1 <= detuning2 {
                return Err(Error::InvalidSpec("bichromatic LO needs ω₁ > ω₂".into()));
            }
        }
        Ok(Self { kind, amplitude })
    }

    /// LO photon flux ℰ_l².
    pub fn flux(&self) -> f64 {
        self.amplitude * self.amplitude
    }

    /// `ℰ^{(+)}(t)` as a phasor sum.
    pub fn field(&self) -> PhasorSum {
        let mut s = PhasorSum::zero();
        match self.kind {
            LoKind::Mono { detuning, theta } => {
                s.push(Complex64::from_polar(self.amplitude, theta), detuning);
            }
            LoKind::Bichromatic { detuning1, theta1, detuning2, theta2 } => {
                let a = self.amplitude * FRAC_1_SQRT_2;
                s.push(Complex64::from_polar(a, theta1), detuning1);
                s.push(Complex64::from_polar(a, theta2), detuning2);
            }
        }
        s
    }

    /// Heterodyne frequency Ω (rad/s) relative to the signal at detuning
    /// `signal`: half the tone spacing for a bichromatic LO, the offset for a
    /// mono LO. Zero means homodyne.
    pub fn heterodyne_frequency(&self, signal: f64) -> f64 {
        match self.kind {
            LoKind::Mono { detuning, .. } => (detuning - signal).abs(),
            LoKind::Bichromatic { detuning1, detuning2, .. } => 0.5 * (detuning1 - detuning2),
        }
    }

    /// θ̄ = (θ₁+θ₂)/2 for a bichromatic LO, θ_l for a mono LO.
    pub fn mean_phase(&self) -> f64 {
        match self.kind {
            LoKind::Mono { theta, .. } => theta,
            LoKind::Bichromatic { theta1, theta2, .. } => 0.5 * (theta1 + theta2),
        }
    }

    /// Δθ = θ₂−θ₁ (zero for a mono LO).
    pub fn phase_difference(&self) -> f64 {
        match self.kind {
            LoKind::Mono { .. } => 0.0,
            LoKind::Bichromatic { theta1, theta2, .. } => theta2 - theta1,
        }
    }

    pub fn is_bichromatic(&self) -> bool {
        matches!(self.kind, LoKind::Bichromatic { .. })
    }

    /// Checks symmetric sideband placement ω₁−ω_s = ω_s−ω₂ about the signal mode.
    pub fn check_placement(&self, state: &FieldState) -> Result<()> {
        if let LoKind::Bichromatic { detuning1, detuning2, .. } = self.kind {
            let s = state.signal_mode().map_or(0.0, |m| m.detuning);
            let (up, down) = (detuning1 - s, s - detuning2);
            if up <= 0.0 || (up - down).abs() > FREQ_EPS.max(1e-12 * up.abs()) {
                return Err(Error::InvalidSpec(format!(
                    "LO tones must sit symmetrically about the signal (ω₁−ω_s = {up}, ω_s−ω₂ = {down})"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PulseShape {
    Delta,
    /// `j(t) = (e/τ)·exp(-t/τ)` for t ≥ 0.
    Exponential { tau: f64 },
}

/// Both photodiodes share these parameters. Load resistance is fixed at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub eta: f64,
    pub charge: f64,
    pub pulse: PulseShape,
}

impl DetectorParams {
    pub const LOAD_RESISTANCE: f64 = 1.0;

    pub fn new(eta: f64, pulse: PulseShape) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidSpec(format!("quantum efficiency must lie in (0, 1], got {eta}")));
        }
        if let PulseShape::Exponential { tau } = pulse {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(Error::InvalidSpec(format!("pulse time constant must be positive, got {tau}")));
            }
        }
        Ok(Self { eta, charge: 1.0, pulse })
    }

    pub fn ideal(eta: f64) -> Self {
        Self { eta, charge: 1.0, pulse: PulseShape::Delta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    /// Record length T (s).
    pub duration: f64,
    /// Resolution bandwidth Ω_r (Hz).
    pub rbw: f64,
    pub sample_rate: f64,
    pub seed: u64,
    /// Minimum number of non-overlapping 1/RBW segments in the record.
    pub n_segments: usize,
    /// Fractional overlap between Welch segments.
    pub overlap: f64,
    /// Start the first segment at a random offset within one hop.
    pub randomize_segment_start: bool,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self {
            duration: 2.0,
            rbw: 1e3,
            sample_rate: 1e7,
            seed: 0,
            n_segments: 16,
            overlap: 0.5,
            randomize_segment_start: false,
        }
    }
}

impl MeasurementConfig {
    /// Measurement window t_meas = 1/RBW used by both SNRs.
    pub fn window(&self) -> f64 {
        1.0 / self.rbw
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("duration", self.duration), ("rbw", self.rbw), ("sample_rate", self.sample_rate)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::ConfigViolation(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::ConfigViolation(format!("overlap must lie in [0, 1), got {}", self.overlap)));
        }
        if self.rbw * 2.0 > self.sample_rate {
            return Err(Error::ConfigViolation("RBW exceeds the Nyquist band".into()));
        }
        if self.n_segments < 8 {
            return Err(Error::ConfigViolation(format!("n_segments = {} but at least 8 are required", self.n_segments)));
        }
        Ok(())
    }

    /// RBW constraint Ω/2π > 10·Ω_r for a heterodyne frequency `omega` (rad/s).
    pub fn check_rbw(&self, omega: f64) -> Result<()> {
        let beat = angular_to_hz(omega);
        if beat > 0.0 && beat <= 10.0 * self.rbw {
            return Err(Error::ConfigViolation(format!(
                "RBW {} Hz too wide for heterodyne frequency {beat} Hz (need Ω/2π > 10 RBW)",
                self.rbw
            )));
        }
        Ok(())
    }

    /// Sampling constraint for heterodyne Monte Carlo runs.
    pub fn check_sampling(&self, omega: f64) -> Result<()> {
        let beat = angular_to_hz(omega);
        if self.sample_rate < 10.0 * beat {
            return Err(Error::ConfigViolation(format!(
                "sample rate {} Hz below 10 x heterodyne frequency {beat} Hz",
                self.sample_rate
            )));
        }
        Ok(())
    }
}
