//! Closed-form detection chain: photocurrent mean and correlations, the
//! time-averaged photocurrent spectrum, beatnote power, SNRs and noise figure.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlators::{bracket_series, check_strong_lo, lambda_series, second_moments, Port};
use crate::error::{Error, Result};
use crate::model::{
    amplitude_for_power, build_field_state, hz_to_angular, DetectorParams, FieldSpec, FieldState,
    Hypothesis, LocalOscillator, MeasurementConfig, PhaseMode, PulseShape, PLANCK,
};
use crate::phasor::PhasorSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    Analytic,
    Estimated,
}

/// One-sided power spectral density of the differenced photocurrent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Hz, strictly increasing.
    pub freqs: Vec<f64>,
    /// Current² per Hz (normalized units).
    pub psd: Vec<f64>,
    /// Hz.
    pub rbw: f64,
    pub kind: SpectrumKind,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Grid spacing (Hz); zero for single-point spectra.
    pub fn spacing(&self) -> f64 {
        if self.freqs.len() < 2 {
            0.0
        } else {
            self.freqs[1] - self.freqs[0]
        }
    }

    pub fn min_psd(&self) -> f64 {
        self.psd.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `freq_hz,psd` CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(32 * self.len() + 16);
        s.push_str("freq_hz,psd\n");
        for (f, p) in self.freqs.iter().zip(&self.psd) {
            let _ = writeln!(s, "{f:e},{p:e}");
        }
        s
    }
}

/// Linear frequency grid with `points` samples in `[start, stop]` (Hz).
pub fn linear_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (points - 1) as f64;
            (0..points).map(|k| start + step * k as f64).collect()
        }
    }
}

/// Scalar results of one detection run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub p_out: f64,
    /// χ at the beat frequency.
    pub noise_floor: f64,
    pub snr_in_db: f64,
    pub snr_out_db: f64,
    /// `None` when undefined (no signal).
    pub nf_db: Option<f64>,
}

/// Photodiode frequency response `K(ω) = ∫ j(τ) e^{iωτ} dτ`.
pub fn pulse_transfer(pulse: PulseShape, charge: f64, omega: f64) -> Complex64 {
    match pulse {
        PulseShape::Delta => Complex64::new(charge, 0.0),
        PulseShape::Exponential { tau } => Complex64::new(charge, 0.0) / Complex64::new(1.0, -omega * tau),
    }
}

fn transfer(det: &DetectorParams, omega: f64) -> Complex64 {
    pulse_transfer(det.pulse, det.charge, omega)
}

/// `⟨Î₁ − Î₂⟩(t) = i[ℰ^{(+)}⟨Ê^{(−)}⟩ − ℰ^{(−)}⟨Ê^{(+)}⟩]`, split as `ζ + ζ*`
/// with `ζ = iℰ^{(+)}⟨Ê^{(−)}⟩`. Returns ζ.
fn interference_phasors(state: &FieldState, lo: &LocalOscillator) -> PhasorSum {
    lo.field().mul(&state.mean_field_phasors().conj()).scale(Complex64::i())
}

/// Mean intensity `⟨Î_i(t)⟩` at one output port for a coherent input.
pub fn port_intensity(state: &FieldState, lo: &LocalOscillator, port: Port) -> PhasorSum {
    let m = state.mean_field_phasors();
    let l = lo.field();
    let zeta = interference_phasors(state, lo);
    let common = m.mul(&m.conj()).add(&l.mul(&l.conj()));
    let cross = zeta.add(&zeta.conj()).scale(Complex64::new(port.sign(), 0.0));
    common.add(&cross).scale(Complex64::new(0.5, 0.0))
}

/// `y(t)` with `⟨J₋(t)⟩ = 2 Re y(t)`, pulse response included.
fn mean_current_half(state: &FieldState, lo: &LocalOscillator, det: &DetectorParams) -> PhasorSum {
    let zeta = interference_phasors(state, lo);
    PhasorSum::from_terms(zeta.terms().iter().map(|p| crate::phasor::Phasor {
        coef: p.coef * transfer(det, p.freq) * det.eta,
        freq: p.freq,
    }))
}

/// Mean differenced photocurrent `⟨J₋(t)⟩`.
///
/// For Delta pulses and a symmetric bichromatic LO this is
/// `2ηeα_sℰ_l cos(θ_s − θ̄) cos(Ωt + Δθ/2)`.
pub fn mean_diff_current(state: &FieldState, lo: &LocalOscillator, det: &DetectorParams, t: f64) -> f64 {
    2.0 * mean_current_half(state, lo, det).eval(t).re
}

/// Value of a photocurrent correlation: `delta·δ(τ) + regular`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CorrelationValue {
    /// Weight of the δ(τ) shot-noise spike (Delta pulses only).
    pub delta: f64,
    pub regular: f64,
}

/// `⟨ΔJ_i(t) ΔJ_j(t+τ)⟩` to leading order in ℰ_l.
///
/// The shot term uses the leading intensity `|ℰ^{(+)}(t)|²/2`; the excess
/// term folds `λ_ij` through the pulse response.
pub fn current_correlation(
    state: &FieldState,
    lo: &LocalOscillator,
    det: &DetectorParams,
    i: Port,
    j: Port,
    t: f64,
    tau: f64,
) -> Result<CorrelationValue> {
    let lambda = lambda_series(state, lo, i, j)?;
    let mut out = CorrelationValue::default();

    if i == j {
        let l = lo.field();
        let intensity = l.mul(&l.conj()).scale(Complex64::new(0.5, 0.0));
        match det.pulse {
            PulseShape::Delta => {
                out.delta = det.eta * det.charge * det.charge * intensity.eval(t).re;
            }
            PulseShape::Exponential { tau: tp } => {
                let a = (-tau).max(0.0);
                let pref = (det.charge / tp).powi(2) * (-tau / tp).exp();
                let shot: Complex64 = intensity
                    .terms()
                    .iter()
                    .map(|p| {
                        let k = Complex64::new(2.0 / tp, -p.freq);
                        p.coef
                            * Complex64::from_polar(1.0, -p.freq * t)
                            * (-k * a).exp()
                            / k
                    })
                    .sum();
                out.regular += det.eta * pref * shot.re;
            }
        }
    }

    let eta2 = det.eta * det.eta;
    let excess: Complex64 = lambda
        .terms()
        .iter()
        .map(|c| {
            c.coef
                * transfer(det, c.mu - c.nu)
                * transfer(det, c.nu)
                * Complex64::from_polar(1.0, -c.mu * t - c.nu * tau)
        })
        .sum();
    out.regular += eta2 * excess.re;
    Ok(out)
}

/// `⟨ΔJ₋(t) ΔJ₋(t+τ)⟩ = Σ_ij (−1)^{i+j} ⟨ΔJ_i(t) ΔJ_j(t+τ)⟩`.
pub fn autocorr_diff_current(
    state: &FieldState,
    lo: &LocalOscillator,
    det: &DetectorParams,
    t: f64,
    tau: f64,
) -> Result<CorrelationValue> {
    let mut total = CorrelationValue::default();
    for i in [Port::One, Port::Two] {
        for j in [Port::One, Port::Two] {
            let v = current_correlation(state, lo, det, i, j, t, tau)?;
            let s = i.sign() * j.sign();
            total.delta += s * v.delta;
            total.regular += s * v.regular;
        }
    }
    Ok(total)
}

/// A stationary spectral line of the excess photocurrent noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessLine {
    /// Hz.
    pub freq: f64,
    /// One-sided power (current²), may be negative (sub-shot-noise).
    pub power: f64,
}

/// Lines of the time-averaged excess noise, merged by frequency.
pub fn excess_lines(state: &FieldState, lo: &LocalOscillator, det: &DetectorParams) -> Result<(Vec<ExcessLine>, f64)> {
    let moments = second_moments(state)?;
    if moments.is_zero() {
        return Ok((Vec::new(), 0.0));
    }
    check_strong_lo(state, lo, &moments)?;
    let series = bracket_series(state, lo, &moments);
    let eta2 = det.eta * det.eta;
    let mut lines: Vec<ExcessLine> = Vec::new();
    for term in series.stationary() {
        let gain = transfer(det, -term.nu) * transfer(det, term.nu);
        let power = eta2 * (term.coef * gain).re;
        let freq = term.nu.abs() / (2.0 * PI);
        match lines.iter_mut().find(|l| (l.freq - freq).abs() <= 1e-9 * freq.max(1.0)) {
            Some(l) => l.power += power,
            None => lines.push(ExcessLine { freq, power }),
        }
    }
    lines.sort_by(|a, b| a.freq.total_cmp(&b.freq));
    Ok((lines, moments.bandwidth()))
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(Error::ConfigViolation("frequency grid must be finite and non-negative".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ConfigViolation("frequency grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Heterodyne frequency Ω (rad/s) of the configuration; 0 for homodyne.
pub fn beat_frequency(state: &FieldState, lo: &LocalOscillator) -> f64 {
    let s = state.signal_mode().map_or(0.0, |m| m.detuning);
    lo.heterodyne_frequency(s)
}

/// Shot-noise floor `χ(ω) = 2η|K(ω)|²ℰ_l²` at angular frequency ω.
pub fn shot_floor(lo: &LocalOscillator, det: &DetectorParams, omega: f64) -> f64 {
    2.0 * det.eta * transfer(det, omega).norm_sqr() * lo.flux()
}

/// Time-averaged one-sided photocurrent PSD on `grid` (Hz).
///
/// Coherent inputs give the shot floor only. Squeezed inputs add the
/// stationary excess lines; each discrete mode has the squeeze bandwidth B,
/// so a line of power P adds `P·overlap/(B·RBW)` to a grid point whose RBW
/// window overlaps it.
pub fn psd_analytic(
    state: &FieldState,
    lo: &LocalOscillator,
    det: &DetectorParams,
    cfg: &MeasurementConfig,
    grid: &[f64],
) -> Result<Spectrum> {
    check_grid(grid)?;
    cfg.check_rbw(beat_frequency(state, lo))?;
    let (lines, bandwidth) = excess_lines(state, lo, det)?;
    let rbw = cfg.rbw;
    let psd = grid
        .iter()
        .map(|&f| {
            let mut v = shot_floor(lo, det, hz_to_angular(f));
            for line in &lines {
                let lo_edge = (f - rbw / 2.0).max(line.freq - bandwidth / 2.0);
                let hi_edge = (f + rbw / 2.0).min(line.freq + bandwidth / 2.0);
                if hi_edge > lo_edge {
                    v += line.power * (hi_edge - lo_edge) / (bandwidth * rbw);
                }
            }
            v
        })
        .collect();
    Ok(Spectrum { freqs: grid.to_vec(), psd, rbw, kind: SpectrumKind::Analytic })
}

/// Time-averaged power of the mean output current, `⟨⟨J₋(t)⟩²⟩`.
///
/// [`PhaseMode::Averaged`] also averages over a uniformly distributed signal
/// phase, giving `(ηeα_sℰ_l)²` for the symmetric bichromatic LO;
/// `Fixed(θ̄)` gives twice that.
pub fn output_signal_power(state: &FieldState, lo: &LocalOscillator, det: &DetectorParams) -> f64 {
    let y = mean_current_half(state, lo, det);
    let coherent: f64 = y.terms().iter().map(|p| p.coef.norm_sqr()).sum();
    let phase_locked = match state.phase_mode() {
        PhaseMode::Averaged => 0.0,
        PhaseMode::Fixed(_) => y.mul(&y).time_average().re,
    };
    2.0 * coherent + 2.0 * phase_locked
}

fn require_coherent(state: &FieldState) -> Result<()> {
    if state.is_squeezed() {
        return Err(Error::Unsupported("SNR and noise figure are defined for coherent input only".into()));
    }
    Ok(())
}

fn to_db(x: f64) -> f64 {
    if x > 0.0 {
        10.0 * x.log10()
    } else {
        f64::NEG_INFINITY
    }
}

/// Output SNR `P_out / (χ(Ω)·RBW)` in dB.
pub fn snr_out(state: &FieldState, lo: &LocalOscillator, det: &DetectorParams, cfg: &MeasurementConfig) -> Result<f64> {
    require_coherent(state)?;
    let floor = shot_floor(lo, det, beat_frequency(state, lo));
    Ok(to_db(output_signal_power(state, lo, det) / (floor * cfg.rbw)))
}

/// Input SNR: detected signal photons in the window t_meas = 1/RBW, in dB.
pub fn snr_in(state: &FieldState, det: &DetectorParams, cfg: &MeasurementConfig) -> Result<f64> {
    require_coherent(state)?;
    Ok(to_db(det.eta * state.coherent_flux() * cfg.window()))
}

/// `NF = SNR_in − SNR_out` (dB); `None` when there is no signal.
pub fn noise_figure(
    state: &FieldState,
    lo: &LocalOscillator,
    det: &DetectorParams,
    cfg: &MeasurementConfig,
) -> Result<Option<f64>> {
    let (i, o) = (snr_in(state, det, cfg)?, snr_out(state, lo, det, cfg)?);
    Ok((i.is_finite() && o.is_finite()).then(|| i - o))
}

pub fn detection_report(
    state: &FieldState,
    lo: &LocalOscillator,
    det: &DetectorParams,
    cfg: &MeasurementConfig,
) -> Result<DetectionReport> {
    let snr_in_db = snr_in(state, det, cfg)?;
    let snr_out_db = snr_out(state, lo, det, cfg)?;
    let nf_db = (snr_in_db.is_finite() && snr_out_db.is_finite()).then(|| snr_in_db - snr_out_db);
    Ok(DetectionReport {
        p_out: output_signal_power(state, lo, det),
        noise_floor: shot_floor(lo, det, beat_frequency(state, lo)),
        snr_in_db,
        snr_out_db,
        nf_db,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub power_w: f64,
    pub snr_in_db: f64,
    pub snr_out_db: f64,
    pub nf_db: f64,
}

/// Heterodyne frequency used for the noise-figure table (rad/s).
pub const TABLE_HETERODYNE: f64 = 2.0 * PI * 1e5;
/// LO flux relative to signal flux for the noise-figure table.
pub const TABLE_LO_RATIO: f64 = 1e4;

/// Noise-figure table for coherent input at the given optical powers.
///
/// Each row runs the full chain: calibrated photon energy → signal
/// amplitude → bichromatic heterodyne detection with a strong LO, RBW = 1/window,
/// phase-averaged output power.
pub fn table1(powers: &[f64], window: f64, eta: f64, photon_energy: f64) -> Result<Vec<Table1Row>> {
    if !(window > 0.0 && photon_energy > 0.0) {
        return Err(Error::InvalidSpec("window and photon energy must be positive".into()));
    }
    let det = DetectorParams::new(eta, PulseShape::Delta)?;
    let carrier = photon_energy / (PLANCK / (2.0 * PI));
    let cfg = MeasurementConfig { rbw: 1.0 / window, ..MeasurementConfig::default() };
    powers
        .iter()
        .map(|&p| {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidSpec(format!("power must be positive, got {p}")));
            }
            let alpha = amplitude_for_power(p, photon_energy);
            let mut spec = FieldSpec::single_mode(carrier, alpha);
            spec.hypothesis = Hypothesis::OneField;
            spec.phase_mode = PhaseMode::Averaged;
            let state = build_field_state(spec)?;
            let lo_amp = (TABLE_LO_RATIO * state.coherent_flux()).sqrt();
            let lo = LocalOscillator::bichromatic(lo_amp, TABLE_HETERODYNE, 0.0, 0.0)?;
            let r = detection_report(&state, &lo, &det, &cfg)?;
            Ok(Table1Row {
                power_w: p,
                snr_in_db: r.snr_in_db,
                snr_out_db: r.snr_out_db,
                nf_db: r.nf_db.unwrap_or(f64::NAN),
            })
        })
        .collect()
}

/// CSV rendering of the table with values rounded to 0.01 dB.
pub fn table1_csv(rows: &[Table1Row]) -> String {
    let mut s = String::from("power_nw,snr_in_db,snr_out_db,nf_db\n");
    for r in rows {
        let nf = if r.nf_db.abs() < 0.005 { 0.0 } else { r.nf_db };
        let _ = writeln!(s, "{:.1},{:.2},{:.2},{:.2}", r.power_w * 1e9, r.snr_in_db, r.snr_out_db, nf);
    }
    s
}
