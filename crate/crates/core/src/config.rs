//! Strict `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment. Keys are dotted
//! (`lo.flux`); unknown or repeated keys are errors. All frequencies are
//! ordinary frequencies in Hz and become angular frequencies here.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::analytic::{beat_frequency, linear_grid};
use crate::error::{Error, Result};
use crate::model::{
    build_field_state, calibrate_photon_energy, hz_to_angular, DetectorParams, FieldMode, FieldSpec, FieldState,
    Hypothesis, LocalOscillator, MeasurementConfig, ModeLabel, PhaseMode, PulseShape, SqueezePair, SqueezeSpec,
    PLANCK,
};
use crate::montecarlo::{SamplerKind, Scenario, Setup, TableMcParams};

/// Every accepted key with its default (empty = no default).
pub const KEYS: &[(&str, &str)] = &[
    ("seed", "0"),
    ("output_dir", "out"),
    ("field.carrier_hz", ""),
    ("field.signal_flux", "1000"),
    ("field.signal_power_w", ""),
    ("field.phase_mode", "averaged"),
    ("field.theta_s", "0"),
    ("field.hypothesis", "one-field"),
    ("field.image_modes", "false"),
    ("field.sideband_offsets_hz", ""),
    ("squeeze.pairs", ""),
    ("squeeze.mode_bandwidth_hz", ""),
    ("squeeze.cross_field_correlations", "false"),
    ("lo.kind", "bichromatic"),
    ("lo.flux", "1e6"),
    ("lo.heterodyne_hz", "1e5"),
    ("lo.offset_hz", "0"),
    ("lo.theta", "0"),
    ("lo.theta1", "0"),
    ("lo.theta2", "0"),
    ("detector.eta", "0.7"),
    ("detector.pulse", "delta"),
    ("detector.tau_s", ""),
    ("measurement.duration_s", "2"),
    ("measurement.rbw_hz", "1000"),
    ("measurement.sample_rate_hz", "1e7"),
    ("measurement.n_segments", "16"),
    ("measurement.overlap", "0.5"),
    ("measurement.randomize_segment_start", "false"),
    ("measurement.seeds", "8"),
    ("calibration.photon_energy_j", ""),
    ("calibration.reference_power_w", "0.5e-9"),
    ("calibration.reference_window_s", "1e-3"),
    ("calibration.reference_snr_db", "62.68"),
    ("analytic.grid_start_hz", "0"),
    ("analytic.grid_stop_hz", ""),
    ("analytic.grid_points", "1001"),
    ("table1.powers_w", "0.5e-9, 1e-9, 2e-9"),
    ("table1.window_s", "1e-3"),
    ("montecarlo.scenario", "shot-floor"),
    ("montecarlo.sampler", "auto"),
    ("montecarlo.table_duration_s", "0.1"),
    ("montecarlo.table_lo_ratio", "1000"),
    ("output.write_trace", "false"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoChoice {
    Mono,
    Bichromatic,
}

/// Validated run configuration. Frequencies are angular (rad/s).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub photon_energy: f64,
    /// Signal carrier (rad/s, absolute).
    pub carrier: f64,
    pub signal_flux: f64,
    pub phase_mode: PhaseMode,
    pub hypothesis: Hypothesis,
    pub image_modes: bool,
    /// Extra vacuum modes at ± these offsets (rad/s).
    pub sideband_offsets: Vec<f64>,
    /// Pairs with detunings in rad/s relative to the signal.
    pub squeeze_pairs: Vec<SqueezePair>,
    pub mode_bandwidth: f64,
    pub cross_field_correlations: bool,
    pub lo_kind: LoChoice,
    pub lo_flux: f64,
    pub heterodyne: f64,
    pub lo_offset: f64,
    pub lo_theta: f64,
    pub lo_theta1: f64,
    pub lo_theta2: f64,
    pub detector: DetectorParams,
    pub measurement: MeasurementConfig,
    pub seeds: usize,
    /// Analytic grid (Hz).
    pub grid: Vec<f64>,
    pub table_powers: Vec<f64>,
    pub table_window: f64,
    pub scenario: Scenario,
    pub sampler: SamplerKind,
    pub table_duration: f64,
    pub table_lo_ratio: f64,
    pub write_trace: bool,
}

struct Raw {
    values: BTreeMap<String, (usize, String)>,
}

impl Raw {
    fn text(&self, key: &str) -> Option<(usize, &str)> {
        if let Some((line, v)) = self.values.get(key) {
            return Some((*line, v.as_str()));
        }
        KEYS.iter().find(|(k, _)| *k == key).and_then(|(_, d)| (!d.is_empty()).then_some((0, *d)))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.text(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Parse { line, reason: format!("bad value for {key}: '{v}'") }),
        }
    }

    fn req<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::Parse { line: 0, reason: format!("missing {key}") })
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        match self.text(key) {
            None => Ok(Vec::new()),
            Some((line, v)) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|_| Error::Parse { line, reason: format!("bad number '{s}' in {key}") }))
                .collect(),
        }
    }

    fn line(&self, key: &str) -> usize {
        self.values.get(key).map_or(0, |(l, _)| *l)
    }
}

fn parse_lines(text: &str) -> Result<Raw> {
    let mut values = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| Error::Parse { line, reason: "expected `key = value`".into() })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Parse { line, reason: "empty key".into() });
        }
        if !KEYS.iter().any(|(name, _)| *name == k) {
            return Err(Error::UnknownKey(k.to_string()));
        }
        if values.insert(k.to_string(), (line, v.to_string())).is_some() {
            return Err(Error::Parse { line, reason: format!("duplicate key {k}") });
        }
    }
    Ok(Raw { values })
}

fn parse_pairs(raw: &Raw) -> Result<Vec<SqueezePair>> {
    let Some((line, text)) = raw.text("squeeze.pairs") else {
        return Ok(Vec::new());
    };
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let parts: Vec<f64> = item
                .split(':')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse { line, reason: format!("bad squeeze pair '{item}'") })?;
            match parts.as_slice() {
                [a, b, r, phi] => Ok(SqueezePair { a: hz_to_angular(*a), b: hz_to_angular(*b), r: *r, phi: *phi }),
                _ => Err(Error::Parse { line, reason: format!("squeeze pair needs offset_a:offset_b:r:phi, got '{item}'") }),
            }
        })
        .collect()
}

/// Parses configuration text.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let raw = parse_lines(text)?;

    let photon_energy = match raw.get::<f64>("calibration.photon_energy_j")? {
        Some(e) if e > 0.0 => e,
        Some(e) => {
            return Err(Error::Parse { line: raw.line("calibration.photon_energy_j"), reason: format!("photon energy must be positive, got {e}") })
        }
        None => calibrate_photon_energy(
            raw.req("calibration.reference_power_w")?,
            raw.req("calibration.reference_window_s")?,
            raw.req("detector.eta")?,
            raw.req("calibration.reference_snr_db")?,
        )?,
    };
    let carrier = match raw.get::<f64>("field.carrier_hz")? {
        Some(f) => hz_to_angular(f),
        None => 2.0 * PI * photon_energy / PLANCK,
    };
    let signal_flux = match raw.get::<f64>("field.signal_power_w")? {
        Some(p) => p / photon_energy,
        None => raw.req("field.signal_flux")?,
    };
    if !(signal_flux.is_finite() && signal_flux >= 0.0) {
        return Err(Error::ConfigViolation(format!("signal flux must be >= 0, got {signal_flux}")));
    }

    let phase_mode = match raw.req::<String>("field.phase_mode")?.as_str() {
        "fixed" => PhaseMode::Fixed(raw.req("field.theta_s")?),
        "averaged" => PhaseMode::Averaged,
        other => return Err(Error::Parse { line: raw.line("field.phase_mode"), reason: format!("phase_mode must be fixed or averaged, got '{other}'") }),
    };
    let hypothesis = match raw.req::<String>("field.hypothesis")?.as_str() {
        "one-field" => Hypothesis::OneField,
        "three-fields" => Hypothesis::ThreeFields,
        other => return Err(Error::Parse { line: raw.line("field.hypothesis"), reason: format!("hypothesis must be one-field or three-fields, got '{other}'") }),
    };
    let lo_kind = match raw.req::<String>("lo.kind")?.as_str() {
        "mono" => LoChoice::Mono,
        "bichromatic" => LoChoice::Bichromatic,
        other => return Err(Error::Parse { line: raw.line("lo.kind"), reason: format!("lo.kind must be mono or bichromatic, got '{other}'") }),
    };
    let pulse = match raw.req::<String>("detector.pulse")?.as_str() {
        "delta" => PulseShape::Delta,
        "exponential" => PulseShape::Exponential {
            tau: raw.get("detector.tau_s")?.ok_or_else(|| Error::Parse { line: raw.line("detector.pulse"), reason: "exponential pulse needs detector.tau_s".into() })?,
        },
        other => return Err(Error::Parse { line: raw.line("detector.pulse"), reason: format!("pulse must be delta or exponential, got '{other}'") }),
    };
    let detector = DetectorParams::new(raw.req("detector.eta")?, pulse)?;

    let measurement = MeasurementConfig {
        duration: raw.req("measurement.duration_s")?,
        rbw: raw.req("measurement.rbw_hz")?,
        sample_rate: raw.req("measurement.sample_rate_hz")?,
        seed: raw.req("seed")?,
        n_segments: raw.req("measurement.n_segments")?,
        overlap: raw.req("measurement.overlap")?,
        randomize_segment_start: raw.req("measurement.randomize_segment_start")?,
    };
    measurement.validate()?;

    let heterodyne = hz_to_angular(raw.req("lo.heterodyne_hz")?);
    let grid_stop = raw.get::<f64>("analytic.grid_stop_hz")?.unwrap_or(5.0 * heterodyne.max(hz_to_angular(1e5)) / (2.0 * PI));
    let grid = linear_grid(raw.req("analytic.grid_start_hz")?, grid_stop, raw.req("analytic.grid_points")?);

    let cfg = RunConfig {
        seed: measurement.seed,
        output_dir: PathBuf::from(raw.req::<String>("output_dir")?),
        photon_energy,
        carrier,
        signal_flux,
        phase_mode,
        hypothesis,
        image_modes: raw.req("field.image_modes")?,
        sideband_offsets: raw.list("field.sideband_offsets_hz")?.into_iter().map(hz_to_angular).collect(),
        squeeze_pairs: parse_pairs(&raw)?,
        mode_bandwidth: raw.get("squeeze.mode_bandwidth_hz")?.unwrap_or(measurement.rbw),
        cross_field_correlations: raw.req("squeeze.cross_field_correlations")?,
        lo_kind,
        lo_flux: raw.req("lo.flux")?,
        heterodyne,
        lo_offset: hz_to_angular(raw.req("lo.offset_hz")?),
        lo_theta: raw.req("lo.theta")?,
        lo_theta1: raw.req("lo.theta1")?,
        lo_theta2: raw.req("lo.theta2")?,
        detector,
        measurement,
        seeds: raw.req("measurement.seeds")?,
        grid,
        table_powers: raw.list("table1.powers_w")?,
        table_window: raw.req("table1.window_s")?,
        scenario: raw.req::<String>("montecarlo.scenario")?.parse()?,
        sampler: raw.req::<String>("montecarlo.sampler")?.parse()?,
        table_duration: raw.req("montecarlo.table_duration_s")?,
        table_lo_ratio: raw.req("montecarlo.table_lo_ratio")?,
        write_trace: raw.req("output.write_trace")?,
    };

    // surface model and RBW violations at parse time
    let state = cfg.field_state(cfg.hypothesis)?;
    let lo = cfg.local_oscillator()?;
    lo.check_placement(&state)?;
    cfg.measurement.check_rbw(beat_frequency(&state, &lo))?;
    Ok(cfg)
}

/// Reads and parses a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

impl RunConfig {
    pub fn signal_amplitude(&self) -> f64 {
        (2.0 * self.signal_flux).sqrt()
    }

    /// Input field under `hypothesis`. Image modes at ±2Ω are added when
    /// requested or required; squeeze pairs get vacuum modes as needed.
    pub fn field_state(&self, hypothesis: Hypothesis) -> Result<FieldState> {
        let mut modes = vec![FieldMode::coherent(0.0, self.signal_amplitude(), ModeLabel::Signal)];
        let images = self.image_modes || hypothesis == Hypothesis::ThreeFields || self.hypothesis == Hypothesis::ThreeFields;
        if images {
            modes.push(FieldMode::vacuum(2.0 * self.heterodyne, ModeLabel::Image1));
            modes.push(FieldMode::vacuum(-2.0 * self.heterodyne, ModeLabel::Image2));
        }
        let mut add = |w: f64| {
            if !modes.iter().any(|m| (m.detuning - w).abs() <= crate::phasor::FREQ_EPS) {
                modes.push(FieldMode::vacuum(w, ModeLabel::Sideband));
            }
        };
        for &o in &self.sideband_offsets {
            add(o);
            add(-o);
        }
        for p in &self.squeeze_pairs {
            add(p.a);
            add(p.b);
        }
        let squeeze = (!self.squeeze_pairs.is_empty()).then(|| SqueezeSpec {
            pairs: self.squeeze_pairs.clone(),
            mode_bandwidth: self.mode_bandwidth,
            cross_field_correlations: self.cross_field_correlations,
        });
        build_field_state(FieldSpec { carrier: self.carrier, modes, hypothesis, squeeze, phase_mode: self.phase_mode })
    }

    pub fn local_oscillator(&self) -> Result<LocalOscillator> {
        let amp = self.lo_flux.max(0.0).sqrt();
        if !(self.lo_flux >= 0.0) {
            return Err(Error::ConfigViolation(format!("LO flux must be >= 0, got {}", self.lo_flux)));
        }
        match self.lo_kind {
            LoChoice::Mono => LocalOscillator::mono(amp, self.lo_offset, self.lo_theta),
            LoChoice::Bichromatic => LocalOscillator::bichromatic(amp, self.heterodyne, self.lo_theta1, self.lo_theta2),
        }
    }

    /// Monte Carlo setup built from the configured blocks.
    pub fn setup(&self) -> Result<Setup> {
        Ok(Setup {
            state: self.field_state(self.hypothesis)?,
            lo: self.local_oscillator()?,
            det: self.detector,
            cfg: self.measurement,
            sampler: self.sampler,
            seeds: self.seeds,
            keep_trace: self.write_trace,
            table: Some(TableMcParams {
                powers: self.table_powers.clone(),
                photon_energy: self.photon_energy,
                window: self.table_window,
                lo_ratio: self.table_lo_ratio,
                duration: self.table_duration,
            }),
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.measurement.seed = seed;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let c = parse_config_str("# nothing\n\n").unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.lo_kind, LoChoice::Bichromatic);
        assert_eq!(c.lo_flux, 1e6);
        assert_eq!(c.detector.eta, 0.7);
        assert_eq!(c.measurement, MeasurementConfig::default());
        assert_eq!(c.seeds, 8);
        assert_eq!(c.scenario, Scenario::ShotFloor);
        assert!((c.heterodyne - 2.0 * PI * 1e5).abs() < 1e-9);
        assert_eq!(c.grid.len(), 1001);
        assert_eq!(c.table_powers, vec![0.5e-9, 1e-9, 2e-9]);
    }

    #[test]
    fn misspelled_key() {
        let e = parse_config_str("lo.flx = 3\n").unwrap_err();
        assert_eq!(e, Error::UnknownKey("lo.flx".into()));
    }

    #[test]
    fn bad_lines() {
        assert!(matches!(parse_config_str("seed 3"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_config_str("\nseed = x"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_config_str("seed = 1\nseed = 2"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn rbw_too_wide_for_heterodyne() {
        let e = parse_config_str("lo.heterodyne_hz = 5e3\nmeasurement.sample_rate_hz = 1e7\n").unwrap_err();
        assert!(matches!(e, Error::ConfigViolation(_)));
    }

    #[test]
    fn squeeze_pairs_parse() {
        let c = parse_config_str("squeeze.pairs = -2e5:2e5:0.5:0 ; 1e4:-1e4:0.1:1.5\n").unwrap();
        assert_eq!(c.squeeze_pairs.len(), 2);
        assert!((c.squeeze_pairs[0].b - 2.0 * PI * 2e5).abs() < 1e-6);
        let s = c.field_state(Hypothesis::ThreeFields).unwrap();
        assert!(s.is_squeezed());
        assert!(parse_config_str("squeeze.pairs = 1:2:3\n").is_err());
    }

    #[test]
    fn power_overrides_flux() {
        let c = parse_config_str("field.signal_power_w = 1e-9\ncalibration.photon_energy_j = 2e-19\n").unwrap();
        assert!((c.signal_flux - 5e9).abs() < 1.0);
    }

    #[test]
    fn calibrated_photon_energy() {
        let c = parse_config_str("").unwrap();
        assert!((c.photon_energy / 1.888e-19 - 1.0).abs() < 1e-3);
    }
}
