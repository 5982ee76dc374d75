//! Photocurrent synthesis on a uniform sample grid, plus the binary trace format.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::analytic::pulse_transfer;
use crate::correlators::Port;
use crate::error::{Error, Result};
use crate::model::{DetectorParams, FieldState, LocalOscillator, PulseShape};
use crate::phasor::{Phasor, PhasorSum};

use super::sampler::{port_slot, rate_phasors, EmissionTimes};

/// Sampled photocurrents; `jm = j1 − j2` samplewise.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentTrace {
    pub dt: f64,
    pub j1: Vec<f64>,
    pub j2: Vec<f64>,
    pub jm: Vec<f64>,
}

impl CurrentTrace {
    pub fn from_arms(dt: f64, j1: Vec<f64>, j2: Vec<f64>) -> Self {
        let jm = j1.iter().zip(&j2).map(|(a, b)| a - b).collect();
        Self { dt, j1, j2, jm }
    }

    pub fn len(&self) -> usize {
        self.jm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jm.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.dt
    }

    pub fn arm(&self, port: Port) -> &[f64] {
        match port {
            Port::One => &self.j1,
            Port::Two => &self.j2,
        }
    }
}

/// Number of samples covering `duration` at spacing `dt`.
pub fn grid_len(duration: f64, dt: f64) -> usize {
    // tolerate T/dt landing a hair above an integer
    (duration / dt - 1e-9).ceil().max(0.0) as usize
}

/// Per-bin charges (not yet divided by dt) from emission instants.
fn bin_charges(times: &[f64], pulse: PulseShape, charge: f64, dt: f64, n: usize) -> Vec<f64> {
    let mut q = vec![0.0; n];
    match pulse {
        PulseShape::Delta => {
            for &t in times {
                let k = ((t / dt) as usize).min(n.saturating_sub(1));
                if n > 0 {
                    q[k] += charge;
                }
            }
        }
        PulseShape::Exponential { tau } => {
            // exact charge of e/τ·exp(-(t-t_i)/τ) landing in each bin
            let decay = (-dt / tau).exp();
            let mut pending = 0.0;
            let mut idx = 0;
            for (k, slot) in q.iter_mut().enumerate() {
                let edge = (k + 1) as f64 * dt;
                let mut fresh = 0.0;
                let mut carry = 0.0;
                while idx < times.len() && (times[idx] < edge || k + 1 == n) && times[idx] >= 0.0 {
                    let left = (-(edge - times[idx]).max(0.0) / tau).exp();
                    fresh += charge * (1.0 - left);
                    carry += charge * left;
                    idx += 1;
                }
                *slot = pending * (1.0 - decay) + fresh;
                pending = pending * decay + carry;
            }
        }
    }
    q
}

/// `J_i(t) = Σ j(t − t_i)` sampled as bin averages on `[0, T)`.
///
/// Delta pulses become e/dt impulses, so `Σ J_i·dt = e·N_i` exactly.
pub fn synthesize_current(times: &EmissionTimes, pulse: PulseShape, charge: f64, dt: f64) -> CurrentTrace {
    let n = grid_len(times.duration, dt);
    let arm = |port: Port| {
        let mut q = bin_charges(&times.times[port_slot(port)], pulse, charge, dt, n);
        q.iter_mut().for_each(|x| *x /= dt);
        q
    };
    CurrentTrace::from_arms(dt, arm(Port::One), arm(Port::Two))
}

/// Current from per-bin counts; emissions are placed at bin centres.
pub fn synthesize_from_counts(counts: &[Vec<f64>; 2], pulse: PulseShape, charge: f64, dt: f64) -> CurrentTrace {
    let arm = |c: &Vec<f64>| -> Vec<f64> {
        match pulse {
            PulseShape::Delta => c.iter().map(|k| k * charge / dt).collect(),
            PulseShape::Exponential { tau } => {
                let decay = (-dt / tau).exp();
                let first = 1.0 - (-0.5 * dt / tau).exp();
                let mut pending = 0.0;
                c.iter()
                    .map(|&k| {
                        let q = pending * (1.0 - decay) + k * charge * first;
                        pending = pending * decay + k * charge * (1.0 - first);
                        q / dt
                    })
                    .collect()
            }
        }
    };
    CurrentTrace::from_arms(dt, arm(&counts[0]), arm(&counts[1]))
}

/// Expected bin-averaged current `⟨J_i⟩` on the sample grid.
pub fn expected_current(
    state: &FieldState,
    lo: &LocalOscillator,
    det: &DetectorParams,
    port: Port,
    dt: f64,
    n: usize,
) -> Result<Vec<f64>> {
    let rate = rate_phasors(state, lo, det, port)?;
    let filtered = PhasorSum::from_terms(rate.terms().iter().map(|p| Phasor {
        coef: p.coef * pulse_transfer(det.pulse, det.charge, p.freq),
        freq: p.freq,
    }));
    Ok(filtered.bin_integrals(dt, n).into_iter().map(|c: Complex64| c.re / dt).collect())
}

const TRACE_MAGIC: &[u8; 8] = b"HETDTRC\0";
const TRACE_VERSION: u32 = 1;

/// Writes `J_−` as a 32-byte header (magic, version, reserved, dt, length)
/// followed by little-endian f64 samples.
pub fn write_trace(path: &Path, trace: &CurrentTrace) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(TRACE_MAGIC)?;
    w.write_all(&TRACE_VERSION.to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    w.write_all(&trace.dt.to_le_bytes())?;
    w.write_all(&(trace.jm.len() as u64).to_le_bytes())?;
    for x in &trace.jm {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace written by [`write_trace`]; returns `(dt, J_−)`.
pub fn read_trace(path: &Path) -> Result<(f64, Vec<f64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 32];
    r.read_exact(&mut head)?;
    if &head[..8] != TRACE_MAGIC {
        return Err(Error::Io("not a trace file".into()));
    }
    let version = u32::from_le_bytes(head[8..12].try_into().unwrap());
    if version != TRACE_VERSION {
        return Err(Error::Io(format!("unsupported trace version {version}")));
    }
    let dt = f64::from_le_bytes(head[16..24].try_into().unwrap());
    let len = u64::from_le_bytes(head[24..32].try_into().unwrap()) as usize;
    let mut buf = vec![0u8; len * 8];
    r.read_exact(&mut buf)?;
    let samples = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((dt, samples))
}
