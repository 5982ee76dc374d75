//! Welch periodogram and beatnote extraction.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::analytic::{Spectrum, SpectrumKind};
use crate::error::{Error, Result};
use crate::model::MeasurementConfig;

use super::substream;

/// Substream reserved for the segment-start offset.
const SEGMENT_STREAM: u64 = 2;

/// Segments are reduced in fixed chunks so the sum order never depends on
/// the thread count.
const CHUNK: usize = 32;

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos()).collect()
}

/// Welch layout for a record of `len` samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentPlan {
    pub nperseg: usize,
    pub hop: usize,
    pub start: usize,
    pub count: usize,
}

pub fn plan_segments(len: usize, fs: f64, cfg: &MeasurementConfig) -> Result<SegmentPlan> {
    let duration = len as f64 / fs;
    let required = cfg.n_segments as f64 / cfg.rbw;
    if cfg.n_segments < 8 {
        return Err(Error::ConfigViolation(format!("n_segments = {} but at least 8 are required", cfg.n_segments)));
    }
    if duration + 1e-12 < required {
        return Err(Error::TooShort { duration, required, segments: cfg.n_segments });
    }
    let nperseg = (fs / cfg.rbw).round() as usize;
    let hop = (((1.0 - cfg.overlap) * nperseg as f64).round() as usize).max(1);
    let start = if cfg.randomize_segment_start {
        substream(cfg.seed, SEGMENT_STREAM).random_range(0..hop)
    } else {
        0
    };
    if nperseg < 2 || len < start + nperseg {
        return Err(Error::TooShort { duration, required, segments: cfg.n_segments });
    }
    let count = (len - start - nperseg) / hop + 1;
    Ok(SegmentPlan { nperseg, hop, start, count })
}

/// One-sided Welch PSD of `x` sampled at `fs`.
///
/// Segments of fs/RBW samples are mean-removed and Hann-windowed; scaling is
/// `2/(fs·Σw²)` except at DC and Nyquist, so a constant-rate Poisson
/// difference current of total rate R gives `2e²R`.
pub fn welch(x: &[f64], fs: f64, cfg: &MeasurementConfig) -> Result<Spectrum> {
    let plan = plan_segments(x.len(), fs, cfg)?;
    let n = plan.nperseg;
    let w = hann(n);
    let wsum2: f64 = w.iter().map(|v| v * v).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let bins = n / 2 + 1;

    let segments: Vec<usize> = (0..plan.count).map(|k| plan.start + k * plan.hop).collect();
    let partials: Vec<Vec<f64>> = segments
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; bins];
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            for &s in chunk {
                let seg = &x[s..s + n];
                let mean = seg.iter().sum::<f64>() / n as f64;
                for ((b, v), wk) in buf.iter_mut().zip(seg).zip(&w) {
                    *b = Complex64::new((v - mean) * wk, 0.0);
                }
                fft.process_with_scratch(&mut buf, &mut scratch);
                for (a, b) in acc.iter_mut().zip(&buf[..bins]) {
                    *a += b.norm_sqr();
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; bins];
    for p in &partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }

    let scale = 1.0 / (fs * wsum2 * plan.count as f64);
    let psd = total
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let edge = k == 0 || (n % 2 == 0 && k == n / 2);
            v * scale * if edge { 1.0 } else { 2.0 }
        })
        .collect();
    let df = fs / n as f64;
    Ok(Spectrum {
        freqs: (0..bins).map(|k| k as f64 * df).collect(),
        psd,
        rbw: cfg.rbw,
        kind: SpectrumKind::Estimated,
    })
}

/// Welch estimate of the differenced photocurrent `J_−`.
pub fn estimate_psd(trace: &super::CurrentTrace, cfg: &MeasurementConfig) -> Result<Spectrum> {
    welch(&trace.jm, trace.sample_rate(), cfg)
}

/// Beatnote measured on an estimated spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beatnote {
    /// Band-integrated power above the local floor (current²).
    pub power: f64,
    /// Local floor PSD.
    pub floor: f64,
    /// Scatter of the same estimator on floor-only bands.
    pub sigma: f64,
}

/// Half-width of the integration band, in RBW.
pub const BAND_RBW: f64 = 2.0;
const SIDE_INNER_RBW: f64 = 4.0;
const SIDE_OUTER_RBW: f64 = 20.0;

/// Integrates the peak within ±2·RBW of Ω/2π above the floor measured
/// 4–20 RBW away on both sides.
pub fn extract_beatnote(spec: &Spectrum, omega: f64) -> Result<Beatnote> {
    let f0 = omega / (2.0 * PI);
    let df = spec.spacing();
    let rbw = spec.rbw;
    let last = spec.freqs.last().copied().unwrap_or(0.0);
    if spec.len() < 2 || df > rbw * (1.0 + 1e-9) {
        return Err(Error::Unresolved(format!("grid spacing {df} Hz exceeds RBW {rbw} Hz")));
    }
    if f0 - SIDE_OUTER_RBW * rbw < spec.freqs[0] || f0 + SIDE_OUTER_RBW * rbw > last {
        return Err(Error::Unresolved(format!("beat at {f0} Hz too close to the spectrum edge")));
    }
    let eps = 1e-9 * df;
    let band: Vec<f64> = spec
        .freqs
        .iter()
        .zip(&spec.psd)
        .filter(|(f, _)| (**f - f0).abs() <= BAND_RBW * rbw + eps)
        .map(|(_, p)| *p)
        .collect();
    let side = |sign: f64| -> Vec<f64> {
        spec.freqs
            .iter()
            .zip(&spec.psd)
            .filter(|(f, _)| {
                let d = sign * (**f - f0);
                d >= SIDE_INNER_RBW * rbw - eps && d <= SIDE_OUTER_RBW * rbw + eps
            })
            .map(|(_, p)| *p)
            .collect()
    };
    let (lower, upper) = (side(-1.0), side(1.0));
    let all: Vec<f64> = lower.iter().chain(&upper).copied().collect();
    let floor = all.iter().sum::<f64>() / all.len() as f64;
    let width = band.len();
    let power = (band.iter().sum::<f64>() - floor * width as f64) * df;

    let groups: Vec<f64> = [lower, upper]
        .iter()
        .flat_map(|s| s.chunks_exact(width).map(|c| (c.iter().sum::<f64>() - floor * width as f64) * df).collect::<Vec<_>>())
        .collect();
    let sigma = if groups.len() > 1 {
        let m = groups.iter().sum::<f64>() / groups.len() as f64;
        (groups.iter().map(|g| (g - m).powi(2)).sum::<f64>() / (groups.len() - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(Beatnote { power, floor, sigma })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(rbw: f64) -> MeasurementConfig {
        MeasurementConfig { rbw, n_segments: 8, ..MeasurementConfig::default() }
    }

    #[test]
    fn zero_trace_zero_spectrum() {
        let s = welch(&vec![0.0; 100_000], 1e6, &cfg(1e3)).unwrap();
        assert_eq!(s.len(), 501);
        assert!(s.psd.iter().all(|p| *p == 0.0));
    }

    #[test]
    fn too_short_reported() {
        let r = welch(&vec![0.0; 1000], 1e6, &cfg(1e3));
        assert!(matches!(r, Err(Error::TooShort { .. })));
    }

    #[test]
    fn pure_cosine_power_recovered() {
        // A cos(Ωt): power A²/2
        let fs = 1e6;
        let a = 3.0;
        let x: Vec<f64> = (0..200_000).map(|k| a * (2.0 * PI * 5e4 * k as f64 / fs + 0.3).cos()).collect();
        let s = welch(&x, fs, &cfg(1e3)).unwrap();
        let b = extract_beatnote(&s, 2.0 * PI * 5e4).unwrap();
        assert!((b.power / (a * a / 2.0) - 1.0).abs() < 1e-9, "{b:?}");
        let total: f64 = s.psd.iter().sum::<f64>() * s.spacing();
        assert!((total / (a * a / 2.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn parallel_reduction_deterministic() {
        let x: Vec<f64> = (0..300_000u64).map(|k| (k.wrapping_mul(7919) % 1013) as f64).collect();
        let a = welch(&x, 1e6, &cfg(1e3)).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| welch(&x, 1e6, &cfg(1e3)).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn coarse_grid_unresolved() {
        let s = Spectrum { freqs: vec![0.0, 1e4, 2e4], psd: vec![1.0; 3], rbw: 1e3, kind: SpectrumKind::Estimated };
        assert!(matches!(extract_beatnote(&s, 2.0 * PI * 1e4), Err(Error::Unresolved(_))));
    }

    #[test]
    fn randomized_start_shifts_segments() {
        let c = MeasurementConfig { randomize_segment_start: true, seed: 5, ..cfg(1e3) };
        let p = plan_segments(100_000, 1e6, &c).unwrap();
        let q = plan_segments(100_000, 1e6, &c).unwrap();
        assert_eq!(p, q);
        assert!(p.start < p.hop);
    }
}
