//! Statistical checks on simulated traces and their spectra.

use serde::{Deserialize, Serialize};

use crate::analytic::Spectrum;

use super::welch::BAND_RBW;

/// 97.5% Student-t quantile (Cornish-Fisher; within 5e-3 for df ≥ 5).
pub fn t_quantile_975(df: f64) -> f64 {
    let z: f64 = 1.959_963_985;
    let z3 = z.powi(3);
    let z5 = z.powi(5);
    let z7 = z.powi(7);
    z + (z3 + z) / (4.0 * df)
        + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * df * df)
        + (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / (384.0 * df.powi(3))
}

/// Frequencies kept for floor statistics: a band `[lo, hi]` Hz minus DC,
/// Ω and 2Ω each widened by ±2·RBW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorBand {
    pub lo: f64,
    pub hi: f64,
    /// Heterodyne frequency (Hz); 0 for homodyne.
    pub beat: f64,
    pub rbw: f64,
}

impl FloorBand {
    /// Default analysis band from 10·RBW up to 40% of the sample rate.
    pub fn standard(beat: f64, rbw: f64, sample_rate: f64) -> Self {
        Self { lo: 10.0 * rbw, hi: 0.4 * sample_rate, beat, rbw }
    }

    pub fn contains(&self, f: f64) -> bool {
        if f < self.lo || f > self.hi {
            return false;
        }
        let guard = BAND_RBW * self.rbw;
        let near = |c: f64| (f - c).abs() <= guard;
        !(near(0.0) || (self.beat > 0.0 && (near(self.beat) || near(2.0 * self.beat))))
    }

    pub fn indices(&self, spec: &Spectrum) -> Vec<usize> {
        spec.freqs.iter().enumerate().filter(|(_, f)| self.contains(**f)).map(|(k, _)| k).collect()
    }
}

/// Mean of `spec / reference` over the floor band.
pub fn floor_ratio(spec: &Spectrum, reference: &[f64], band: &FloorBand) -> (f64, usize) {
    let idx = band.indices(spec);
    let sum: f64 = idx.iter().map(|&k| spec.psd[k] / reference[k]).sum();
    (sum / idx.len() as f64, idx.len())
}

/// Slope test of `ln(spec/reference)` against frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flatness {
    /// Per Hz.
    pub slope: f64,
    pub t_stat: f64,
    pub dof: f64,
    pub critical: f64,
}

impl Flatness {
    pub fn consistent_with_zero(&self) -> bool {
        self.t_stat.abs() < self.critical
    }
}

/// OLS regression on every third band bin; Hann leakage correlates
/// neighbouring bins, every third is close to independent.
pub fn flatness(spec: &Spectrum, reference: &[f64], band: &FloorBand) -> Flatness {
    let pts: Vec<(f64, f64)> = band
        .indices(spec)
        .into_iter()
        .step_by(3)
        .map(|k| (spec.freqs[k], (spec.psd[k] / reference[k]).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let dof = n - 2.0;
    let se = (rss / dof / sxx).sqrt();
    Flatness { slope, t_stat: slope / se, dof, critical: t_quantile_975(dof) }
}

/// Relative mismatch between the sample variance of `x` and `∫PSD df`.
pub fn parseval_mismatch(x: &[f64], spec: &Spectrum) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let integral: f64 = spec.psd.iter().sum::<f64>() * spec.spacing();
    (integral - var).abs() / var
}

/// Zero-lag correlation of two fluctuation series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossCorrelation {
    pub r: f64,
    pub n: usize,
    /// `r·√n`, standard normal under independence.
    pub z: f64,
}

/// Pearson correlation of `a − ea` and `b − eb`.
pub fn zero_lag_correlation(a: &[f64], ea: &[f64], b: &[f64], eb: &[f64]) -> CrossCorrelation {
    let n = a.len();
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let da = a[k] - ea[k];
        let db = b[k] - eb[k];
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    let r = if saa > 0.0 && sbb > 0.0 { sab / (saa * sbb).sqrt() } else { 0.0 };
    CrossCorrelation { r, n, z: r * (n as f64).sqrt() }
}

/// Mean and sample standard deviation.
pub fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let s = if x.len() > 1 {
        (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (m, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::SpectrumKind;

    #[test]
    fn t_quantile_values() {
        // tabulated: t(0.975, 5) = 2.571, t(0.975, 7) = 2.365, t(0.975, 10) = 2.228, t(0.975, 30) = 2.042, t(0.975, 1000) = 1.962
        assert!((t_quantile_975(5.0) - 2.571).abs() < 5e-3);
        assert!((t_quantile_975(7.0) - 2.365).abs() < 2e-3);
        assert!((t_quantile_975(10.0) - 2.228).abs() < 3e-3);
        assert!((t_quantile_975(30.0) - 2.042).abs() < 1e-3);
        assert!((t_quantile_975(1000.0) - 1.962).abs() < 1e-3);
    }

    #[test]
    fn floor_band_exclusions() {
        let b = FloorBand::standard(1e5, 1e3, 1e7);
        assert!(!b.contains(5e3));
        assert!(!b.contains(1e5 + 1.5e3));
        assert!(b.contains(1e5 + 3e3));
        assert!(!b.contains(2e5));
        assert!(b.contains(3e5));
        assert!(!b.contains(4.5e6));
    }

    #[test]
    fn flat_and_sloped() {
        let freqs: Vec<f64> = (0..3000).map(|k| k as f64 * 1e3).collect();
        let reference = vec![1.0; freqs.len()];
        let mut rng = super::super::substream(11, 0);
        let wobble: Vec<f64> = (0..3000).map(|_| 1.0 + 0.01 * (rand::Rng::random::<f64>(&mut rng) - 0.5)).collect();
        let band = FloorBand { lo: 1e4, hi: 2.9e6, beat: 0.0, rbw: 1e3 };
        let flat = Spectrum { freqs: freqs.clone(), psd: wobble.clone(), rbw: 1e3, kind: SpectrumKind::Estimated };
        assert!(flatness(&flat, &reference, &band).consistent_with_zero());
        let sloped: Vec<f64> = wobble.iter().zip(&freqs).map(|(w, f)| w * (1.0 + f * 1e-7)).collect();
        let s = Spectrum { freqs, psd: sloped, rbw: 1e3, kind: SpectrumKind::Estimated };
        assert!(!flatness(&s, &reference, &band).consistent_with_zero());
    }

    #[test]
    fn correlation_of_identical_and_opposite() {
        let a: Vec<f64> = (0..100).map(|k| (k as f64).sin()).collect();
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        let z = vec![0.0; 100];
        assert!((zero_lag_correlation(&a, &z, &a, &z).r - 1.0).abs() < 1e-12);
        assert!((zero_lag_correlation(&a, &z, &neg, &z).r + 1.0).abs() < 1e-12);
    }
}
