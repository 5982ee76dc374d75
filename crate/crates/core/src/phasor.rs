//! Finite sums of rotating phasors.
//!
//! Every deterministic quantity in the detection chain (mean fields, LO
//! fields, instantaneous intensities, the mean photocurrent) is a finite
//! trigonometric polynomial in time. [`PhasorSum`] represents
//! `f(t) = Σ c_k exp(-i ω_k t)` with angular frequencies measured relative to
//! the optical carrier, so optical-scale phases never enter floating point.

use num_complex::Complex64;

/// Frequencies closer than this (rad/s) are merged and treated as equal.
pub const FREQ_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phasor {
    pub coef: Complex64,
    /// Angular frequency in rad/s (relative to the carrier).
    pub freq: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhasorSum {
    terms: Vec<Phasor>,
}

impl PhasorSum {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = Phasor>) -> Self {
        let mut s = Self::zero();
        for t in terms {
            s.push(t.coef, t.freq);
        }
        s
    }

    /// Adds `coef·exp(-i freq t)`, merging with an existing term at the same frequency.
    pub fn push(&mut self, coef: Complex64, freq: f64) {
        if coef == Complex64::new(0.0, 0.0) {
            return;
        }
        if let Some(t) = self
            .terms
            .iter_mut()
            .find(|t| (t.freq - freq).abs() <= FREQ_EPS)
        {
            t.coef += coef;
        } else {
            self.terms.push(Phasor { coef, freq });
        }
    }

    pub fn terms(&self) -> &[Phasor] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coef.norm() == 0.0)
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|p| p.coef * Complex64::from_polar(1.0, -p.freq * t))
            .sum()
    }

    pub fn conj(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|p| Phasor { coef: p.coef.conj(), freq: -p.freq })
                .collect(),
        }
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self::from_terms(self.terms.iter().map(|p| Phasor { coef: p.coef * k, freq: p.freq }))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for p in &other.terms {
            out.push(p.coef, p.freq);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for a in &self.terms {
            for b in &other.terms {
                out.push(a.coef * b.coef, a.freq + b.freq);
            }
        }
        out
    }

    /// Long-time average: the coefficient of the zero-frequency term.
    pub fn time_average(&self) -> Complex64 {
        self.terms
            .iter()
            .filter(|p| p.freq.abs() <= FREQ_EPS)
            .map(|p| p.coef)
            .sum()
    }

    /// Upper bound on `|f(t)|` valid for all t.
    pub fn modulus_bound(&self) -> f64 {
        self.terms.iter().map(|p| p.coef.norm()).sum()
    }

    /// Exact integral of `f` over `[t0, t1]`.
    pub fn integral(&self, t0: f64, t1: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|p| p.coef * phasor_integral(p.freq, t0, t1))
            .sum()
    }

    /// Integrals of `f` over consecutive bins `[k·dt, (k+1)·dt)`, `k < n`.
    ///
    /// Uses a per-term rotation recurrence re-anchored every 4096 bins, so the
    /// cost is a few complex multiplies per bin per term.
    pub fn bin_integrals(&self, dt: f64, n: usize) -> Vec<Complex64> {
        const ANCHOR: usize = 4096;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for p in &self.terms {
            let base = p.coef * phasor_integral(p.freq, 0.0, dt);
            let step = Complex64::from_polar(1.0, -p.freq * dt);
            let mut k = 0;
            while k < n {
                let mut rot = Complex64::from_polar(1.0, -p.freq * dt * k as f64);
                let end = (k + ANCHOR).min(n);
                for slot in &mut out[k..end] {
                    *slot += base * rot;
                    rot *= step;
                }
                k = end;
            }
        }
        out
    }
}

/// `∫_{t0}^{t1} exp(-i ω t) dt`.
pub fn phasor_integral(freq: f64, t0: f64, t1: f64) -> Complex64 {
    let w = t1 - t0;
    let x = freq * w / 2.0;
    // sinc form stays accurate as freq -> 0
    let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    Complex64::from_polar(w * sinc, -freq * (t0 + t1) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn merges_equal_frequencies() {
        let mut s = PhasorSum::zero();
        s.push(c(1.0, 0.0), 3.0);
        s.push(c(0.5, 0.5), 3.0);
        assert_eq!(s.terms().len(), 1);
        assert_eq!(s.terms()[0].coef, c(1.5, 0.5));
    }

    #[test]
    fn modulus_squared_of_two_tones() {
        // |e^{-i w1 t} + e^{-i w2 t}|^2 = 2 + 2 cos((w1-w2) t)
        let f = PhasorSum::from_terms([
            Phasor { coef: c(1.0, 0.0), freq: 5.0 },
            Phasor { coef: c(1.0, 0.0), freq: -5.0 },
        ]);
        let m = f.mul(&f.conj());
        assert_relative_eq!(m.time_average().re, 2.0);
        for &t in &[0.0, 0.1, 0.37, 2.0] {
            assert_relative_eq!(m.eval(t).re, 2.0 + 2.0 * (10.0 * t).cos(), epsilon = 1e-12);
            assert!(m.eval(t).im.abs() < 1e-12);
        }
    }

    #[test]
    fn integral_matches_quadrature() {
        let f = PhasorSum::from_terms([
            Phasor { coef: c(0.3, -1.0), freq: 7.0 },
            Phasor { coef: c(2.0, 0.0), freq: 0.0 },
        ]);
        let (t0, t1) = (0.2, 1.3);
        let n = 20_000;
        let h = (t1 - t0) / n as f64;
        let mid: Complex64 = (0..n).map(|k| f.eval(t0 + (k as f64 + 0.5) * h) * h).sum();
        let exact = f.integral(t0, t1);
        assert!((mid - exact).norm() < 1e-7);
    }

    #[test]
    fn bin_integrals_agree_with_direct() {
        let f = PhasorSum::from_terms([
            Phasor { coef: c(1.0, 0.2), freq: 2.0 * std::f64::consts::PI * 1e5 },
            Phasor { coef: c(0.5, 0.0), freq: 0.0 },
        ]);
        let dt = 1e-7;
        let bins = f.bin_integrals(dt, 10_000);
        for &k in &[0usize, 1, 4095, 4096, 4097, 9999] {
            let direct = f.integral(k as f64 * dt, (k + 1) as f64 * dt);
            assert!((bins[k] - direct).norm() < 1e-15, "bin {k}");
        }
    }
}
