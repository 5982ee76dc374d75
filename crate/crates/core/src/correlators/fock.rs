//! Truncated number-basis oracle for two-mode squeezed vacuum.
//!
//! The state `exp(G)|0,0⟩`, `G = r(e^{iφ} a†b† − e^{−iφ} ab)`, is built on the
//! full `N×N` two-mode Fock basis by applying the exponential to the vacuum
//! vector with scaling-and-squaring Taylor steps. No closed-form Bogoliubov
//! result is used, so the moments it returns independently check
//! [`second_moments`](super::second_moments).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest tolerated population on the top Fock level of either mode.
pub const TAIL_LIMIT: f64 = 1e-10;

/// Normally-ordered fluctuation moments of a two-mode state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMoments {
    /// ⟨Δa†Δa⟩
    pub n_a: f64,
    /// ⟨Δb†Δb⟩
    pub n_b: f64,
    /// ⟨Δa†Δb⟩
    pub normal_ab: Complex64,
    /// ⟨ΔaΔb⟩
    pub anomalous_ab: Complex64,
    /// ⟨ΔaΔa⟩
    pub anomalous_aa: Complex64,
    /// ⟨ΔbΔb⟩
    pub anomalous_bb: Complex64,
}

impl PairMoments {
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            (self.n_a - other.n_a).abs(),
            (self.n_b - other.n_b).abs(),
            (self.normal_ab - other.normal_ab).norm(),
            (self.anomalous_ab - other.anomalous_ab).norm(),
            (self.anomalous_aa - other.anomalous_aa).norm(),
            (self.anomalous_bb - other.anomalous_bb).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

struct TwoModeState {
    n: usize,
    amp: Vec<Complex64>,
}

impl TwoModeState {
    fn at(&self, na: usize, nb: usize) -> Complex64 {
        self.amp[na * self.n + nb]
    }

    fn get(&self, na: isize, nb: isize) -> Complex64 {
        if na < 0 || nb < 0 || na as usize >= self.n || nb as usize >= self.n {
            Complex64::new(0.0, 0.0)
        } else {
            self.at(na as usize, nb as usize)
        }
    }
}

fn apply_generator(n: usize, r: f64, phi: f64, v: &[Complex64], out: &mut [Complex64]) {
    let up = Complex64::from_polar(r, phi);
    let down = Complex64::from_polar(r, -phi);
    out.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
    for na in 0..n {
        for nb in 0..n {
            let c = v[na * n + nb];
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            if na + 1 < n && nb + 1 < n {
                let f = (((na + 1) * (nb + 1)) as f64).sqrt();
                out[(na + 1) * n + nb + 1] += up * c * f;
            }
            if na > 0 && nb > 0 {
                let f = ((na * nb) as f64).sqrt();
                out[(na - 1) * n + nb - 1] -= down * c * f;
            }
        }
    }
}

fn squeezed_vacuum(r: f64, phi: f64, n: usize) -> TwoModeState {
    let dim = n * n;
    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    psi[0] = Complex64::new(1.0, 0.0);
    // |G| <= 2 r N; keep each step's norm below 1/4
    let steps = ((8.0 * r * n as f64).ceil() as usize).max(1);
    let h = r / steps as f64;
    let mut term = vec![Complex64::new(0.0, 0.0); dim];
    let mut next = vec![Complex64::new(0.0, 0.0); dim];
    let mut acc = vec![Complex64::new(0.0, 0.0); dim];
    for _ in 0..steps {
        term.copy_from_slice(&psi);
        acc.copy_from_slice(&psi);
        for k in 1..60 {
            apply_generator(n, h, phi, &term, &mut next);
            let inv = 1.0 / k as f64;
            let mut norm = 0.0;
            for (t, x) in term.iter_mut().zip(&next) {
                *t = x * inv;
                norm += t.norm_sqr();
            }
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += t;
            }
            if norm < 1e-36 {
                break;
            }
        }
        psi.copy_from_slice(&acc);
    }
    TwoModeState { n, amp: psi }
}

/// Moments of two-mode squeezed vacuum computed in a truncated Fock basis.
pub fn fock_oracle_moments(r: f64, phi: f64, truncation: usize) -> Result<PairMoments> {
    if !(r.is_finite() && r >= 0.0) || !phi.is_finite() {
        return Err(Error::InvalidSpec(format!("bad squeeze parameters r={r}, phi={phi}")));
    }
    if truncation < 2 {
        return Err(Error::TruncationInsufficient { truncation, population: 1.0 });
    }
    let n = truncation;
    let st = squeezed_vacuum(r, phi, n);

    let top = n - 1;
    let tail: f64 = (0..n)
        .map(|k| st.at(top, k).norm_sqr() + if k != top { st.at(k, top).norm_sqr() } else { 0.0 })
        .sum();
    if tail >= TAIL_LIMIT {
        return Err(Error::TruncationInsufficient { truncation, population: tail });
    }

    let zero = Complex64::new(0.0, 0.0);
    let (mut na_avg, mut nb_avg) = (0.0, 0.0);
    let (mut mean_a, mut mean_b) = (zero, zero);
    let (mut ab, mut adag_b, mut aa, mut bb) = (zero, zero, zero, zero);
    for na in 0..n {
        for nb in 0..n {
            let c = st.at(na, nb);
            let p = c.norm_sqr();
            na_avg += na as f64 * p;
            nb_avg += nb as f64 * p;
            let (ia, ib) = (na as isize, nb as isize);
            let fa = (na as f64).sqrt();
            let fb = (nb as f64).sqrt();
            mean_a += st.get(ia - 1, ib).conj() * c * fa;
            mean_b += st.get(ia, ib - 1).conj() * c * fb;
            ab += st.get(ia - 1, ib - 1).conj() * c * fa * fb;
            adag_b += st.get(ia + 1, ib - 1).conj() * c * fb * ((na + 1) as f64).sqrt();
            aa += st.get(ia - 2, ib).conj() * c * ((na * na.saturating_sub(1)) as f64).sqrt();
            bb += st.get(ia, ib - 2).conj() * c * ((nb * nb.saturating_sub(1)) as f64).sqrt();
        }
    }
    Ok(PairMoments {
        n_a: na_avg - mean_a.norm_sqr(),
        n_b: nb_avg - mean_b.norm_sqr(),
        normal_ab: adag_b - mean_a.conj() * mean_b,
        anomalous_ab: ab - mean_a * mean_b,
        anomalous_aa: aa - mean_a * mean_a,
        anomalous_bb: bb - mean_b * mean_b,
    })
}

/// Runs the oracle against the closed-form moments for the standard
/// squeeze grid and returns the largest entrywise deviation.
pub fn oracle_self_test() -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &r in &[0.1, 0.3, 0.5, 0.8] {
        for &phi in &[0.0, 0.7] {
            let oracle = fock_oracle_moments(r, phi, 60)?;
            let closed = super::closed_form_pair(r, phi);
            worst = worst.max(oracle.max_abs_diff(&closed));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_squeeze_gives_zero_moments() {
        for n in [2, 5, 30] {
            let m = fock_oracle_moments(0.0, 0.0, n).unwrap();
            assert_eq!(m.max_abs_diff(&PairMoments {
                n_a: 0.0,
                n_b: 0.0,
                normal_ab: Complex64::new(0.0, 0.0),
                anomalous_ab: Complex64::new(0.0, 0.0),
                anomalous_aa: Complex64::new(0.0, 0.0),
                anomalous_bb: Complex64::new(0.0, 0.0),
            }), 0.0);
        }
    }

    #[test]
    fn population_matches_sinh_squared() {
        let m = fock_oracle_moments(0.3, 0.0, 30).unwrap();
        let expected = 0.3f64.sinh().powi(2);
        assert!((m.n_a - expected).abs() < 1e-8);
        assert!((m.n_a - 0.092733).abs() < 1e-5);
        assert!((m.n_b - expected).abs() < 1e-8);
    }

    #[test]
    fn coarse_truncation_detected() {
        let err = fock_oracle_moments(1.0, 0.0, 10).unwrap_err();
        assert!(matches!(err, Error::TruncationInsufficient { truncation: 10, .. }));
    }

    #[test]
    fn state_stays_normalized() {
        let st = squeezed_vacuum(0.8, 1.1, 50);
        let norm: f64 = st.amp.iter().map(|c| c.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        // only the diagonal n_a = n_b is populated
        for na in 0..50 {
            for nb in 0..50 {
                if na != nb {
                    assert!(st.at(na, nb).norm() < 1e-14);
                }
            }
        }
    }
}
