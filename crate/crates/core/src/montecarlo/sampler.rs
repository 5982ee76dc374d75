//! Photoemission point processes driven by the instantaneous port intensities.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::analytic::port_intensity;
use crate::correlators::Port;
use crate::error::{Error, Result};
use crate::model::{DetectorParams, FieldState, LocalOscillator};
use crate::phasor::PhasorSum;

use super::substream;

/// Emission instants for both detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionTimes {
    /// Sorted instants (s) for detector 1 and detector 2.
    pub times: [Vec<f64>; 2],
    pub duration: f64,
    pub seed: u64,
}

impl EmissionTimes {
    pub fn count(&self, port: Port) -> usize {
        self.times[port_slot(port)].len()
    }
}

pub(crate) fn port_slot(port: Port) -> usize {
    match port {
        Port::One => 0,
        Port::Two => 1,
    }
}

fn require_classical(state: &FieldState) -> Result<()> {
    if state.is_squeezed() {
        return Err(Error::NonClassicalInput);
    }
    Ok(())
}

/// Detection rate `η⟨Î_i(t)⟩` as a phasor sum (photon/s).
pub fn rate_phasors(state: &FieldState, lo: &LocalOscillator, det: &DetectorParams, port: Port) -> Result<PhasorSum> {
    require_classical(state)?;
    Ok(port_intensity(state, lo, port).scale(num_complex::Complex64::new(det.eta, 0.0)))
}

/// Instantaneous detection rate at detector `port` (photon/s).
pub fn intensity_rate(state: &FieldState, lo: &LocalOscillator, det: &DetectorParams, port: Port, t: f64) -> Result<f64> {
    // |amplitude|²/2 forms are nonnegative up to rounding
    Ok(rate_phasors(state, lo, det, port)?.eval(t).re.max(0.0))
}

/// Inhomogeneous Poisson sample on `[0, duration]` by thinning against `r_max`.
pub fn sample_thinning<F: Fn(f64) -> f64>(rate: F, r_max: f64, duration: f64, rng: &mut ChaCha20Rng) -> Result<Vec<f64>> {
    if !(r_max.is_finite() && r_max >= 0.0) {
        return Err(Error::RateUnbounded);
    }
    if r_max == 0.0 {
        return Ok(Vec::new());
    }
    let gap = Exp::new(r_max).map_err(|_| Error::RateUnbounded)?;
    let mut out = Vec::with_capacity((r_max * duration * 1.05) as usize + 16);
    let mut t = 0.0;
    loop {
        t += gap.sample(rng);
        if t > duration {
            break;
        }
        let r = rate(t);
        if r > r_max * (1.0 + 1e-9) {
            return Err(Error::RateUnbounded);
        }
        if rng.random::<f64>() * r_max < r {
            out.push(t);
        }
    }
    Ok(out)
}

/// Thinning sample of both detectors; detector `i` uses substream `i` of `seed`.
pub fn sample_emission_times(
    state: &FieldState,
    lo: &LocalOscillator,
    det: &DetectorParams,
    duration: f64,
    seed: u64,
) -> Result<EmissionTimes> {
    let mut times: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for port in [Port::One, Port::Two] {
        let rate = rate_phasors(state, lo, det, port)?;
        let r_max = rate.modulus_bound();
        let mut rng = substream(seed, port_slot(port) as u64);
        times[port_slot(port)] = sample_thinning(|t| rate.eval(t).re, r_max, duration, &mut rng)?;
    }
    Ok(EmissionTimes { times, duration, seed })
}

/// Per-bin photoelectron counts drawn from the exact bin-integrated rate.
///
/// Exact for Delta pulses at the bin resolution and usable at fluxes where
/// thinning would need ~10¹² candidates.
pub fn sample_binned_counts(
    state: &FieldState,
    lo: &LocalOscillator,
    det: &DetectorParams,
    dt: f64,
    n: usize,
    seed: u64,
) -> Result<[Vec<f64>; 2]> {
    let mut out: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for port in [Port::One, Port::Two] {
        let rate = rate_phasors(state, lo, det, port)?;
        let mut rng = substream(seed, port_slot(port) as u64);
        out[port_slot(port)] = rate
            .bin_integrals(dt, n)
            .into_iter()
            .map(|m| draw_poisson(m.re, &mut rng))
            .collect();
    }
    Ok(out)
}

pub(crate) fn draw_poisson(mean: f64, rng: &mut ChaCha20Rng) -> f64 {
    if mean > 0.0 {
        Poisson::new(mean).map_or(0.0, |p| p.sample(rng))
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_field_state, FieldSpec};
    use rand::SeedableRng;
    use std::f64::consts::PI;

    const OMEGA: f64 = 2.0 * PI * 1e5;

    fn vacuum() -> FieldState {
        build_field_state(FieldSpec::single_mode(1e15, 0.0)).unwrap()
    }

    #[test]
    fn bichromatic_rates_sum_to_lo_intensity() {
        let lo = LocalOscillator::bichromatic(1e3, OMEGA, 0.2, 0.9).unwrap();
        let det = DetectorParams::ideal(0.7);
        let s = vacuum();
        let mut avg = 0.0;
        let n = 1000;
        for k in 0..n {
            let t = k as f64 * 1e-5 / n as f64;
            let r1 = intensity_rate(&s, &lo, &det, Port::One, t).unwrap();
            let r2 = intensity_rate(&s, &lo, &det, Port::Two, t).unwrap();
            assert!((r1 - r2).abs() < 1e-6 * r1.max(1.0));
            let expect = 0.7 * 1e6 * (1.0 + (2.0 * OMEGA * t + 0.7).cos());
            assert!((r1 + r2 - expect).abs() < 1e-6 * 1e6);
            avg += (r1 + r2) / n as f64;
        }
        assert!((avg - 0.7e6).abs() < 1e-6 * 0.7e6);
    }

    #[test]
    fn mono_vacuum_rate_is_constant() {
        let lo = LocalOscillator::mono(10.0, 0.0, 0.0).unwrap();
        let det = DetectorParams::ideal(1.0);
        for t in [0.0, 1e-3, 5.0] {
            assert_eq!(intensity_rate(&vacuum(), &lo, &det, Port::One, t).unwrap(), 50.0);
        }
    }

    #[test]
    fn constant_rate_count() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let times = sample_thinning(|_| 1e6, 1e6, 1.0, &mut rng).unwrap();
        assert!((times.len() as f64 - 1e6).abs() < 5000.0);
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert!(*times.last().unwrap() <= 1.0);
    }

    #[test]
    fn zero_rate_and_unbounded() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        assert!(sample_thinning(|_| 0.0, 0.0, 1.0, &mut rng).unwrap().is_empty());
        assert!(matches!(sample_thinning(|_| 2.0, 1.0, 10.0, &mut rng), Err(Error::RateUnbounded)));
        assert!(matches!(sample_thinning(|_| 1.0, f64::INFINITY, 1.0, &mut rng), Err(Error::RateUnbounded)));
    }

    #[test]
    fn same_seed_same_times() {
        let lo = LocalOscillator::bichromatic(30.0, OMEGA, 0.0, 0.0).unwrap();
        let det = DetectorParams::ideal(0.7);
        let a = sample_emission_times(&vacuum(), &lo, &det, 0.01, 42).unwrap();
        let b = sample_emission_times(&vacuum(), &lo, &det, 0.01, 42).unwrap();
        let c = sample_emission_times(&vacuum(), &lo, &det, 0.01, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a.times[0], a.times[1]);
    }

    #[test]
    fn squeezed_input_rejected() {
        use crate::model::{Hypothesis, SqueezePair, SqueezeSpec};
        let mut spec = FieldSpec::with_images(1e15, 1.0, OMEGA, Hypothesis::OneField);
        spec.squeeze = Some(SqueezeSpec::new(vec![SqueezePair::symmetric(0.0, 2.0 * OMEGA, 0.2, 0.0)], 1e3));
        let s = build_field_state(spec).unwrap();
        let lo = LocalOscillator::bichromatic(1e3, OMEGA, 0.0, 0.0).unwrap();
        let r = intensity_rate(&s, &lo, &DetectorParams::ideal(1.0), Port::One, 0.0);
        assert!(matches!(r, Err(Error::NonClassicalInput)));
    }

    #[test]
    fn binned_counts_mean() {
        let lo = LocalOscillator::mono(100.0, 0.0, 0.0).unwrap();
        let det = DetectorParams::ideal(1.0);
        let c = sample_binned_counts(&vacuum(), &lo, &det, 1e-4, 10_000, 3).unwrap();
        // 5000/s × 1 s per arm
        let total: f64 = c[0].iter().sum();
        assert!((total - 5000.0).abs() < 5.0 * 5000f64.sqrt());
    }
}
