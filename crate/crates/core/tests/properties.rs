use std::f64::consts::PI;

use proptest::prelude::*;

use hetdet::analytic::{linear_grid, psd_analytic, shot_floor};
use hetdet::correlators::{lambda_ij, second_moments, Port};
use hetdet::model::*;
use hetdet::montecarlo::sampler::sample_emission_times;
use hetdet::montecarlo::welch::welch;
use hetdet::phasor::{Phasor, PhasorSum};

const CARRIER: f64 = 2.0 * PI * 2.85e14;
const OMEGA: f64 = 2.0 * PI * 1e5;

fn hypothesis() -> impl Strategy<Value = Hypothesis> {
    prop_oneof![Just(Hypothesis::OneField), Just(Hypothesis::ThreeFields)]
}

fn port() -> impl Strategy<Value = Port> {
    prop_oneof![Just(Port::One), Just(Port::Two)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coherent_lambda_vanishes(
        amp in 0.0..200.0f64,
        lo_amp in 2e3..2e4f64,
        th1 in 0.0..6.3f64,
        th2 in 0.0..6.3f64,
        hyp in hypothesis(),
        i in port(),
        j in port(),
        t in 0.0..1.0f64,
        lag in -1e-3..1e-3f64,
    ) {
        let s = build_field_state(FieldSpec::with_images(CARRIER, amp, OMEGA, hyp)).unwrap();
        let lo = LocalOscillator::bichromatic(lo_amp, OMEGA, th1, th2).unwrap();
        prop_assert!(second_moments(&s).unwrap().is_zero());
        prop_assert_eq!(lambda_ij(&s, &lo, i, j, t, lag).unwrap(), 0.0);
    }

    #[test]
    fn squeezed_psd_nonnegative(
        r in 0.0..1.5f64,
        phi in 0.0..(2.0 * PI),
        eta in 0.05..1.0f64,
        th1 in 0.0..6.3f64,
        th2 in 0.0..6.3f64,
        hyp in hypothesis(),
        cross in any::<bool>(),
        tau in prop::option::of(1e-8..1e-6f64),
    ) {
        let mut spec = FieldSpec::with_images(CARRIER, 0.0, OMEGA, hyp);
        let mut sq = SqueezeSpec::new(vec![SqueezePair::symmetric(0.0, 2.0 * OMEGA, r, phi)], 1e3);
        sq.cross_field_correlations = cross;
        spec.squeeze = Some(sq);
        let s = build_field_state(spec).unwrap();
        let lo = LocalOscillator::bichromatic(1e4, OMEGA, th1, th2).unwrap();
        let pulse = tau.map_or(PulseShape::Delta, |tau| PulseShape::Exponential { tau });
        let det = DetectorParams::new(eta, pulse).unwrap();
        let spec = psd_analytic(&s, &lo, &det, &MeasurementConfig::default(), &linear_grid(0.0, 6e5, 601)).unwrap();
        prop_assert!(spec.min_psd() >= 0.0, "min {}", spec.min_psd());
    }

    #[test]
    fn coherent_psd_is_the_floor(amp in 0.0..300.0f64, flux in 1e5..1e7f64, eta in 0.05..1.0f64) {
        let s = build_field_state(FieldSpec::single_mode(CARRIER, amp)).unwrap();
        let lo = LocalOscillator::bichromatic(flux.sqrt(), OMEGA, 0.0, 0.0).unwrap();
        let det = DetectorParams::ideal(eta);
        let grid = linear_grid(0.0, 1e6, 101);
        let spec = psd_analytic(&s, &lo, &det, &MeasurementConfig::default(), &grid).unwrap();
        for (f, p) in grid.iter().zip(&spec.psd) {
            prop_assert_eq!(*p, shot_floor(&lo, &det, 2.0 * PI * f));
            prop_assert!((p - 2.0 * eta * flux).abs() <= 1e-9 * p);
        }
    }

    #[test]
    fn phasor_product_matches_pointwise(
        a in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64, -1e3..1e3f64), 1..5),
        b in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64, -1e3..1e3f64), 1..5),
        t in 0.0..0.1f64,
    ) {
        let mk = |v: &[(f64, f64, f64)]| {
            PhasorSum::from_terms(v.iter().map(|&(re, im, w)| Phasor { coef: num_complex::Complex64::new(re, im), freq: w }))
        };
        let (pa, pb) = (mk(&a), mk(&b));
        let direct = pa.eval(t) * pb.eval(t);
        let prod = pa.mul(&pb).eval(t);
        prop_assert!((direct - prod).norm() <= 1e-9 * (1.0 + direct.norm()));
        prop_assert!(pa.eval(t).norm() <= pa.modulus_bound() + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn emission_times_deterministic(seed in any::<u64>(), amp in 0.0..50.0f64) {
        let s = build_field_state(FieldSpec::single_mode(CARRIER, amp)).unwrap();
        let lo = LocalOscillator::bichromatic(100.0, OMEGA, 0.0, 0.0).unwrap();
        let det = DetectorParams::ideal(0.7);
        let a = sample_emission_times(&s, &lo, &det, 0.01, seed).unwrap();
        let b = sample_emission_times(&s, &lo, &det, 0.01, seed).unwrap();
        prop_assert_eq!(&a.times, &b.times);
        for port in &a.times {
            prop_assert!(port.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(port.iter().all(|&t| (0.0..0.01).contains(&t)));
        }
    }

    #[test]
    fn welch_of_white_noise_is_nonnegative(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..20_000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cfg = MeasurementConfig { rbw: 1e3, sample_rate: 1e6, duration: 0.02, n_segments: 8, ..MeasurementConfig::default() };
        let spec = welch(&x, 1e6, &cfg).unwrap();
        prop_assert!(spec.min_psd() >= 0.0);
        // uniform(-1, 1) has variance 1/3 spread over 500 kHz
        let mid = spec.psd[spec.len() / 4..3 * spec.len() / 4].iter().sum::<f64>() / (spec.len() / 2) as f64;
        prop_assert!((mid / (1.0 / 3.0 / 5e5) - 1.0).abs() < 0.1, "{}", mid);
    }
}
