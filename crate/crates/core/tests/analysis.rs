mod common;

use std::f64::consts::PI;

use ehm::analysis::{frf, read_frf_set, rms, write_frf_set, EstimatorConfig};
use ehm::sim::{generate_excitation, run, ExcitationConfig, SimConfig};
use proptest::prelude::*;

fn excitation(duration: f64, seed: u64) -> ehm::sim::ExcitationSignal {
    generate_excitation(&ExcitationConfig { duration, seed, ..Default::default() }, 1000.0).unwrap()
}

#[test]
fn excitation_level_and_quiet_window() {
    let sig = excitation(35.0, 3);
    let s = sig.settle_index();
    for axis in 0..3 {
        assert!(sig.acc[axis][..=s].iter().all(|a| *a == 0.0));
        assert!((rms(&sig.acc[axis][s..]) / 0.1941 - 1.0).abs() < 0.01);
    }
}

#[test]
fn excitation_axes_are_independent() {
    let sig = excitation(65.0, 5);
    let s = sig.settle_index();
    let (x, z) = (&sig.acc[0][s..], &sig.acc[2][s..]);
    let c = x.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() / (rms(x) * rms(z) * x.len() as f64);
    assert!(c.abs() < 0.05, "correlation {c}");
}

#[test]
fn estimator_recovers_analytic_oscillator() {
    let (fn_, zeta) = (5.0, 0.3);
    let sig = excitation(125.0, 1);
    let s = sig.settle_index();
    let base = &sig.acc[2][s..];
    let resp = common::oscillator_response(base, 1e-3, 2.0 * PI * fn_, zeta);
    let r = frf(base, &resp, 1000.0, &EstimatorConfig::default(), "in", "out").unwrap();
    let mut checked = 0;
    for i in 0..r.len() {
        if r.coherence[i] > 0.95 {
            let exact = common::transmissibility(r.freqs[i], fn_, zeta);
            assert!((r.gain[i] / exact - 1.0).abs() < 0.05, "{} Hz: {} vs {exact}", r.freqs[i], r.gain[i]);
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn engine_oscillator_matches_closed_form() {
    let (m, fn_, zeta) = (60.0, 5.0, 0.3);
    let wn = 2.0 * PI * fn_;
    let model = common::base_oscillator(m, m * wn * wn, 2.0 * zeta * m * wn);
    let sim = SimConfig::default();
    let exc = excitation(125.0, 1);
    let out = run(&model, &sim, &exc, None).unwrap();
    let log = out.log.from_time(5.0);
    let r = frf(log.channel("seat.acc_z").unwrap(), log.channel("mass.acc_z").unwrap(), log.sample_rate, &EstimatorConfig::default(), "i", "o")
        .unwrap();
    for i in 0..r.len() {
        let exact = common::transmissibility(r.freqs[i], fn_, zeta);
        assert!(r.coherence[i] < 0.95 || (r.gain[i] / exact - 1.0).abs() < 0.05, "{} Hz", r.freqs[i]);
    }
}

#[test]
fn frf_set_files_round_trip() {
    let sig = excitation(45.0, 2);
    let s = sig.settle_index();
    let base = &sig.acc[2][s..];
    let resp = common::oscillator_response(base, 1e-3, 20.0, 0.2);
    let r = frf(base, &resp, 1000.0, &EstimatorConfig::default(), "seat.acc_z", "mass.acc_z").unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_frf_set(dir.path(), std::slice::from_ref(&r)).unwrap();
    let back = read_frf_set(dir.path()).unwrap();
    assert_eq!(back.len(), 1);
    assert_eq!(back[0].input, r.input);
    assert_eq!(back[0].freqs, r.freqs);
    assert_eq!(back[0].gain, r.gain);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gain_scales_with_output(scale in 0.01f64..100.0, seed in 0u64..1000) {
        let sig = excitation(30.0, seed);
        let s = sig.settle_index();
        let x = &sig.acc[0][s..];
        let y: Vec<f64> = common::oscillator_response(x, 1e-3, 30.0, 0.25);
        let ys: Vec<f64> = y.iter().map(|v| v * scale).collect();
        let cfg = EstimatorConfig::default();
        let a = frf(x, &y, 1000.0, &cfg, "i", "o").unwrap();
        let b = frf(x, &ys, 1000.0, &cfg, "i", "o").unwrap();
        for i in 0..a.len() {
            prop_assert!((b.gain[i] / (scale * a.gain[i]) - 1.0).abs() < 1e-9);
            prop_assert!((b.coherence[i] - a.coherence[i]).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&a.coherence[i]));
        }
    }
}
