use std::collections::BTreeMap;

use nlos_lab::channel::*;
use nlos_lab::scene::*;
use nlos_lab::waveform::{beat_frequency, ArrayConfig, FmcwConfig};
use proptest::prelude::*;

fn scene(scatter: f64, target: Point2D) -> Scene {
    let p = Point2D::new;
    Scene::new(
        p(0.0, 0.0),
        vec![Reflector::new(p(-1.0, 2.5), p(8.0, 2.5), scatter, 0.0)],
        vec![Segment::new(p(1.0, -0.5), p(1.0, 0.9))],
        vec![Target {
            id: "t".into(),
            position: target,
        }],
    )
    .unwrap()
}

fn rlc(scene: &Scene, noise: NoiseSpec) -> RxFrame {
    let states = BTreeMap::from([("t".to_string(), TagState::silent())]);
    simulate_frame(
        scene,
        &states,
        &FmcwConfig::default(),
        &ArrayConfig::default(),
        &ChannelOptions::default(),
        &noise,
        Phase::Rlc,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn returns_scale_with_scatter(k in 0.05..1.0f64, tx in 3.0..7.0f64, ty in -0.4..1.5f64) {
        let target = Point2D::new(tx, ty);
        let base = rlc(&scene(1.0, target), NoiseSpec::noiseless());
        let scaled = rlc(&scene(k, target), NoiseSpec::noiseless());
        let diff = (&scaled.samples - &base.samples * num_complex::Complex64::new(k, 0.0)).norm();
        prop_assert!(diff <= 1e-12 * base.samples.norm().max(1e-300));
    }
}

#[test]
fn noise_power_follows_snr() {
    let s = scene(0.9, Point2D::new(4.0, 0.5));
    let clean = rlc(&s, NoiseSpec::noiseless());
    let reference = reference_amplitude(&s, ["t"]).unwrap();
    for snr in [-10.0, 0.0, 10.0] {
        let noisy = rlc(&s, NoiseSpec::new(Some(snr), 5));
        let n = (&noisy.samples - &clean.samples).norm_squared() / clean.samples.len() as f64;
        let expect = reference * reference / 10f64.powf(snr / 10.0);
        assert!((n / expect - 1.0).abs() < 0.03, "snr {snr}: {n} vs {expect}");
    }
}

#[test]
fn reflector_return_sits_at_its_beat() {
    let s = scene(0.9, Point2D::new(4.0, 0.5));
    let fm = FmcwConfig::default();
    let paths = enumerate_first_order_paths(&s, "t").unwrap();
    assert_eq!(paths.len(), 1);
    let f = rlc(&s, NoiseSpec::noiseless());
    // matched filter at the expected beat picks up the full amplitude
    let fb = beat_frequency(&fm, paths[0].d_rs);
    let spc = f.samples_per_chirp;
    let acc: num_complex::Complex64 = (0..spc)
        .map(|k| f.samples[(0, k)] * num_complex::Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * fb * k as f64 / fm.sample_rate_hz))
        .sum();
    let amp = 0.9 / (paths[0].d_rs * paths[0].d_rs);
    assert!((acc.norm() / spc as f64 / amp - 1.0).abs() < 1e-9);
}
