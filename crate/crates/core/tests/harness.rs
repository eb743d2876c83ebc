use std::process::Command;

use nlos_lab::error::Error;
use nlos_lab::harness::scenes::reference_scene;
use nlos_lab::harness::report::SUMMARY_HEADER;
use nlos_lab::harness::*;
use nlos_lab::receiver::Verdict;

fn reference(trials: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(reference_scene());
    cfg.trials = trials;
    cfg.seed = 11;
    cfg
}

fn strip_timing(mut recs: Vec<TrialRecord>) -> Vec<TrialRecord> {
    for r in &mut recs {
        r.timing_ms = 0.0;
    }
    recs
}

#[test]
fn runs_are_deterministic() {
    let cfg = reference(3);
    let a = strip_timing(run_scenario(&cfg).unwrap());
    let b = strip_timing(run_scenario(&cfg).unwrap());
    assert_eq!(a.len(), 3);
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    let mut other = cfg.clone();
    other.seed = 12;
    let c = strip_timing(run_scenario(&other).unwrap());
    assert_ne!(format!("{a:?}"), format!("{c:?}"));
}

#[test]
fn noiseless_reference_room_is_accurate() {
    let mut cfg = reference(10);
    cfg.noise.snr_db = None;
    let recs = run_scenario(&cfg).unwrap();
    let s = summarize("noiseless", &recs);
    assert_eq!(s.success_rate, 1.0);
    assert!(s.median_err_cm < 5.0, "median {} cm", s.median_err_cm);
    assert!(recs.iter().all(|r| r.verdict == Verdict::Nlos));
}

#[test]
fn open_line_of_sight_is_flagged() {
    let mut cfg = reference(5);
    cfg.scene.obstacles.clear();
    let recs = run_scenario(&cfg).unwrap();
    assert!(recs.iter().all(|r| r.verdict == Verdict::Los), "{recs:?}");
}

#[test]
fn csv_headers() {
    let recs = run_scenario(&reference(1)).unwrap();
    let mut buf = Vec::new();
    write_trials_csv(&recs, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "trial,target,truth_x,truth_y,est_x,est_y,err_x_cm,err_y_cm,err_cm,verdict,anchors_used"
    );
    assert_eq!(text.lines().count(), 2);

    let mut buf = Vec::new();
    let s = summarize("x", &recs);
    write_summary_csv(&[(s, Some("snr"), Some(0.0), None)], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), SUMMARY_HEADER.join(","));
    // ratio cell left empty
    assert!(text.lines().nth(1).unwrap().ends_with(','));
}

#[test]
fn median_counts_failures_as_infinite() {
    assert_eq!(median_with_failures([1.0, f64::NAN, f64::NAN]), f64::INFINITY);
    assert_eq!(median_with_failures([1.0, 3.0, f64::NAN]), 3.0);
}

#[test]
fn compare_and_sweep_reject_bad_input() {
    let cfg = reference(1);
    let one: Method = "HFD+FS_MUSIC".parse().unwrap();
    assert!(matches!(compare_report(&cfg, &[one]), Err(Error::InvalidConfig { .. })));
    assert!("HFD+BOGUS".parse::<Method>().is_err());
    assert!(sweep_variant(&cfg, SweepAxis::Absorption, 1.0).is_err());
    assert!(sweep_variant(&cfg, SweepAxis::NTargets, 2.0).is_err());
    assert!(sweep_variant(&cfg, SweepAxis::Distance, -1.0).is_err());
    assert!(sweep(&cfg, SweepAxis::Snr, &[]).is_err());
}

#[test]
fn distance_sweep_keeps_noise_power() {
    let cfg = reference(1);
    let far = sweep_variant(&cfg, SweepAxis::Distance, 8.0).unwrap();
    let near = sweep_variant(&cfg, SweepAxis::Distance, 3.0).unwrap();
    assert_eq!(far.noise.reference_amplitude, near.noise.reference_amplitude);
    let t = far.scene.targets[0].position;
    assert!((t.norm() - 8.0).abs() < 1e-9);
}

#[test]
fn config_errors_name_the_path() {
    let base = r#"{"scene": {"radar": {"x": 0, "y": 0}, "reflectors": [], "obstacles": [],
        "targets": [{"id": "a", "position": {"x": 3, "y": 1}}]}"#;
    let ok = ScenarioConfig::from_json(&format!("{base}}}")).unwrap();
    assert_eq!(ok.trials, 100);
    assert_eq!(ok.codes.channels_hz, vec![2000.0, 5000.0, 10000.0]);

    let err = ScenarioConfig::from_json(&format!(r#"{base}, "codes": {{"channels_hz": [2000, "x"]}}}}"#)).unwrap_err();
    match err {
        Error::InvalidConfig { field, .. } => assert_eq!(field, "codes.channels_hz[1]"),
        e => panic!("{e}"),
    }
    let err = ScenarioConfig::from_json(&format!(r#"{base}, "grid": {{"d_mxa": 3}}}}"#)).unwrap_err();
    assert!(matches!(err, Error::InvalidConfig { .. }), "{err}");
    let err = ScenarioConfig::from_json(&format!(r#"{base}, "trials": 0}}"#)).unwrap_err();
    assert!(matches!(err, Error::InvalidConfig { .. }), "{err}");
}

#[test]
fn example_config_parses() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/reference.json");
    let cfg = ScenarioConfig::load(std::path::Path::new(path)).unwrap();
    assert_eq!(cfg.scene, reference_scene());
}

#[test]
fn cli_locate_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let exe = env!("CARGO_BIN_EXE_nlos-lab");
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/reference.json");
    let out = dir.path().join("run");
    let status = Command::new(exe)
        .args(["locate", "--config", cfg, "--trials", "2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for f in ["trials.csv", "timing.csv", "summary.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let trials = std::fs::read_to_string(out.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 3);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"scene": {"radar": {"x": 0, "y": 0}}, "bogus": 1}"#).unwrap();
    let st = Command::new(exe)
        .args(["locate", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("x"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));

    let st = Command::new(exe)
        .args(["compare", "--config", cfg, "--methods", "HFD+MUSIC", "--out"])
        .arg(dir.path().join("y"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
}
