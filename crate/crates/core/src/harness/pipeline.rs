//! One Monte Carlo trial end to end: frames, receiver chain, estimator, solver.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{Estimator, ScenarioConfig};
use crate::channel::{simulate_frame, NoiseSpec, Phase, RxFrame, TagState};
use crate::codes::{
    build_baseline_waveform, build_tlc_waveform, generate_dsss_code, generate_hop_plan, BaselineParams, HopPlan,
    Modulation, TlcSequence,
};
use crate::error::Result;
use crate::fsmusic::{
    conventional_estimate_with_noise, conventional_music, fs_music_estimate, fs_music_paths_with_noise, PathEstimate,
    SegmentedSignal, Spectrum2D, SteeringModel,
};
use crate::locate::{compute_weights, reflection_point, wls_multilaterate, Anchor};
use crate::receiver::{
    align_and_segment, classify_los_nlos, CorrelationResult, cued_reflectors, detect_reflectors, match_virtual_to_reflectors, sliding_correlate,
    subtract_background, Detection, SceneReading, Verdict,
};
use crate::scene::Point2D;

/// Tag waveform plus the plan describing its segment layout.
#[derive(Debug, Clone)]
pub struct TagSignal {
    pub tlc: TlcSequence,
    pub plan: HopPlan,
}

/// Waveform of target `index` under the configured modulation.
pub fn tag_signal(cfg: &ScenarioConfig, index: usize) -> Result<TagSignal> {
    let c = &cfg.codes;
    let fs = cfg.fmcw.sample_rate_hz;
    let code = generate_dsss_code(index as u64, c.code_length)?;
    match cfg.method.modulation {
        Modulation::Hfd => {
            let n_hops = c.n_hops.unwrap_or(c.channels_hz.len());
            let plan = generate_hop_plan(c.hop_seed + index as u64, &c.channels_hz, n_hops, c.hop_period())?;
            let tlc = build_tlc_waveform(&code, &plan, fs, c.repetitions)?;
            Ok(TagSignal { tlc, plan })
        }
        Modulation::DsssOnly => {
            let periods = c.channels_hz.len() * c.repetitions;
            let tlc = build_baseline_waveform(
                Modulation::DsssOnly,
                &BaselineParams::DsssOnly {
                    code,
                    carrier_hz: c.dsss_carrier_hz,
                    hop_period: c.hop_period(),
                    code_periods: periods,
                    sample_rate: fs,
                },
            )?;
            let plan = HopPlan {
                channel_freqs: vec![c.dsss_carrier_hz],
                index_seq: vec![0],
                hop_period_samples: c.hop_period(),
                seed: 0,
            };
            Ok(TagSignal { tlc, plan })
        }
        Modulation::Fsk => {
            let total = c.tlc_len();
            let tlc = build_baseline_waveform(
                Modulation::Fsk,
                &BaselineParams::Fsk {
                    toggle_hz: c.fsk_toggle_hz,
                    total_len: total,
                    sample_rate: fs,
                },
            )?;
            let plan = HopPlan {
                channel_freqs: vec![0.0],
                index_seq: vec![0],
                hop_period_samples: total,
                seed: 0,
            };
            Ok(TagSignal { tlc, plan })
        }
    }
}

/// Independent stream of the master seed for trial `trial`.
pub fn trial_rng(master: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial);
    rng
}

/// Radar frames of one trial, shared by every target.
#[derive(Debug, Clone)]
pub struct TrialFrames {
    pub tlc: RxFrame,
    pub rlc: RxFrame,
    pub offsets: Vec<usize>,
}

pub fn simulate_trial_frames(cfg: &ScenarioConfig, tags: &[TagSignal], rng: &mut ChaCha8Rng) -> Result<TrialFrames> {
    let spc = cfg.fmcw.samples_per_chirp();
    let mut states = BTreeMap::new();
    let mut offsets = Vec::new();
    for (t, tag) in cfg.scene.targets.iter().zip(tags) {
        let k0 = rng.random_range(0..=spc - tag.tlc.total_len());
        offsets.push(k0);
        states.insert(t.id.clone(), TagState::active(tag.tlc.clone(), k0));
    }
    let noise = |seed| NoiseSpec {
        snr_db: cfg.noise.snr_db,
        seed,
        reference_amplitude: cfg.noise.reference_amplitude,
    };
    let (s_tlc, s_rlc): (u64, u64) = (rng.random(), rng.random());
    let run = |phase, seed| {
        simulate_frame(
            &cfg.scene,
            &states,
            &cfg.fmcw,
            &cfg.array,
            &cfg.channel,
            &noise(seed),
            phase,
        )
    };
    Ok(TrialFrames {
        tlc: run(Phase::Tlc, s_tlc)?,
        rlc: run(Phase::Rlc, s_rlc)?,
        offsets,
    })
}

/// Observations and estimate for one target.
#[derive(Debug, Clone)]
pub struct TargetOutcome {
    pub reading: SceneReading,
    pub position: Option<Point2D>,
    pub anchors_used: usize,
    pub peak_lag: usize,
    pub peak_gain_db: f64,
}

/// Demodulated tag burst as one window per frame, with its per-sample noise
/// power and steering model. The burst repeats unchanged in every chirp, so the
/// chirps are averaged; hop periods within a chirp stay back to back.
pub fn tag_window(
    cfg: &ScenarioConfig,
    corr: &CorrelationResult,
    tag: &TagSignal,
) -> Result<(SegmentedSignal, f64, SteeringModel)> {
    let seg = align_and_segment(corr, &tag.plan)?;
    let (seg, noise) = seg.integrate(seg.windows.len() / corr.n_windows())?;
    let seg = seg.concat_windows();
    let freqs = (0..seg.n_f).map(|s| tag.plan.slot_freq(s)).collect();
    let model = SteeringModel::new(&cfg.fmcw, &cfg.array, tag.plan.hop_period_samples, freqs);
    Ok((seg, noise, model))
}

/// Paths of the tag signal after correlation, by the configured estimator.
pub fn estimate_tag_paths(cfg: &ScenarioConfig, diff: &RxFrame, tag: &TagSignal) -> Result<(Vec<PathEstimate>, usize, f64)> {
    let corr = sliding_correlate(diff, &tag.tlc)?;
    let (seg, noise, model) = tag_window(cfg, &corr, tag)?;
    let joint = cfg.method.estimator == Estimator::FsMusic && tag.plan.n_channels() > 1;
    let paths = if joint {
        fs_music_paths_with_noise(&seg, Some(noise), &model, &cfg.grid, &cfg.estimator)?
    } else {
        conventional_estimate_with_noise(&seg, Some(noise), &model, &cfg.grid, &cfg.estimator)?
    };
    Ok((paths, corr.peak_lag, corr.peak_gain_db))
}

/// Range-angle spectrum of target `index` in trial `trial`, as seen by the
/// configured estimator after chirp integration.
pub fn trial_spectrum(cfg: &ScenarioConfig, trial: usize, index: usize) -> Result<Spectrum2D> {
    cfg.validate()?;
    let tags: Vec<TagSignal> = (0..cfg.scene.targets.len())
        .map(|i| tag_signal(cfg, i))
        .collect::<Result<_>>()?;
    let tag = tags.get(index).ok_or(crate::error::Error::IndexOutOfRange {
        index,
        len: tags.len(),
    })?;
    let frames = simulate_trial_frames(cfg, &tags, &mut trial_rng(cfg.seed, trial as u64))?;
    let diff = subtract_background(&frames.tlc, &frames.rlc)?;
    let corr = sliding_correlate(&diff, &tag.tlc)?;
    let (seg, noise, model) = tag_window(cfg, &corr, tag)?;
    if cfg.method.estimator == Estimator::FsMusic && tag.plan.n_channels() > 1 {
        Ok(fs_music_estimate(&seg, Some(noise), &model, &cfg.grid, &cfg.estimator)?.1)
    } else {
        let i_paths = conventional_estimate_with_noise(&seg, Some(noise), &model, &cfg.grid, &cfg.estimator)?
            .len()
            .max(1);
        conventional_music(&seg, i_paths, &model, &cfg.grid)
    }
}

/// Position from matched observations: the LoS detection itself, or WLS over
/// reflection-point anchors.
pub fn solve_position(radar: Point2D, reading: &SceneReading, cfg: &ScenarioConfig) -> (Option<Point2D>, usize) {
    let rc = &cfg.receiver;
    match reading.los_verdict {
        Verdict::Los => {
            let (rt, at) = (rc.range_tol, rc.angle_tol_deg.to_radians());
            let direct = reading
                .virtuals_tlc
                .iter()
                .filter(|v| {
                    reading
                        .reflectors_rlc
                        .iter()
                        .any(|r| (v.distance - r.distance).abs() <= rt && (v.aoa - r.aoa).abs() <= at)
                })
                .min_by(|a, b| a.distance.total_cmp(&b.distance));
            (direct.map(|v| reflection_point(radar, v.distance, v.aoa)), 0)
        }
        Verdict::Nlos => {
            let pairs = match_virtual_to_reflectors(&reading.virtuals_tlc, &reading.reflectors_rlc, rc.match_tol_deg.to_radians());
            let strengths: Vec<f64> = pairs.iter().map(|p| p.virtual_det.strength).collect();
            let weights = compute_weights(&strengths).unwrap_or_else(|_| vec![1.0 / pairs.len().max(1) as f64; pairs.len()]);
            let anchors: Vec<Anchor> = pairs
                .iter()
                .zip(&weights)
                .map(|(p, &w)| Anchor {
                    p_s: reflection_point(radar, p.reflector.distance, p.reflector.aoa),
                    d_st: p.virtual_det.distance - p.reflector.distance,
                    weight: w,
                })
                .filter(|a| a.d_st > 0.0)
                .collect();
            let n = anchors.len();
            match wls_multilaterate(&anchors, None) {
                Ok(est) => (Some(est.position), n),
                Err(_) => (None, n),
            }
        }
        Verdict::Indeterminate => (None, 0),
    }
}

/// Receiver chain for every target of one trial.
pub fn process_trial(cfg: &ScenarioConfig, tags: &[TagSignal], frames: &TrialFrames) -> Result<Vec<TargetOutcome>> {
    let reflectors = detect_reflectors(&frames.rlc, &cfg.fmcw, &cfg.array, &cfg.grid, &cfg.estimator, &cfg.receiver)?;
    let diff = subtract_background(&frames.tlc, &frames.rlc)?;
    let mut out = Vec::with_capacity(tags.len());
    for tag in tags {
        let (paths, peak_lag, peak_gain_db) = estimate_tag_paths(cfg, &diff, tag)?;
        let virtuals: Vec<Detection> = paths
            .iter()
            .filter(|p| p.prominence_db >= cfg.receiver.detect_threshold_db)
            .map(Detection::from)
            .collect();
        let mut rlc = reflectors.clone();
        rlc.extend(cued_reflectors(&frames.rlc, &cfg.fmcw, &cfg.array, &cfg.receiver, &reflectors, &virtuals)?);
        let mut reading = SceneReading {
            reflectors_rlc: rlc,
            virtuals_tlc: virtuals,
            los_verdict: Verdict::Indeterminate,
        };
        reading.los_verdict = classify_los_nlos(&reading, cfg.receiver.range_tol, cfg.receiver.angle_tol_deg.to_radians());
        let (position, anchors_used) = solve_position(cfg.scene.radar, &reading, cfg);
        out.push(TargetOutcome {
            reading,
            position,
            anchors_used,
            peak_lag,
            peak_gain_db,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub target: String,
    pub truth: Point2D,
    pub estimate: Option<Point2D>,
    pub err_x_cm: f64,
    pub err_y_cm: f64,
    pub err_cm: f64,
    pub verdict: Verdict,
    pub anchors_used: usize,
    pub timing_ms: f64,
}

impl TrialRecord {
    /// Failed estimates carry NaN errors.
    pub fn succeeded(&self) -> bool {
        self.estimate.is_some()
    }
}

/// Trial `trial` of `cfg` for all targets.
pub fn run_trial(cfg: &ScenarioConfig, tags: &[TagSignal], trial: usize) -> Result<Vec<TrialRecord>> {
    let start = Instant::now();
    let mut rng = trial_rng(cfg.seed, trial as u64);
    let frames = simulate_trial_frames(cfg, tags, &mut rng)?;
    let outcomes = process_trial(cfg, tags, &frames)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3 / outcomes.len().max(1) as f64;
    Ok(cfg
        .scene
        .targets
        .iter()
        .zip(outcomes)
        .map(|(t, o)| {
            let (ex, ey) = match o.position {
                Some(p) => ((p.x - t.position.x) * 100.0, (p.y - t.position.y) * 100.0),
                None => (f64::NAN, f64::NAN),
            };
            TrialRecord {
                trial,
                target: t.id.clone(),
                truth: t.position,
                estimate: o.position,
                err_x_cm: ex,
                err_y_cm: ey,
                err_cm: ex.hypot(ey),
                verdict: o.reading.los_verdict,
                anchors_used: o.anchors_used,
                timing_ms: elapsed,
            }
        })
        .collect())
}
