//! From frames to observations: correlation against the tag code, hop
//! segmentation, reflector detection, LoS/NLoS verdicts and matching.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::channel::RxFrame;
use crate::codes::{HopPlan, TlcSequence};
use crate::error::{Error, Result};
use crate::fsmusic::{added_path_statistic, fs_music_paths_with_noise, EstimatorConfig, GridConfig, PathEstimate, SegmentedSignal, SteeringModel};
use crate::waveform::{ArrayConfig, FmcwConfig};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationResult {
    /// Per lag: antenna-averaged matched magnitude at the best beat bin,
    /// carrying the phase of antenna 0.
    pub r_k: Vec<Complex64>,
    pub peak_lag: usize,
    /// Peak power over the median power of the lag profile, dB.
    pub peak_gain_db: f64,
    /// Beat frequency of the strongest component at the peak lag, Hz.
    pub beat_hz: f64,
    /// n_antennas x (chirps * N_T): each chirp's window at `peak_lag`,
    /// multiplied by the conjugate template.
    pub aligned: DMatrix<Complex64>,
    pub window_len: usize,
}

impl CorrelationResult {
    pub fn n_windows(&self) -> usize {
        self.aligned.ncols() / self.window_len
    }
}

/// Literal sliding correlation r(k) = sum_n x(n + k) conj(t(n)) over all full overlaps.
pub fn correlate_lags(x: &[Complex64], template: &[Complex64]) -> Result<Vec<Complex64>> {
    if x.len() < template.len() {
        return Err(Error::FrameTooShort {
            have: x.len(),
            need: template.len(),
        });
    }
    Ok((0..=x.len() - template.len())
        .map(|k| template.iter().enumerate().map(|(n, t)| x[k + n] * t.conj()).sum())
        .collect())
}

/// TLC frame minus RLC frame: static returns cancel, the tag survives.
pub fn subtract_background(tlc: &RxFrame, rlc: &RxFrame) -> Result<RxFrame> {
    if tlc.samples.shape() != rlc.samples.shape() || tlc.samples_per_chirp != rlc.samples_per_chirp {
        return Err(Error::ShapeMismatch(format!(
            "TLC frame {:?} vs RLC frame {:?}",
            tlc.samples.shape(),
            rlc.samples.shape()
        )));
    }
    Ok(RxFrame {
        samples: &tlc.samples - &rlc.samples,
        ..tlc.clone()
    })
}

/// Correlate every chirp of `frame` against the single-sideband template of
/// `g_t` at each in-chirp lag. Chirps add coherently; the residual beat tone
/// is searched with a zero-padded FFT so it does not cancel the sum.
pub fn sliding_correlate(frame: &RxFrame, g_t: &TlcSequence) -> Result<CorrelationResult> {
    let n_t = g_t.total_len();
    let spc = frame.samples_per_chirp;
    if spc < n_t || frame.samples.ncols() < n_t {
        return Err(Error::FrameTooShort {
            have: spc.min(frame.samples.ncols()),
            need: n_t,
        });
    }
    let n_a = frame.n_antennas();
    let n_chirps = frame.n_chirps();
    let template: Vec<Complex64> = (0..n_t).map(|n| g_t.analytic(n, 0.0).conj()).collect();
    let nfft = (4 * n_t).next_power_of_two();
    let fft = FftPlanner::new().plan_fft_forward(nfft);

    let mut r_k = Vec::with_capacity(spc - n_t + 1);
    let mut bins = Vec::with_capacity(spc - n_t + 1);
    let mut buf = vec![ZERO; nfft];
    for k in 0..=spc - n_t {
        let mut power = vec![0.0; nfft];
        let mut first = vec![ZERO; nfft];
        for m in 0..n_a {
            buf.fill(ZERO);
            for c in 0..n_chirps {
                for n in 0..n_t {
                    buf[n] += frame.samples[(m, c * spc + k + n)] * template[n];
                }
            }
            fft.process(&mut buf);
            for (p, v) in power.iter_mut().zip(&buf) {
                *p += v.norm_sqr();
            }
            if m == 0 {
                first.copy_from_slice(&buf);
            }
        }
        let best = (0..nfft).max_by(|&a, &b| power[a].total_cmp(&power[b])).unwrap_or(0);
        let mag = (power[best] / n_a as f64).sqrt();
        let ph = first[best].arg();
        r_k.push(Complex64::from_polar(mag, ph));
        bins.push(best);
    }
    let peak_lag = (0..r_k.len())
        .max_by(|&a, &b| r_k[a].norm().total_cmp(&r_k[b].norm()).then(b.cmp(&a)))
        .unwrap_or(0);
    let mut powers: Vec<f64> = r_k.iter().map(|v| v.norm_sqr()).collect();
    powers.sort_by(f64::total_cmp);
    let median = powers[powers.len() / 2];
    let peak_power = r_k[peak_lag].norm_sqr();
    let peak_gain_db = if median > 0.0 {
        10.0 * (peak_power / median).log10()
    } else if peak_power > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let beat_hz = bins[peak_lag] as f64 * frame.sample_rate / nfft as f64;

    let aligned = DMatrix::from_fn(n_a, n_chirps * n_t, |m, col| {
        let (c, n) = (col / n_t, col % n_t);
        frame.samples[(m, c * spc + peak_lag + n)] * template[n]
    });
    Ok(CorrelationResult {
        r_k,
        peak_lag,
        peak_gain_db,
        beat_hz,
        aligned,
        window_len: n_t,
    })
}

/// Cut each aligned window at hop boundaries. Every repetition of the hop
/// pattern becomes its own window of N_f segments x N_h samples.
pub fn align_and_segment(corr: &CorrelationResult, plan: &HopPlan) -> Result<SegmentedSignal> {
    let n_f = plan.n_channels();
    let n_h = plan.hop_period_samples;
    let period = n_f * n_h;
    if corr.window_len < period {
        return Err(Error::FrameTooShort {
            have: corr.window_len,
            need: period,
        });
    }
    let reps = corr.window_len / period;
    let n_a = corr.aligned.nrows();
    let mut windows = Vec::with_capacity(corr.n_windows() * reps);
    for c in 0..corr.n_windows() {
        for r in 0..reps {
            let start = c * corr.window_len + r * period;
            windows.push(
                (0..n_a)
                    .map(|m| DMatrix::from_fn(n_f, n_h, |s, k| corr.aligned[(m, start + s * n_h + k)]))
                    .collect(),
            );
        }
    }
    Ok(SegmentedSignal {
        n_a,
        n_f,
        n_h,
        windows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Detection {
    pub distance: f64,
    /// Radians.
    pub aoa: f64,
    pub strength: f64,
}

impl From<&PathEstimate> for Detection {
    fn from(p: &PathEstimate) -> Self {
        Self {
            distance: p.distance,
            aoa: p.aoa,
            strength: p.strength,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Los,
    Nlos,
    Indeterminate,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Los => "LOS",
            Verdict::Nlos => "NLOS",
            Verdict::Indeterminate => "INDETERMINATE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneReading {
    pub reflectors_rlc: Vec<Detection>,
    pub virtuals_tlc: Vec<Detection>,
    pub los_verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReceiverConfig {
    /// LoS match radius in range, m.
    pub range_tol: f64,
    pub angle_tol_deg: f64,
    /// Virtual-to-reflector angular match, degrees.
    pub match_tol_deg: f64,
    /// Minimum spectrum peak over spectrum median, dB.
    pub detect_threshold_db: f64,
    /// Segments each RLC chirp is cut into for reflector detection.
    pub rlc_segments: usize,
    /// Threshold on the cued RLC test of [`cued_reflectors`], dB over noise.
    pub cue_threshold_db: f64,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self {
            range_tol: 0.3,
            angle_tol_deg: 2.0,
            match_tol_deg: 1.0,
            detect_threshold_db: 8.0,
            rlc_segments: 4,
            cue_threshold_db: 13.0,
        }
    }
}

impl ReceiverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.range_tol > 0.0) || !(self.angle_tol_deg > 0.0) || !(self.match_tol_deg > 0.0) {
            return Err(Error::config("receiver", "tolerances must be positive"));
        }
        if self.rlc_segments == 0 {
            return Err(Error::config("receiver.rlc_segments", "must be at least 1"));
        }
        Ok(())
    }
}

/// Cut every chirp of an unmodulated frame into `n_seg` equal segments.
pub fn segment_chirps(frame: &RxFrame, n_seg: usize) -> Result<SegmentedSignal> {
    let spc = frame.samples_per_chirp;
    let n_h = spc / n_seg;
    if n_h < 2 {
        return Err(Error::FrameTooShort {
            have: spc,
            need: 2 * n_seg,
        });
    }
    let n_a = frame.n_antennas();
    let windows = (0..frame.n_chirps())
        .map(|c| {
            (0..n_a)
                .map(|m| DMatrix::from_fn(n_seg, n_h, |s, k| frame.samples[(m, c * spc + s * n_h + k)]))
                .collect()
        })
        .collect();
    Ok(SegmentedSignal {
        n_a,
        n_f: n_seg,
        n_h,
        windows,
    })
}

/// Static returns of an RLC frame. Same subspace machinery as the tag path,
/// with the chirp cut into plain time segments (no tag carrier).
pub fn detect_reflectors(
    frame: &RxFrame,
    fmcw: &FmcwConfig,
    arr: &ArrayConfig,
    grid: &GridConfig,
    est: &EstimatorConfig,
    cfg: &ReceiverConfig,
) -> Result<Vec<Detection>> {
    // static reflectors: integrate the chirps before the covariance
    let (seg, noise) = segment_chirps(frame, cfg.rlc_segments)?.integrate(1)?;
    let model = SteeringModel::new(fmcw, arr, seg.n_h, vec![0.0; cfg.rlc_segments]);
    let paths = fs_music_paths_with_noise(&seg, Some(noise), &model, grid, est)?;
    Ok(paths
        .iter()
        .filter(|p| p.prominence_db >= cfg.detect_threshold_db)
        .map(Detection::from)
        .collect())
}

/// RLC returns looked for at the TLC detections `cues` instead of blindly: a
/// path at the cue's range and angle is fitted jointly with the blind
/// `reflectors` on the chirp-integrated frame, and kept when its residual drop
/// exceeds `cfg.cue_threshold_db` over the measured noise. Cues already
/// matched by a blind detection are skipped.
pub fn cued_reflectors(
    frame: &RxFrame,
    fmcw: &FmcwConfig,
    arr: &ArrayConfig,
    cfg: &ReceiverConfig,
    reflectors: &[Detection],
    cues: &[Detection],
) -> Result<Vec<Detection>> {
    let at = cfg.angle_tol_deg.to_radians();
    let open: Vec<&Detection> = cues
        .iter()
        .filter(|c| {
            !reflectors
                .iter()
                .any(|r| (c.distance - r.distance).abs() <= cfg.range_tol && angle_diff(c.aoa, r.aoa) <= at)
        })
        .collect();
    if open.is_empty() {
        return Ok(Vec::new());
    }
    let (seg, noise) = segment_chirps(frame, cfg.rlc_segments)?.integrate(1)?;
    if !(noise > 0.0) {
        return Ok(Vec::new());
    }
    let model = SteeringModel::new(fmcw, arr, seg.n_h, vec![0.0; cfg.rlc_segments]);
    let window = seg.mean_window();
    let known: Vec<(f64, f64)> = reflectors.iter().map(|r| (r.distance, r.aoa)).collect();
    let floor = 10f64.powf(cfg.cue_threshold_db / 10.0);
    Ok(open
        .into_iter()
        .filter_map(|c| {
            let t = added_path_statistic(&window, &model, &known, (c.distance, c.aoa), noise);
            (t >= floor).then_some(Detection {
                distance: c.distance,
                aoa: c.aoa,
                strength: t * noise,
            })
        })
        .collect())
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * std::f64::consts::PI);
    d.min(2.0 * std::f64::consts::PI - d)
}

/// LoS iff some TLC detection coincides with an RLC detection.
pub fn classify_los_nlos(reading: &SceneReading, range_tol: f64, angle_tol: f64) -> Verdict {
    if reading.virtuals_tlc.is_empty() || reading.reflectors_rlc.is_empty() {
        return Verdict::Indeterminate;
    }
    let hit = reading.virtuals_tlc.iter().any(|v| {
        reading
            .reflectors_rlc
            .iter()
            .any(|r| (v.distance - r.distance).abs() <= range_tol && angle_diff(v.aoa, r.aoa) <= angle_tol)
    });
    if hit {
        Verdict::Los
    } else {
        Verdict::Nlos
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedPair {
    pub virtual_det: Detection,
    pub reflector: Detection,
}

/// Greedy one-to-one pairing by ascending angular difference, keeping pairs
/// within `angle_tol` whose virtual lies beyond the reflector.
pub fn match_virtual_to_reflectors(virtuals: &[Detection], reflectors: &[Detection], angle_tol: f64) -> Vec<MatchedPair> {
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for (i, v) in virtuals.iter().enumerate() {
        for (j, r) in reflectors.iter().enumerate() {
            let da = angle_diff(v.aoa, r.aoa);
            if da <= angle_tol && v.distance > r.distance {
                cands.push((da, i, j));
            }
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_v = vec![false; virtuals.len()];
    let mut used_r = vec![false; reflectors.len()];
    let mut out = Vec::new();
    for (_, i, j) in cands {
        if !used_v[i] && !used_r[j] {
            used_v[i] = true;
            used_r[j] = true;
            out.push(MatchedPair {
                virtual_det: virtuals[i],
                reflector: reflectors[j],
            });
        }
    }
    out
}
