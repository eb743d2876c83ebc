//! Received multi-antenna IF frames for the TLC and RLC phases.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::codes::TlcSequence;
use crate::error::Result;
use crate::scene::{enumerate_first_order_paths, is_direct_path_blocked, Scene};
use crate::waveform::{carrier_phase, element_phase, ArrayConfig, FmcwConfig, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Tlc,
    Rlc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TagMode {
    TlcActive,
    RlcSilent,
}

/// What a tag does during one frame. The tag is chirp-synchronized: in every
/// chirp it plays its TLC starting `offset` samples after the chirp start.
#[derive(Debug, Clone, PartialEq)]
pub struct TagState {
    mode: TagMode,
    tlc: Option<TlcSequence>,
    offset: usize,
}

impl TagState {
    pub fn active(tlc: TlcSequence, offset: usize) -> Self {
        Self {
            mode: TagMode::TlcActive,
            tlc: Some(tlc),
            offset,
        }
    }

    pub fn silent() -> Self {
        Self {
            mode: TagMode::RlcSilent,
            tlc: None,
            offset: 0,
        }
    }

    pub fn mode(&self) -> TagMode {
        self.mode
    }

    pub fn tlc(&self) -> Option<&TlcSequence> {
        self.tlc.as_ref()
    }

    pub fn offset(&self) -> usize {
        self.offset
    }
}

/// n_antennas x (chirps * samples_per_chirp), chirps back to back.
#[derive(Debug, Clone, PartialEq)]
pub struct RxFrame {
    pub samples: DMatrix<Complex64>,
    pub sample_rate: f64,
    pub samples_per_chirp: usize,
    pub phase: Phase,
}

impl RxFrame {
    pub fn n_antennas(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_chirps(&self) -> usize {
        self.samples.ncols() / self.samples_per_chirp
    }

    /// `antenna,sample,re,im` rows, for debugging.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["antenna", "sample", "re", "im"])?;
        for m in 0..self.samples.nrows() {
            for n in 0..self.samples.ncols() {
                let v = self.samples[(m, n)];
                w.write_record([m.to_string(), n.to_string(), format!("{:e}", v.re), format!("{:e}", v.im)])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Per-sample SNR of the strongest tag path; `None` means noiseless.
    pub snr_db: Option<f64>,
    pub seed: u64,
    /// Fixed reference amplitude; by default the strongest tag path of the scene.
    #[serde(default)]
    pub reference_amplitude: Option<f64>,
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self {
            snr_db: None,
            seed: 0,
            reference_amplitude: None,
        }
    }

    pub fn new(snr_db: Option<f64>, seed: u64) -> Self {
        Self {
            snr_db,
            seed,
            reference_amplitude: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelOptions {
    /// Backscatter of a target's own body on an unobstructed line of sight.
    pub body_scatter: f64,
}

impl Default for ChannelOptions {
    fn default() -> Self {
        Self { body_scatter: 0.5 }
    }
}

/// One propagation component of the frame.
#[derive(Debug, Clone, Copy)]
struct Echo<'a> {
    amplitude: f64,
    distance: f64,
    aoa: f64,
    tag: Option<(&'a TlcSequence, usize)>,
}

/// Amplitude of the strongest tag path of any listed target, used as the SNR reference.
pub fn reference_amplitude(scene: &Scene, target_ids: impl IntoIterator<Item = impl AsRef<str>>) -> Result<f64> {
    let mut best: f64 = 0.0;
    for id in target_ids {
        let id = id.as_ref();
        for p in enumerate_first_order_paths(scene, id)? {
            best = best.max(p.attenuation);
        }
        if !is_direct_path_blocked(scene, id)? {
            let d = scene.target(id)?.position.dist(scene.radar);
            best = best.max(1.0 / (d * d));
        }
    }
    Ok(best)
}

fn collect_echoes<'a>(
    scene: &Scene,
    states: &'a BTreeMap<String, TagState>,
    opts: &ChannelOptions,
    phase: Phase,
) -> Result<Vec<Echo<'a>>> {
    let mut echoes = Vec::new();
    for target in &scene.targets {
        let id = target.id.as_str();
        let tag = match (phase, states.get(id)) {
            (Phase::Tlc, Some(st)) if st.mode == TagMode::TlcActive => st.tlc.as_ref().map(|t| (t, st.offset)),
            _ => None,
        };
        for p in enumerate_first_order_paths(scene, id)? {
            let refl = &scene.reflectors[p.reflector_index];
            echoes.push(Echo {
                amplitude: refl.scatter_coeff / (p.d_rs * p.d_rs),
                distance: p.d_rs,
                aoa: p.aoa_phi,
                tag: None,
            });
            if tag.is_some() {
                echoes.push(Echo {
                    amplitude: p.attenuation,
                    distance: p.d_total,
                    aoa: p.aoa_phi,
                    tag,
                });
            }
        }
        if !is_direct_path_blocked(scene, id)? {
            let d = target.position.dist(scene.radar);
            let aoa = (target.position - scene.radar).angle();
            echoes.push(Echo {
                amplitude: opts.body_scatter / (d * d),
                distance: d,
                aoa,
                tag: None,
            });
            if tag.is_some() {
                echoes.push(Echo {
                    amplitude: 1.0 / (d * d),
                    distance: d,
                    aoa,
                    tag,
                });
            }
        }
    }
    Ok(echoes)
}

fn render_chirp(echoes: &[Echo], fmcw: &FmcwConfig, arr: &ArrayConfig) -> DMatrix<Complex64> {
    let spc = fmcw.samples_per_chirp();
    let lambda = fmcw.wavelength();
    let mut chirp = DMatrix::from_element(arr.n_antennas, spc, Complex64::new(0.0, 0.0));
    for e in echoes {
        let tau = 2.0 * e.distance / SPEED_OF_LIGHT;
        let phi0 = carrier_phase(fmcw, tau);
        let w = 2.0 * PI * fmcw.slope() * tau / fmcw.sample_rate_hz;
        let outbound = e.distance / SPEED_OF_LIGHT;
        for k in 0..spc {
            let modulation = match e.tag {
                None => Complex64::new(1.0, 0.0),
                Some((tlc, k0)) => {
                    if k < k0 || k - k0 >= tlc.total_len() {
                        continue;
                    }
                    tlc.analytic(k - k0, outbound)
                }
            };
            if modulation == Complex64::new(0.0, 0.0) {
                continue;
            }
            let base = modulation * Complex64::from_polar(e.amplitude, phi0 + w * k as f64);
            for m in 0..arr.n_antennas {
                chirp[(m, k)] += base * Complex64::from_polar(1.0, element_phase(arr.spacing, m, e.aoa, lambda));
            }
        }
    }
    chirp
}

/// Static reflector returns (and line-of-sight body returns) in both phases;
/// tag returns only in TLC frames from active tags; then white noise.
pub fn simulate_frame(
    scene: &Scene,
    target_states: &BTreeMap<String, TagState>,
    fmcw: &FmcwConfig,
    arr: &ArrayConfig,
    opts: &ChannelOptions,
    noise: &NoiseSpec,
    phase: Phase,
) -> Result<RxFrame> {
    let echoes = collect_echoes(scene, target_states, opts, phase)?;
    let chirp = render_chirp(&echoes, fmcw, arr);
    let spc = fmcw.samples_per_chirp();
    let n_chirps = fmcw.chirps_per_frame;
    let samples = DMatrix::from_fn(arr.n_antennas, spc * n_chirps, |m, n| chirp[(m, n % spc)]);
    let frame = RxFrame {
        samples,
        sample_rate: fmcw.sample_rate_hz,
        samples_per_chirp: spc,
        phase,
    };
    let reference = match noise.reference_amplitude {
        Some(r) => r,
        None => reference_amplitude(scene, scene.targets.iter().map(|t| t.id.as_str()))?,
    };
    Ok(add_noise(frame, noise, if reference > 0.0 { reference } else { 1.0 }))
}

/// Complex white Gaussian noise with power reference^2 / 10^(snr/10).
pub fn add_noise(mut frame: RxFrame, noise: &NoiseSpec, reference_amplitude: f64) -> RxFrame {
    let Some(snr_db) = noise.snr_db else {
        return frame;
    };
    if snr_db == f64::INFINITY {
        return frame;
    }
    let power = reference_amplitude * reference_amplitude / 10f64.powf(snr_db / 10.0);
    let sigma = (power / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    // column-major walk keeps the draw order fixed regardless of shape access
    for v in frame.samples.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v += Complex64::new(re * sigma, im * sigma);
    }
    frame
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Point2D, Reflector, Target};
    use crate::waveform::beat_frequency;
    use rustfft::FftPlanner;

    fn one_wall(target: Point2D) -> Scene {
        Scene::new(
            Point2D::new(0.0, 0.0),
            vec![Reflector::new(Point2D::new(-1.0, 2.0), Point2D::new(8.0, 2.0), 0.8, 0.2)],
            vec![],
            vec![Target {
                id: "t".into(),
                position: target,
            }],
        )
        .unwrap()
    }

    fn small_fmcw() -> FmcwConfig {
        FmcwConfig {
            chirps_per_frame: 2,
            ..FmcwConfig::default()
        }
    }

    #[test]
    fn empty_scene_is_zero() {
        let scene = Scene::new(Point2D::new(0.0, 0.0), vec![], vec![], vec![]).unwrap();
        let f = simulate_frame(
            &scene,
            &BTreeMap::new(),
            &small_fmcw(),
            &ArrayConfig::default(),
            &ChannelOptions::default(),
            &NoiseSpec::noiseless(),
            Phase::Rlc,
        )
        .unwrap();
        assert_eq!(f.samples.shape(), (8, 256));
        assert!(f.samples.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn rlc_reflector_fft_peak() {
        // obstacle hides the body so only the wall return remains
        let mut scene = one_wall(Point2D::new(6.0, 0.0));
        scene.obstacles.push(crate::scene::Segment::new(Point2D::new(3.0, -0.5), Point2D::new(3.0, 0.5)));
        let fm = small_fmcw();
        let f = simulate_frame(
            &scene,
            &BTreeMap::new(),
            &fm,
            &ArrayConfig::default(),
            &ChannelOptions::default(),
            &NoiseSpec::noiseless(),
            Phase::Rlc,
        )
        .unwrap();
        let path = enumerate_first_order_paths(&scene, "t").unwrap()[0];
        let spc = fm.samples_per_chirp();
        let bin_hz = fm.sample_rate_hz / spc as f64;
        for m in 0..8 {
            let mut buf: Vec<Complex64> = (0..spc).map(|k| f.samples[(m, k)]).collect();
            FftPlanner::new().plan_fft_forward(spc).process(&mut buf);
            let peak = (0..spc).max_by(|&a, &b| buf[a].norm().total_cmp(&buf[b].norm())).unwrap();
            assert!((peak as f64 * bin_hz - beat_frequency(&fm, path.d_rs)).abs() <= bin_hz);
        }
    }

    #[test]
    fn superposition_of_reflectors() {
        let t = Target {
            id: "t".into(),
            position: Point2D::new(5.0, 0.5),
        };
        let w1 = Reflector::new(Point2D::new(-1.0, 2.0), Point2D::new(8.0, 2.0), 0.8, 0.2);
        let w2 = Reflector::new(Point2D::new(-1.0, -2.5), Point2D::new(8.0, -2.5), 0.6, 0.1);
        let obs = vec![crate::scene::Segment::new(Point2D::new(2.5, 0.0), Point2D::new(2.5, 0.6))];
        let frame = |refl: Vec<Reflector>| {
            let scene = Scene::new(Point2D::new(0.0, 0.0), refl, obs.clone(), vec![t.clone()]).unwrap();
            simulate_frame(
                &scene,
                &BTreeMap::new(),
                &small_fmcw(),
                &ArrayConfig::default(),
                &ChannelOptions::default(),
                &NoiseSpec::noiseless(),
                Phase::Rlc,
            )
            .unwrap()
            .samples
        };
        let both = frame(vec![w1, w2]);
        let sum = frame(vec![w1]) + frame(vec![w2]);
        assert!((both - sum).norm() <= 1e-12);
    }

    #[test]
    fn rlc_ignores_tag_contents() {
        let scene = one_wall(Point2D::new(6.0, 0.0));
        let plan = crate::codes::generate_hop_plan(1, &[2e3, 5e3, 10e3], 3, 30).unwrap();
        let mk = |seed| {
            let code = crate::codes::generate_dsss_code(seed, 15).unwrap();
            let tlc = crate::codes::build_tlc_waveform(&code, &plan, 50e3, 1).unwrap();
            BTreeMap::from([("t".to_string(), TagState::active(tlc, 5))])
        };
        let run = |states: &BTreeMap<String, TagState>| {
            simulate_frame(
                &scene,
                states,
                &small_fmcw(),
                &ArrayConfig::default(),
                &ChannelOptions::default(),
                &NoiseSpec::noiseless(),
                Phase::Rlc,
            )
            .unwrap()
        };
        assert_eq!(run(&mk(0)), run(&mk(2)));
        assert_eq!(run(&mk(0)), run(&BTreeMap::new()));
    }

    #[test]
    fn noise_power_and_determinism() {
        let zero = RxFrame {
            samples: DMatrix::from_element(4, 25_000, Complex64::new(0.0, 0.0)),
            sample_rate: 50e3,
            samples_per_chirp: 25_000,
            phase: Phase::Tlc,
        };
        let spec = NoiseSpec::new(Some(6.0), 77);
        let a = add_noise(zero.clone(), &spec, 0.5);
        let p: f64 = a.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / 100_000.0;
        let measured = 10.0 * (0.25 / p).log10();
        assert!((measured - 6.0).abs() < 0.3, "{measured}");
        assert_eq!(a, add_noise(zero.clone(), &spec, 0.5));
        assert_eq!(add_noise(zero.clone(), &NoiseSpec::noiseless(), 0.5), zero);
        let inf = NoiseSpec::new(Some(f64::INFINITY), 1);
        assert_eq!(add_noise(zero.clone(), &inf, 0.5), zero);
    }
}
