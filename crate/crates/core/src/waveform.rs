//! FMCW chirp / IF-signal math and uniform linear array phase geometry.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FmcwConfig {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub chirp_s: f64,
    pub chirps_per_frame: usize,
    pub sample_rate_hz: f64,
}

impl Default for FmcwConfig {
    /// 24 GHz start, 250 MHz sweep, 2.56 ms chirps, 32 chirps per frame, 50 kHz ADC.
    fn default() -> Self {
        Self {
            carrier_hz: 24e9,
            bandwidth_hz: 250e6,
            chirp_s: 2.56e-3,
            chirps_per_frame: 32,
            sample_rate_hz: 50e3,
        }
    }
}

impl FmcwConfig {
    pub fn samples_per_chirp(&self) -> usize {
        (self.sample_rate_hz * self.chirp_s).round() as usize
    }

    /// Chirp slope B/T in Hz/s.
    pub fn slope(&self) -> f64 {
        self.bandwidth_hz / self.chirp_s
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Largest one-way distance whose beat frequency stays below Nyquist.
    pub fn max_unambiguous_distance(&self) -> f64 {
        self.sample_rate_hz / 2.0 * SPEED_OF_LIGHT / (2.0 * self.slope())
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, f: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("fmcw.{f}"), "must be positive"))
            }
        };
        pos(self.carrier_hz, "carrier_hz")?;
        pos(self.bandwidth_hz, "bandwidth_hz")?;
        pos(self.chirp_s, "chirp_s")?;
        pos(self.sample_rate_hz, "sample_rate_hz")?;
        if self.chirps_per_frame == 0 {
            return Err(Error::config("fmcw.chirps_per_frame", "must be at least 1"));
        }
        if self.samples_per_chirp() < 2 {
            return Err(Error::config("fmcw.sample_rate_hz", "fewer than 2 samples per chirp"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub n_antennas: usize,
    pub spacing: f64,
}

impl Default for ArrayConfig {
    /// 2 Tx x 4 Rx MIMO gives 8 virtual elements at half-wavelength spacing (24 GHz).
    fn default() -> Self {
        Self {
            n_antennas: 8,
            spacing: SPEED_OF_LIGHT / 24e9 / 2.0,
        }
    }
}

impl ArrayConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_antennas == 0 {
            return Err(Error::config("array.n_antennas", "must be at least 1"));
        }
        if !(self.spacing > 0.0) {
            return Err(Error::config("array.spacing", "must be positive"));
        }
        Ok(())
    }
}

/// A single echo as seen by the mixer: amplitude and round-trip delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpReturn {
    pub amplitude: f64,
    pub delay_s: f64,
}

impl ChirpReturn {
    /// Echo of a scatterer at one-way distance `distance`.
    pub fn at_distance(amplitude: f64, distance: f64) -> Self {
        Self {
            amplitude,
            delay_s: 2.0 * distance / SPEED_OF_LIGHT,
        }
    }
}

/// Beat (IF) frequency of an echo from one-way distance `distance`.
pub fn beat_frequency(cfg: &FmcwConfig, distance: f64) -> f64 {
    cfg.slope() * 2.0 * distance / SPEED_OF_LIGHT
}

/// Carrier phase term f_c * theta, reduced to [0, 1) cycles before scaling.
pub(crate) fn carrier_phase(cfg: &FmcwConfig, delay_s: f64) -> f64 {
    2.0 * PI * (cfg.carrier_hz * delay_s).rem_euclid(1.0)
}

/// Dechirped samples of one chirp. The residual video phase is not modelled.
pub fn synthesize_if_chirp(cfg: &FmcwConfig, returns: &[ChirpReturn]) -> Vec<Complex64> {
    let n = cfg.samples_per_chirp();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for r in returns {
        let phi0 = carrier_phase(cfg, r.delay_s);
        let w = 2.0 * PI * cfg.slope() * r.delay_s / cfg.sample_rate_hz;
        for (k, s) in out.iter_mut().enumerate() {
            *s += Complex64::from_polar(r.amplitude, phi0 + w * k as f64);
        }
    }
    out
}

/// Phase of element `antenna_index` for a plane wave arriving at `aoa`
/// (radians from broadside).
pub fn array_phase(arr: &ArrayConfig, antenna_index: usize, aoa: f64, wavelength: f64) -> Result<f64> {
    if antenna_index >= arr.n_antennas {
        return Err(Error::IndexOutOfRange {
            index: antenna_index,
            len: arr.n_antennas,
        });
    }
    Ok(element_phase(arr.spacing, antenna_index, aoa, wavelength))
}

#[inline]
pub(crate) fn element_phase(spacing: f64, index: usize, aoa: f64, wavelength: f64) -> f64 {
    2.0 * PI * index as f64 * spacing * aoa.sin() / wavelength
}

/// Spatial steering vector of the whole array.
pub fn spatial_steering(arr: &ArrayConfig, aoa: f64, wavelength: f64) -> Vec<Complex64> {
    (0..arr.n_antennas)
        .map(|m| Complex64::from_polar(1.0, element_phase(arr.spacing, m, aoa, wavelength)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rustfft::FftPlanner;

    fn fft(x: &[Complex64]) -> Vec<Complex64> {
        let mut buf = x.to_vec();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        buf
    }

    #[test]
    fn beat_frequency_defaults() {
        let cfg = FmcwConfig::default();
        // (250e6 / 2.56e-3) * (2 * 5 / c)
        let expected = 250e6 / 2.56e-3 * 10.0 / SPEED_OF_LIGHT;
        assert_relative_eq!(beat_frequency(&cfg, 5.0), expected, max_relative = 1e-15);
        assert_relative_eq!(beat_frequency(&cfg, 5.0), 3257.46, epsilon = 0.01);
        assert_eq!(beat_frequency(&cfg, 0.0), 0.0);
        assert_relative_eq!(beat_frequency(&cfg, 6.0), 2.0 * beat_frequency(&cfg, 3.0));
        assert_eq!(cfg.samples_per_chirp(), 128);
    }

    #[test]
    fn single_return_fft_peak() {
        let cfg = FmcwConfig::default();
        let d = 4.3;
        let y = synthesize_if_chirp(&cfg, &[ChirpReturn::at_distance(1.0, d)]);
        let spec = fft(&y);
        let (bin, _) = spec
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        let bin_hz = cfg.sample_rate_hz / y.len() as f64;
        assert!((bin as f64 * bin_hz - beat_frequency(&cfg, d)).abs() <= bin_hz);
    }

    #[test]
    fn empty_returns_are_zero() {
        let y = synthesize_if_chirp(&FmcwConfig::default(), &[]);
        assert_eq!(y.len(), 128);
        assert!(y.iter().all(|s| s.norm() == 0.0));
    }

    #[test]
    fn two_returns_amplitude_ratio() {
        let cfg = FmcwConfig::default();
        let n = cfg.samples_per_chirp() as f64;
        let bin_hz = cfg.sample_rate_hz / n;
        // distances placed exactly on bins 6 and 10
        let dist = |bin: f64| bin * bin_hz * SPEED_OF_LIGHT / (2.0 * cfg.slope());
        let y = synthesize_if_chirp(
            &cfg,
            &[ChirpReturn::at_distance(1.0, dist(6.0)), ChirpReturn::at_distance(0.4, dist(10.0))],
        );
        let spec = fft(&y);
        let ratio = spec[10].norm() / spec[6].norm();
        assert!((ratio - 0.4).abs() / 0.4 < 0.05, "ratio {ratio}");
        // Parseval on non-overlapping bins
        let energy: f64 = y.iter().map(|s| s.norm_sqr()).sum();
        assert_relative_eq!(energy, (1.0 + 0.16) * n, max_relative = 1e-6);
    }

    #[test]
    fn synthesis_is_deterministic() {
        let cfg = FmcwConfig::default();
        let r = [ChirpReturn::at_distance(0.7, 3.3), ChirpReturn::at_distance(0.2, 6.1)];
        assert_eq!(synthesize_if_chirp(&cfg, &r), synthesize_if_chirp(&cfg, &r));
    }

    #[test]
    fn array_phase_cases() {
        let arr = ArrayConfig::default();
        let lambda = FmcwConfig::default().wavelength();
        for m in 0..8 {
            assert_eq!(array_phase(&arr, m, 0.0, lambda).unwrap(), 0.0);
        }
        let half = ArrayConfig {
            n_antennas: 4,
            spacing: lambda / 2.0,
        };
        assert_relative_eq!(array_phase(&half, 1, PI / 2.0, lambda).unwrap(), PI, max_relative = 1e-12);
        let aoa = 0.3;
        let d01 = array_phase(&arr, 1, aoa, lambda).unwrap() - array_phase(&arr, 0, aoa, lambda).unwrap();
        let d67 = array_phase(&arr, 7, aoa, lambda).unwrap() - array_phase(&arr, 6, aoa, lambda).unwrap();
        assert_relative_eq!(d01, d67, max_relative = 1e-12);
        assert!(matches!(
            array_phase(&arr, 8, 0.0, lambda),
            Err(Error::IndexOutOfRange { index: 8, len: 8 })
        ));
    }
}
