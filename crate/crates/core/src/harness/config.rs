//! Scenario configuration: JSON schema, defaults and validation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelOptions;
use crate::codes::Modulation;
use crate::error::{Error, Result};
use crate::fsmusic::{EstimatorConfig, GridConfig};
use crate::receiver::ReceiverConfig;
use crate::scene::Scene;
use crate::waveform::{ArrayConfig, FmcwConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Estimator {
    FsMusic,
    Music,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Method {
    pub modulation: Modulation,
    pub estimator: Estimator,
}

impl Default for Method {
    fn default() -> Self {
        Self {
            modulation: Modulation::Hfd,
            estimator: Estimator::FsMusic,
        }
    }
}

impl Method {
    pub fn label(&self) -> String {
        let m = match self.modulation {
            Modulation::Hfd => "HFD",
            Modulation::DsssOnly => "DSSS_ONLY",
            Modulation::Fsk => "FSK",
        };
        let e = match self.estimator {
            Estimator::FsMusic => "FS_MUSIC",
            Estimator::Music => "MUSIC",
        };
        format!("{m}+{e}")
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    /// `HFD+FS_MUSIC`, `DSSS_ONLY+MUSIC`, ... A bare modulation implies FS_MUSIC.
    fn from_str(s: &str) -> Result<Self> {
        let (m, e) = s.split_once('+').unwrap_or((s, "FS_MUSIC"));
        let estimator = match e.to_ascii_uppercase().as_str() {
            "FS_MUSIC" | "FSMUSIC" => Estimator::FsMusic,
            "MUSIC" => Estimator::Music,
            other => return Err(Error::config("method.estimator", format!("unknown estimator `{other}`"))),
        };
        Ok(Self {
            modulation: m.parse()?,
            estimator,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodeConfig {
    pub code_length: usize,
    pub channels_hz: Vec<f64>,
    pub samples_per_chip: usize,
    /// Hop slots in the index sequence; defaults to the channel count.
    pub n_hops: Option<usize>,
    /// Repetitions of the hop pattern inside one chirp.
    pub repetitions: usize,
    /// Target i uses hop seed `hop_seed + i` and family member i.
    pub hop_seed: u64,
    pub fsk_toggle_hz: f64,
    pub dsss_carrier_hz: f64,
}

impl Default for CodeConfig {
    fn default() -> Self {
        Self {
            code_length: 15,
            channels_hz: vec![2e3, 5e3, 10e3],
            samples_per_chip: 2,
            n_hops: None,
            repetitions: 1,
            hop_seed: 7,
            fsk_toggle_hz: 2e3,
            dsss_carrier_hz: 5e3,
        }
    }
}

impl CodeConfig {
    pub fn hop_period(&self) -> usize {
        self.code_length * self.samples_per_chip
    }

    /// Samples of one TLC burst, N_T.
    pub fn tlc_len(&self) -> usize {
        self.hop_period() * self.channels_hz.len() * self.repetitions
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Per-sample SNR of the strongest tag path; null for noiseless.
    pub snr_db: Option<f64>,
    /// Fixed noise reference amplitude (sweeps set this to hold noise power).
    pub reference_amplitude: Option<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            snr_db: Some(0.0),
            reference_amplitude: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scene: Scene,
    #[serde(default)]
    pub fmcw: FmcwConfig,
    #[serde(default)]
    pub array: ArrayConfig,
    #[serde(default)]
    pub codes: CodeConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub receiver: ReceiverConfig,
    #[serde(default)]
    pub channel: ChannelOptions,
}

fn default_trials() -> usize {
    100
}

impl ScenarioConfig {
    pub fn new(scene: Scene) -> Self {
        Self {
            scene,
            fmcw: FmcwConfig::default(),
            array: ArrayConfig::default(),
            codes: CodeConfig::default(),
            noise: NoiseConfig::default(),
            trials: default_trials(),
            seed: 0,
            method: Method::default(),
            grid: GridConfig::default(),
            estimator: EstimatorConfig::default(),
            receiver: ReceiverConfig::default(),
            channel: ChannelOptions::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { "<root>".to_string() } else { path }, e.into_inner().to_string())
        })?;
        de.end()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        if self.scene.targets.is_empty() {
            return Err(Error::config("scene.targets", "need at least one target"));
        }
        self.fmcw.validate()?;
        self.array.validate()?;
        self.grid.validate()?;
        self.receiver.validate()?;
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        let c = &self.codes;
        if c.samples_per_chip == 0 {
            return Err(Error::config("codes.samples_per_chip", "must be at least 1"));
        }
        if c.repetitions == 0 {
            return Err(Error::config("codes.repetitions", "must be at least 1"));
        }
        if c.channels_hz.is_empty() {
            return Err(Error::config("codes.channels_hz", "need at least one channel"));
        }
        if c.n_hops == Some(0) {
            return Err(Error::config("codes.n_hops", "must be at least 1"));
        }
        if !(c.fsk_toggle_hz > 0.0) || !(c.dsss_carrier_hz > 0.0) {
            return Err(Error::config("codes", "fsk_toggle_hz and dsss_carrier_hz must be positive"));
        }
        // code length support is checked by the generator
        crate::codes::code_family(c.code_length).map_err(|e| Error::config("codes.code_length", e.to_string()))?;
        let spc = self.fmcw.samples_per_chirp();
        if c.tlc_len() > spc {
            return Err(Error::config(
                "codes",
                format!("TLC burst of {} samples does not fit a {spc}-sample chirp", c.tlc_len()),
            ));
        }
        if self.scene.targets.len() > crate::codes::code_family(c.code_length)?.len() {
            return Err(Error::config("scene.targets", "more targets than distinct codes"));
        }
        if let Some(s) = self.noise.snr_db {
            if s.is_nan() {
                return Err(Error::config("noise.snr_db", "must be a number or null"));
            }
        }
        if let Some(r) = self.noise.reference_amplitude {
            if !(r > 0.0) {
                return Err(Error::config("noise.reference_amplitude", "must be positive"));
            }
        }
        Ok(())
    }
}
