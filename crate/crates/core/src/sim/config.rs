//! Run configuration: TOML files with `[system]`, `[im]`, `[channel]`,
//! `[train]` and `[sim]` sections, plus built-in named presets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::PdpKind;
use crate::detect::ML_GUARD_DEFAULT;
use crate::error::{Error, Result};
use crate::im::ImConfig;
use crate::modem::WaveformConfig;
use crate::neural::{ModelDims, TrainingConfig, UpdateRule};

use super::ber::{ReceiverKind, StoppingRule};

/// Dimensioning of one SMX-IM link.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    pub t: usize,
    pub r: usize,
    pub k: usize,
    pub m: usize,
    pub u: usize,
    pub v: usize,
    pub q: usize,
    pub n_cp: usize,
    pub n_ch: usize,
    pub rolloff: f64,
    pub pdp: PdpKind,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t == 0 || self.r == 0 {
            return Err(Error::Config("antenna counts t and r must be at least 1".into()));
        }
        if self.r < self.t {
            return Err(Error::Config(format!(
                "zero forcing needs r >= t, got t={}, r={}",
                self.t, self.r
            )));
        }
        self.waveform()?;
        self.im()?;
        if !self.n().is_multiple_of(self.u) {
            return Err(Error::Config(format!("N = k*m = {} is not a multiple of u = {}", self.n(), self.u)));
        }
        if self.n_ch == 0 || self.n_ch > self.n() {
            return Err(Error::Config(format!("n_ch must lie in 1..={}, got {}", self.n(), self.n_ch)));
        }
        if self.n_cp < self.n_ch {
            return Err(Error::Config(format!(
                "cyclic prefix n_cp = {} must be at least the channel length n_ch = {}",
                self.n_cp, self.n_ch
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.k * self.m
    }

    /// IM groups per antenna, `L = N/u`.
    pub fn groups(&self) -> usize {
        self.n() / self.u
    }

    pub fn waveform(&self) -> Result<WaveformConfig> {
        WaveformConfig::new(self.k, self.m, self.rolloff, self.n_cp)
    }

    pub fn im(&self) -> Result<ImConfig> {
        ImConfig::new(self.u, self.v, self.q)
    }
}

/// Training data and model settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSettings {
    pub snr_db: f64,
    pub size: usize,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub f: usize,
    pub tau: usize,
    pub seed: u64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            snr_db: 15.0,
            size: 1_200_000,
            epochs: 120,
            batch: 1000,
            lr: 8e-4,
            f: 64,
            tau: 128,
            seed: 1,
        }
    }
}

impl TrainSettings {
    pub fn training_config(&self) -> TrainingConfig {
        TrainingConfig {
            lr: self.lr,
            batch: self.batch,
            epochs: self.epochs,
            train_snr_db: self.snr_db,
            dataset_size: self.size,
            seed: self.seed,
            rule: UpdateRule::default(),
        }
    }
}

/// Monte Carlo settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSettings {
    pub snr_db: Vec<f64>,
    pub min_errors: u64,
    pub max_bits: u64,
    pub min_bits: u64,
    pub seed: u64,
    pub receivers: Vec<ReceiverKind>,
    pub ml_guard: u64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            min_errors: 100,
            max_bits: 10_000_000,
            min_bits: 0,
            seed: 2,
            receivers: vec![ReceiverKind::Zf],
            ml_guard: ML_GUARD_DEFAULT,
        }
    }
}

impl SimSettings {
    pub fn stopping_rule(&self) -> StoppingRule {
        StoppingRule {
            min_errors: self.min_errors,
            max_bits: self.max_bits,
            min_bits: self.min_bits,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    t: usize,
    r: usize,
    k: usize,
    m: usize,
    #[serde(default)]
    n_cp: Option<usize>,
    rolloff: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImSection {
    u: usize,
    v: usize,
    q: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    n_ch: usize,
    #[serde(default)]
    pdp: PdpKind,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    system: SystemSection,
    im: ImSection,
    channel: ChannelSection,
    #[serde(default)]
    train: TrainSettings,
    #[serde(default)]
    sim: SimSettings,
}

/// A complete run description.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub train: TrainSettings,
    pub sim: SimSettings,
}

const PRESETS: &[(&str, &str)] = &[
    ("full-2x2-bpsk", include_str!("../../configs/full-2x2-bpsk.toml")),
    ("full-2x2-qam4", include_str!("../../configs/full-2x2-qam4.toml")),
    ("full-4x4-bpsk", include_str!("../../configs/full-4x4-bpsk.toml")),
    ("full-4x4-qam4", include_str!("../../configs/full-4x4-qam4.toml")),
    ("full-2x2-bpsk-ofdm", include_str!("../../configs/full-2x2-bpsk-ofdm.toml")),
    ("full-2x2-qam4-ofdm", include_str!("../../configs/full-2x2-qam4-ofdm.toml")),
    ("full-4x4-bpsk-ofdm", include_str!("../../configs/full-4x4-bpsk-ofdm.toml")),
    ("full-4x4-qam4-ofdm", include_str!("../../configs/full-4x4-qam4-ofdm.toml")),
    ("desk-2x2-bpsk-ofdm", include_str!("../../configs/desk-2x2-bpsk-ofdm.toml")),
    ("tiny", include_str!("../../configs/tiny.toml")),
];

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let system = SystemConfig {
            t: file.system.t,
            r: file.system.r,
            k: file.system.k,
            m: file.system.m,
            u: file.im.u,
            v: file.im.v,
            q: file.im.q,
            n_cp: file.system.n_cp.unwrap_or(file.channel.n_ch),
            n_ch: file.channel.n_ch,
            rolloff: file.system.rolloff,
            pdp: file.channel.pdp,
        };
        let cfg = Self {
            system,
            train: file.train,
            sim: file.sim,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        let s = &self.system;
        let file = ConfigFile {
            system: SystemSection {
                t: s.t,
                r: s.r,
                k: s.k,
                m: s.m,
                n_cp: Some(s.n_cp),
                rolloff: s.rolloff,
            },
            im: ImSection { u: s.u, v: s.v, q: s.q },
            channel: ChannelSection { n_ch: s.n_ch, pdp: s.pdp },
            train: self.train.clone(),
            sim: self.sim.clone(),
        };
        toml::to_string(&file).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.train.training_config().validate()?;
        if self.train.f == 0 || self.train.tau == 0 || self.train.size == 0 {
            return Err(Error::Config("train.f, train.tau and train.size must be positive".into()));
        }
        if self.sim.snr_db.is_empty() {
            return Err(Error::Config("sim.snr_db must list at least one SNR".into()));
        }
        if self.sim.receivers.is_empty() {
            return Err(Error::Config("sim.receivers must name at least one receiver".into()));
        }
        self.sim.stopping_rule().validate()
    }

    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        PRESETS.iter().map(|(n, _)| *n)
    }

    pub fn preset(name: &str) -> Option<Result<Self>> {
        PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_toml_str(text))
    }

    /// A preset name or a path to a TOML file.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if let Some(cfg) = Self::preset(name_or_path) {
            return cfg;
        }
        let path = Path::new(name_or_path);
        if !path.exists() {
            let names: Vec<_> = Self::preset_names().collect();
            return Err(Error::Config(format!(
                "'{name_or_path}' is neither a config file nor a preset ({})",
                names.join(", ")
            )));
        }
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn model_dims(&self) -> Result<ModelDims> {
        Ok(ModelDims {
            t: self.system.t,
            u: self.system.u,
            p: self.system.im()?.bits_per_group(),
            f: self.train.f,
            tau: self.train.tau,
        })
    }
}
