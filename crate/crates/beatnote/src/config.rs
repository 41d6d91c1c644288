//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Every key must be
//! consumed by one of the `apply_*` functions; leftovers are reported as
//! unknown so typos do not pass silently.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use beatnote_core::eval::SweepConfig;
use beatnote_core::mask::MaskConfig;
use beatnote_core::train::{LrSchedule, TrainConfig};
use beatnote_core::{Architecture, Interval, ParamRanges};

/// Configuration problem.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    /// File could not be read.
    #[error("cannot read {path}: {source}")]
    Io {
        /// Offending path.
        path: String,
        /// Cause.
        source: std::io::Error,
    },
    /// Line without `=`.
    #[error("line {0}: expected key = value")]
    Syntax(usize),
    /// Same key twice.
    #[error("duplicate key {0}")]
    Duplicate(String),
    /// Value does not parse.
    #[error("bad value for {key}: {value:?}")]
    Value {
        /// Key.
        key: String,
        /// Raw value.
        value: String,
    },
    /// Keys nobody consumed.
    #[error("unknown keys: {0}")]
    Unknown(String),
}

/// Parsed key/value pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl FromStr for KeyValues {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax(i + 1))?;
            let k = k.trim().to_string();
            if entries.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(ConfigError::Duplicate(k));
            }
        }
        Ok(Self { entries })
    }
}

impl KeyValues {
    /// Reads and parses a file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?
            .parse()
    }

    /// Removes and parses `key` when present.
    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(value) => value.parse().map(Some).map_err(|_| ConfigError::Value { key: key.into(), value }),
        }
    }

    fn set<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<(), ConfigError> {
        if let Some(v) = self.take(key)? {
            *slot = v;
        }
        Ok(())
    }

    /// Errors if any key is left.
    pub fn finish(self) -> Result<(), ConfigError> {
        if self.entries.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Unknown(self.entries.into_keys().collect::<Vec<_>>().join(", ")))
        }
    }
}

fn interval(kv: &mut KeyValues, name: &str, slot: &mut Interval) -> Result<(), ConfigError> {
    kv.set(&format!("{name}_min"), &mut slot.lo)?;
    kv.set(&format!("{name}_max"), &mut slot.hi)
}

/// Keys: `{frequency,phase,offset,trend_start,trend_end,sigma_amp,sigma_phase}_{min,max}`,
/// `n_samples`, `sample_rate`.
pub fn apply_ranges(kv: &mut KeyValues, ranges: &mut ParamRanges) -> Result<(), ConfigError> {
    interval(kv, "frequency", &mut ranges.frequency_hz)?;
    interval(kv, "phase", &mut ranges.phase_rad)?;
    interval(kv, "offset", &mut ranges.offset)?;
    interval(kv, "trend_start", &mut ranges.trend_start)?;
    interval(kv, "trend_end", &mut ranges.trend_end)?;
    interval(kv, "sigma_amp", &mut ranges.sigma_amp)?;
    interval(kv, "sigma_phase", &mut ranges.sigma_phase)?;
    kv.set("n_samples", &mut ranges.n_samples)?;
    kv.set("sample_rate", &mut ranges.sample_rate_hz)
}

/// Keys: `kernel`, `channels` (comma list), `denoise_hidden`,
/// `head_channels`, `hidden`, `freq_offset`, `freq_scale`.
pub fn apply_architecture(kv: &mut KeyValues, arch: &mut Architecture) -> Result<(), ConfigError> {
    kv.set("kernel", &mut arch.kernel)?;
    if let Some(list) = kv.take::<String>("channels")? {
        arch.denoise_channels = list
            .split(',')
            .map(|c| c.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| ConfigError::Value { key: "channels".into(), value: list.clone() })?;
    }
    kv.set("denoise_hidden", &mut arch.denoise_hidden)?;
    kv.set("head_channels", &mut arch.head_channels)?;
    kv.set("hidden", &mut arch.hidden)?;
    kv.set("freq_offset", &mut arch.freq_offset_hz)?;
    kv.set("freq_scale", &mut arch.freq_scale_hz)
}

/// Training keys: `n_train`, `n_val`, `batch_size`, `max_epochs`, `lr`,
/// `final_lr` (switches to cosine decay), `schedule` (`constant` or
/// `cosine`), `patience`, `seed`, `w_clean`, `w_freq`, `resample_each_epoch`, plus the range and
/// architecture keys. The network input length follows `n_samples`.
pub fn apply_train(kv: &mut KeyValues, cfg: &mut TrainConfig) -> Result<(), ConfigError> {
    kv.set("n_train", &mut cfg.n_train)?;
    kv.set("n_val", &mut cfg.n_val)?;
    kv.set("batch_size", &mut cfg.batch_size)?;
    kv.set("max_epochs", &mut cfg.max_epochs)?;
    kv.set("lr", &mut cfg.lr)?;
    kv.set("patience", &mut cfg.patience)?;
    kv.set("seed", &mut cfg.master_seed)?;
    kv.set("w_clean", &mut cfg.loss_weights.w_clean)?;
    kv.set("w_freq", &mut cfg.loss_weights.w_freq)?;
    kv.set("resample_each_epoch", &mut cfg.resample_each_epoch)?;
    let final_lr = kv.take::<f64>("final_lr")?;
    match kv.take::<String>("schedule")?.as_deref() {
        None => {
            if let (Some(f), LrSchedule::Cosine { final_lr }) = (final_lr, &mut cfg.schedule) {
                *final_lr = f;
            }
        }
        Some("constant") => cfg.schedule = LrSchedule::Constant,
        Some("cosine") => cfg.schedule = LrSchedule::Cosine { final_lr: final_lr.unwrap_or(0.0) },
        Some(other) => return Err(ConfigError::Value { key: "schedule".into(), value: other.into() }),
    }
    apply_ranges(kv, &mut cfg.ranges)?;
    cfg.architecture.input_len = cfg.ranges.n_samples;
    apply_architecture(kv, &mut cfg.architecture)
}

/// Sweep keys: `f_start`, `f_stop`, `f_step`, `trials`, `seed`, `bin_width`,
/// plus the range keys (the frequency range is ignored).
pub fn apply_sweep(kv: &mut KeyValues, cfg: &mut SweepConfig) -> Result<(), ConfigError> {
    kv.set("f_start", &mut cfg.f_start)?;
    kv.set("f_stop", &mut cfg.f_stop)?;
    kv.set("f_step", &mut cfg.f_step)?;
    kv.set("trials", &mut cfg.trials_per_freq)?;
    kv.set("seed", &mut cfg.seed)?;
    kv.set("bin_width", &mut cfg.bin_width_hz)?;
    apply_ranges(kv, &mut cfg.ranges)
}

/// Mask keys: `ref_mean`, `ref_sigma`, `k_sigma`, `contrast_threshold`,
/// `envelope_window`.
pub fn apply_mask(kv: &mut KeyValues, cfg: &mut MaskConfig) -> Result<(), ConfigError> {
    kv.set("ref_mean", &mut cfg.ref_mean_hz)?;
    kv.set("ref_sigma", &mut cfg.ref_sigma_hz)?;
    kv.set("k_sigma", &mut cfg.k_sigma)?;
    kv.set("contrast_threshold", &mut cfg.contrast_threshold)?;
    kv.set("envelope_window", &mut cfg.envelope_window)
}

/// `key = value` lines echoing a sweep configuration.
pub fn sweep_echo(cfg: &SweepConfig) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: &dyn Display| out.push_str(&format!("{k} = {v}\n"));
    line("estimator", &cfg.estimator.as_str());
    line("f_start", &cfg.f_start);
    line("f_stop", &cfg.f_stop);
    line("f_step", &cfg.f_step);
    line("trials", &cfg.trials_per_freq);
    line("seed", &cfg.seed);
    line("bin_width", &cfg.bin_width_hz);
    let r = &cfg.ranges;
    for (name, i) in [
        ("phase", r.phase_rad),
        ("offset", r.offset),
        ("trend_start", r.trend_start),
        ("trend_end", r.trend_end),
        ("sigma_amp", r.sigma_amp),
        ("sigma_phase", r.sigma_phase),
    ] {
        line(&format!("{name}_min"), &i.lo);
        line(&format!("{name}_max"), &i.hi);
    }
    line("n_samples", &r.n_samples);
    line("sample_rate", &r.sample_rate_hz);
    out
}
