//! The JSON run configuration shared by all subcommands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bench_harness::{default_spec, parse_snr_text, ExperimentConfig};
use crate::cs_baseline::CsConfig;
use crate::dealias_crt::DealiasSettings;
use crate::matrix_pencil::PencilConfig;
use crate::model_order::OrderConfig;
use crate::signal_model::SignalSpec;
use crate::{Error, Result};

/// Schema and defaults, printed by `--help`.
pub const CONFIG_HELP: &str = r#"CONFIG FILE (JSON, unknown keys are rejected; every section is optional)
  signal      {"tones": [{"freq_hz", "amplitude", "phase_rad"}, ...]}
              default: the built-in 10-tone spec (0.5-9 kHz)
  synth       rate1_hz 101, rate2_hz 103, n_samples 256, snr_db "inf",
              start_index 0, seed 0, nyquist_rate_hz 10000
  pencil      pencil_param_l null (= N/3), model_order null (= estimated),
              svd_rel_threshold 1e-3, unit_circle_tol 1e-2
  order       rel_peak_threshold 0.1, min_peak_separation_bins 2
  dealias     max_fold_index_n null, f_max_hint_hz null (n = largest window
              inside the unambiguous range), freq_match_tol_hz null
              (= max rate * 1e-3), amp_weight 1, phase_weight 1
  cs          full_length_n 2048, sparsity_k 10, measurements_m null
              (= max(K, ceil(K ln(N/K)))), seed 0
  experiment  spec (built-in), rate1_hz 101, rate2_hz 103,
              nyquist_rate_hz 10000, full_length_n 2048,
              snr_grid_db [0,10,20,30,40,50] ("inf" = noiseless),
              sample_lengths [108,216,864], trials 100, master_seed 0,
              methods ["gea","cs"], use_true_order true, pencil, order,
              dealias (f_max_hint_hz defaults to nyquist_rate_hz)
  output      default output path when --out is absent

ENVIRONMENT
  PENCILCRT_THREADS  worker threads for bench (default: all cores)

EXIT STATUS
  0 success, 1 partial (unresolved components), 2 config error, 3 I/O error"#;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSettings {
    pub rate1_hz: f64,
    pub rate2_hz: f64,
    pub n_samples: usize,
    #[serde(with = "snr_value")]
    pub snr_db: f64,
    pub start_index: i64,
    pub seed: u64,
    /// Nyquist-rate record rate used by the CS path of `compare`.
    pub nyquist_rate_hz: f64,
}

impl Default for SynthSettings {
    fn default() -> Self {
        Self {
            rate1_hz: 101.0,
            rate2_hz: 103.0,
            n_samples: 256,
            snr_db: f64::INFINITY,
            start_index: 0,
            seed: 0,
            nyquist_rate_hz: 10_000.0,
        }
    }
}

mod snr_value {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Snr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Snr::deserialize(d)? {
            Snr::Num(x) => Ok(x),
            Snr::Text(s) => parse_snr_text(&s)
                .ok_or_else(|| serde::de::Error::custom(format!("invalid SNR value {s:?}"))),
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str("inf")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub signal: SignalSpec,
    pub synth: SynthSettings,
    pub pencil: PencilConfig,
    pub order: OrderConfig,
    pub dealias: DealiasSettings,
    pub cs: CsConfig,
    pub experiment: ExperimentConfig,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            signal: default_spec(),
            synth: SynthSettings::default(),
            pencil: PencilConfig::default(),
            order: OrderConfig::default(),
            dealias: DealiasSettings::default(),
            cs: CsConfig::default(),
            experiment: ExperimentConfig::default(),
            output: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Invalid { path: String, message: String },
}

impl RunConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> std::result::Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text).map_err(|message| ConfigError::Invalid {
            path: path.display().to_string(),
            message,
        })
    }

    /// Checks the sections every command depends on.
    pub fn validate(&self) -> Result<()> {
        self.pencil.validate()?;
        self.order.validate()?;
        let s = &self.synth;
        if s.n_samples == 0 {
            return Err(Error::InvalidArgument("synth.n_samples must be positive".into()));
        }
        if s.snr_db.is_nan() {
            return Err(Error::InvalidArgument("synth.snr_db is NaN".into()));
        }
        if !(s.nyquist_rate_hz.is_finite() && s.nyquist_rate_hz > 0.0) {
            return Err(Error::InvalidArgument("synth.nyquist_rate_hz must be positive".into()));
        }
        crate::dealias_crt::DealiasConfig::new(s.rate1_hz, s.rate2_hz, 1)?;
        Ok(())
    }
}
