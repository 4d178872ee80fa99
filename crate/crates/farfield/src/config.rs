//! Run configuration file. Every key is optional; unknown keys are rejected.
//! Command-line flags override the file, the file overrides the defaults.

use std::path::{Path, PathBuf};

use farfield_core::pipeline::ChainConfig;
use farfield_core::room::{ArrayGeometry, RoomProfile};
use serde::{Deserialize, Serialize};

use crate::wav::Encoding;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub chain: ChainConfig,
    pub profile: RoomProfile,
    pub array: ArrayGeometry,
    /// Manifest used by `mix` when `--manifest` is absent.
    pub manifest: Option<PathBuf>,
    pub seed: u64,
    /// Worker threads; all available cores when absent.
    pub workers: Option<usize>,
    pub sample_rate: u32,
    /// Encoding of every WAV the tool writes.
    pub encoding: Encoding,
    pub bootstrap_resamples: usize,
    pub confidence: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            chain: ChainConfig::default(),
            profile: RoomProfile::Eval,
            array: ArrayGeometry::default(),
            manifest: None,
            seed: 0,
            workers: None,
            sample_rate: farfield_core::DEFAULT_SAMPLE_RATE,
            encoding: Encoding::Float32,
            bootstrap_resamples: farfield_core::metrics::DEFAULT_BOOTSTRAP_RESAMPLES,
            confidence: farfield_core::metrics::DEFAULT_CONFIDENCE,
        }
    }
}

impl RunConfig {
    /// Parses and validates a config file. Schema violations are usage errors.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::usage(format!("{}: {e}", path.display())))?;
        cfg.validate()
            .map_err(|e| Error::usage(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let chain = &self.chain;
        chain.beamformer.validate(usize::MAX).map_err(|e| e.to_string())?;
        if let Some(w) = &chain.wpe {
            w.validate().map_err(|e| e.to_string())?;
        }
        chain.stft.validate().map_err(|e| e.to_string())?;
        if self.array.mics < 2 {
            return Err("array needs at least two microphones".into());
        }
        if !(self.array.spacing > 0.0 && self.array.spacing.is_finite()) {
            return Err("array spacing must be positive".into());
        }
        if self.workers == Some(0) {
            return Err("workers must be at least 1".into());
        }
        if self.sample_rate == 0 {
            return Err("sample_rate must be positive".into());
        }
        if self.bootstrap_resamples == 0 {
            return Err("bootstrap_resamples must be at least 1".into());
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err("confidence must be in (0, 1)".into());
        }
        Ok(())
    }
}
