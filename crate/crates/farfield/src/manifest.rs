//! Mixture manifests: JSON lines, one [`MixtureSpec`] per line.

use std::io::Write;
use std::path::{Path, PathBuf};

use farfield_core::room::{sample_room_with, ArrayGeometry, RoomProfile, RoomSpec};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fsutil::{read_json, write_atomic};
use crate::{Error, Result};

pub const DEFAULT_TRUNCATE_S: f64 = farfield_core::mixer::DEFAULT_TRUNCATE_S;

fn default_truncate() -> f64 {
    DEFAULT_TRUNCATE_S
}

/// One speech + noise mixture to render.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    /// Item name, also the output directory name. Defaults to the
    /// zero-padded line index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    /// Dry mono speech WAV; relative paths are taken from the manifest's
    /// directory.
    pub speech_path: PathBuf,
    pub noise_path: PathBuf,
    pub rir: RoomRef,
    pub snr_db: f64,
    /// Item seed, combined with the run seed. Defaults to the line index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_truncate")]
    pub truncate_s: f64,
}

/// Where the room of a mixture comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RoomRef {
    /// Freshly drawn room; without a seed one is derived from the item seed.
    Sampled {
        profile: RoomProfile,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Spec(RoomSpec),
    /// RoomSpec JSON file.
    Path(PathBuf),
}

impl MixtureSpec {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !self.snr_db.is_finite() {
            return Err("snr_db must be finite".into());
        }
        if !(self.truncate_s > 0.0 && self.truncate_s.is_finite()) {
            return Err("truncate_s must be positive".into());
        }
        if let Some(id) = &self.id {
            check_id(id)?;
        }
        Ok(())
    }
}

/// Item ids become directory names: no separators, no dot-only names.
pub fn check_id(id: &str) -> std::result::Result<(), String> {
    let ok = !id.is_empty()
        && id != "."
        && id != ".."
        && id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
    if ok {
        Ok(())
    } else {
        Err(format!(
            "item id {id:?} must be a plain file name of [A-Za-z0-9._-]"
        ))
    }
}

pub fn read_manifest(path: &Path) -> Result<Vec<MixtureSpec>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut specs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let spec: MixtureSpec =
            serde_json::from_str(line).map_err(|e| Error::format(path, format!("line {}: {e}", i + 1)))?;
        spec.validate()
            .map_err(|m| Error::format(path, format!("line {}: {m}", i + 1)))?;
        specs.push(spec);
    }
    Ok(specs)
}

pub fn write_manifest(specs: &[MixtureSpec], path: &Path) -> Result<()> {
    write_atomic(path, |w| {
        for spec in specs {
            serde_json::to_writer(&mut *w, spec).map_err(|e| Error::json(path, e))?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    })
}

/// Independent stream `stream` of the run seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Resolves `p` against `base` unless it is absolute.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RoomRef {
    pub fn resolve(&self, base: &Path, item_seed: u64, array: &ArrayGeometry) -> Result<RoomSpec> {
        let room = match self {
            RoomRef::Sampled { profile, seed } => {
                sample_room_with(seed.unwrap_or_else(|| derive_seed(item_seed, 1)), *profile, array)?
            }
            RoomRef::Spec(spec) => spec.clone(),
            RoomRef::Path(p) => read_json(&resolve(base, p))?,
        };
        room.validate()?;
        Ok(room)
    }
}
