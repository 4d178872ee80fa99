//! Corpus building: renders every mixture of a manifest into its own
//! directory.
//!
//! ```text
//! out/manifest.jsonl      the manifest with ids and item seeds filled in
//! out/corpus.json         built and failed items
//! out/<id>/mixture.wav, speech_image.wav, noise_image.wav, dry_speech.wav
//! out/<id>/record.json
//! ```

use std::path::{Path, PathBuf};

use farfield_core::mixer::{render_mixture, MixRequest};
use farfield_core::room::{ArrayGeometry, RoomSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fsutil::{read_json, write_json};
use crate::manifest::{derive_seed, read_manifest, resolve, write_manifest, MixtureSpec};
use crate::wav::{read_wav, write_wav, Encoding, ExpectedRate};
use crate::{Error, Result};

pub const RECORD_FILE: &str = "record.json";
pub const MIXTURE_FILE: &str = "mixture.wav";
pub const SPEECH_IMAGE_FILE: &str = "speech_image.wav";
pub const NOISE_IMAGE_FILE: &str = "noise_image.wav";
pub const DRY_SPEECH_FILE: &str = "dry_speech.wav";

/// Everything known about one rendered mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipRecord {
    pub id: String,
    pub spec: MixtureSpec,
    /// Seed the item was rendered with.
    pub seed: u64,
    pub room: RoomSpec,
    pub snr_db: f64,
    pub achieved_snr_db: f64,
    pub noise_gain: f64,
    pub channels: usize,
    pub samples: usize,
    pub sample_rate: u32,
    /// Mask file for file-mask enhancement, relative to the item directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masks: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemFailure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub total: usize,
    pub built: Vec<String>,
    pub failed: Vec<ItemFailure>,
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub seed: u64,
    pub expected_rate: ExpectedRate,
    pub array: ArrayGeometry,
    pub reference_channel: usize,
    pub encoding: Encoding,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            seed: 0,
            expected_rate: Some(farfield_core::DEFAULT_SAMPLE_RATE),
            array: ArrayGeometry::default(),
            reference_channel: 0,
            encoding: Encoding::Float32,
        }
    }
}

/// Manifest entries with ids and item seeds made explicit.
pub fn normalize(specs: &[MixtureSpec]) -> Result<Vec<MixtureSpec>> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let mut spec = spec.clone();
        let id = spec.id.get_or_insert_with(|| format!("{i:05}")).clone();
        if !seen.insert(id.clone()) {
            return Err(Error::usage(format!("duplicate item id {id:?}")));
        }
        spec.seed.get_or_insert(i as u64);
        out.push(spec);
    }
    Ok(out)
}

pub fn build_corpus(manifest: &Path, out_dir: &Path, opts: &BuildOptions) -> Result<CorpusSummary> {
    let specs = normalize(&read_manifest(manifest)?)?;
    let base = manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_manifest(&specs, &out_dir.join("manifest.jsonl"))?;

    let results: Vec<Result<()>> = specs
        .par_iter()
        .map(|spec| {
            let id = spec.id.as_deref().unwrap_or_default();
            let r = build_item(spec, &base, &out_dir.join(id), opts);
            match &r {
                Ok(()) => log::info!("built {id}"),
                Err(e) => log::error!("{id}: {e}"),
            }
            r
        })
        .collect();

    let mut summary = CorpusSummary {
        total: specs.len(),
        ..Default::default()
    };
    for (spec, r) in specs.iter().zip(results) {
        let id = spec.id.clone().unwrap_or_default();
        match r {
            Ok(()) => summary.built.push(id),
            Err(e) => summary.failed.push(ItemFailure {
                id,
                error: e.to_string(),
            }),
        }
    }
    write_json(&out_dir.join("corpus.json"), &summary)?;
    Ok(summary)
}

pub fn build_item(spec: &MixtureSpec, base: &Path, dir: &Path, opts: &BuildOptions) -> Result<()> {
    let item_seed = derive_seed(opts.seed, spec.seed.unwrap_or_default());
    let room = spec.rir.resolve(base, item_seed, &opts.array)?;
    let speech = read_wav(&resolve(base, &spec.speech_path), opts.expected_rate)?;
    let noise = read_wav(&resolve(base, &spec.noise_path), opts.expected_rate)?;
    let bundle = render_mixture(&MixRequest {
        speech: &speech,
        noise: &noise,
        room: &room,
        snr_db: spec.snr_db,
        seed: derive_seed(item_seed, 2),
        truncate_s: spec.truncate_s,
        reference_channel: opts.reference_channel,
    })?;
    let max_len = (spec.truncate_s * speech.sample_rate() as f64).round() as usize;
    let dry = speech.resized(speech.len().min(max_len));
    write_wav(&bundle.mixture, &dir.join(MIXTURE_FILE), opts.encoding)?;
    write_wav(&bundle.speech_image, &dir.join(SPEECH_IMAGE_FILE), opts.encoding)?;
    write_wav(&bundle.noise_image, &dir.join(NOISE_IMAGE_FILE), opts.encoding)?;
    write_wav(&dry, &dir.join(DRY_SPEECH_FILE), opts.encoding)?;
    let record = ClipRecord {
        id: spec.id.clone().unwrap_or_default(),
        spec: spec.clone(),
        seed: item_seed,
        channels: bundle.mixture.num_channels(),
        samples: bundle.mixture.len(),
        sample_rate: bundle.mixture.sample_rate(),
        room,
        snr_db: bundle.snr_db,
        achieved_snr_db: bundle.achieved_snr_db,
        noise_gain: bundle.noise_gain,
        masks: None,
    };
    write_json(&dir.join(RECORD_FILE), &record)
}

/// Item directories of a corpus (those holding a record), sorted by name.
pub fn list_items(corpus: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    for entry in std::fs::read_dir(corpus).map_err(|e| Error::io(corpus, e))? {
        let path = entry.map_err(|e| Error::io(corpus, e))?.path();
        if path.join(RECORD_FILE).is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}

pub fn read_record(item_dir: &Path) -> Result<ClipRecord> {
    read_json(&item_dir.join(RECORD_FILE))
}
