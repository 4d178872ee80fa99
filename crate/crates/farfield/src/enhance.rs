//! Batch enhancement of a corpus built by [`crate::corpus`].
//!
//! ```text
//! out/<id>/enhanced.wav, out/<id>/report.json
//! out/aggregate.json
//! ```
//!
//! Items whose outputs already exist are not recomputed unless forced; their
//! stored reports feed the aggregate.

use std::path::Path;

use farfield_core::metrics::{mean_ci, median, DEFAULT_BOOTSTRAP_RESAMPLES, DEFAULT_CONFIDENCE};
use farfield_core::pipeline::{enhance_clip, oracle_masks, ChainConfig, ClipReport, GroundTruth, MaskSource};
use farfield_core::stft::frame_count;
use farfield_core::Waveform;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    list_items, read_record, ItemFailure, DRY_SPEECH_FILE, MIXTURE_FILE, NOISE_IMAGE_FILE, RECORD_FILE,
    SPEECH_IMAGE_FILE,
};
use crate::fsutil::{read_json, write_json};
use crate::tfb1::{load_masks, save_masks};
use crate::wav::{read_wav, write_wav, Encoding, ExpectedRate};
use crate::{Error, Result};

pub const ENHANCED_FILE: &str = "enhanced.wav";
pub const REPORT_FILE: &str = "report.json";
pub const AGGREGATE_FILE: &str = "aggregate.json";
pub const MASKS_FILE: &str = "masks.tfb";

#[derive(Debug, Clone)]
pub struct EnhanceOptions {
    pub chain: ChainConfig,
    pub force: bool,
    /// Seeds the bootstrap intervals of the aggregate.
    pub seed: u64,
    pub resamples: usize,
    pub confidence: f64,
    pub expected_rate: ExpectedRate,
    pub encoding: Encoding,
}

impl Default for EnhanceOptions {
    fn default() -> Self {
        EnhanceOptions {
            chain: ChainConfig::default(),
            force: false,
            seed: 0,
            resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            confidence: DEFAULT_CONFIDENCE,
            expected_rate: Some(farfield_core::DEFAULT_SAMPLE_RATE),
            encoding: Encoding::Float32,
        }
    }
}

/// Median, mean and bootstrap interval of the mean of one per-clip quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub median: f64,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Summary {
    pub fn of(values: &[f64], resamples: usize, seed: u64, confidence: f64) -> Result<Option<Summary>> {
        if values.is_empty() {
            return Ok(None);
        }
        let (ci_low, ci_high) = mean_ci(values, resamples, seed, confidence)?;
        Ok(Some(Summary {
            count: values.len(),
            median: median(values),
            mean: values.iter().sum::<f64>() / values.len() as f64,
            ci_low,
            ci_high,
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub clips: usize,
    pub enhanced: usize,
    pub failed: Vec<ItemFailure>,
    pub si_snr_in: Option<Summary>,
    pub si_snr_out: Option<Summary>,
    pub si_snr_improvement: Option<Summary>,
    pub sdr_in: Option<Summary>,
    pub sdr_out: Option<Summary>,
    pub sdr_improvement: Option<Summary>,
    pub bootstrap_b: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Aggregate {
    pub fn from_reports(
        reports: &[ClipReport],
        failed: Vec<ItemFailure>,
        opts: &EnhanceOptions,
    ) -> Result<Self> {
        let field = |f: &dyn Fn(&ClipReport) -> Option<f64>| -> Result<Option<Summary>> {
            let values: Vec<f64> = reports.iter().filter_map(f).collect();
            Summary::of(&values, opts.resamples, opts.seed, opts.confidence)
        };
        Ok(Aggregate {
            clips: reports.len() + failed.len(),
            enhanced: reports.len(),
            failed,
            si_snr_in: field(&|r| r.si_snr_in)?,
            si_snr_out: field(&|r| r.si_snr_out)?,
            si_snr_improvement: field(&|r| r.si_snr_improvement())?,
            sdr_in: field(&|r| r.sdr_in)?,
            sdr_out: field(&|r| r.sdr_out)?,
            sdr_improvement: field(&|r| r.sdr_improvement())?,
            bootstrap_b: opts.resamples,
            confidence: opts.confidence,
            seed: opts.seed,
        })
    }
}

/// Ground truth and inputs of one clip as read from a corpus item.
pub struct ClipInputs {
    pub mixture: Waveform,
    pub speech_image: Waveform,
    pub noise_image: Waveform,
    pub dry_speech: Option<Waveform>,
}

pub fn read_clip(item_dir: &Path, expected_rate: ExpectedRate) -> Result<ClipInputs> {
    let dry_path = item_dir.join(DRY_SPEECH_FILE);
    Ok(ClipInputs {
        mixture: read_wav(&item_dir.join(MIXTURE_FILE), expected_rate)?,
        speech_image: read_wav(&item_dir.join(SPEECH_IMAGE_FILE), expected_rate)?,
        noise_image: read_wav(&item_dir.join(NOISE_IMAGE_FILE), expected_rate)?,
        dry_speech: if dry_path.is_file() {
            Some(read_wav(&dry_path, expected_rate)?)
        } else {
            None
        },
    })
}

/// `(frames, bins)` of the grid the chain computes for `len` samples.
pub fn grid_shape(len: usize, chain: &ChainConfig) -> (usize, usize) {
    (
        frame_count(len, chain.stft.window_len, chain.stft.hop),
        chain.stft.window_len / 2 + 1,
    )
}

pub fn enhance_item(item_dir: &Path, out_dir: &Path, opts: &EnhanceOptions) -> Result<ClipReport> {
    let record = read_record(item_dir)?;
    let target = out_dir.join(&record.id);
    let report_path = target.join(REPORT_FILE);
    let wav_path = target.join(ENHANCED_FILE);
    if !opts.force && report_path.is_file() && wav_path.is_file() {
        log::info!("{}: outputs exist, skipping", record.id);
        return read_json(&report_path);
    }
    let clip = read_clip(item_dir, opts.expected_rate)?;
    let masks = match opts.chain.mask_source {
        MaskSource::Oracle => None,
        MaskSource::File => {
            let rel = record.masks.as_ref().ok_or_else(|| {
                Error::format(
                    &item_dir.join(RECORD_FILE),
                    "file mask source needs a `masks` entry",
                )
            })?;
            let shape = grid_shape(clip.mixture.len(), &opts.chain);
            Some(load_masks(&item_dir.join(rel), Some(shape))?)
        }
    };
    let (enhanced, mut report) = enhance_clip(
        &clip.mixture,
        Some(&clip.truth()),
        masks.as_ref().map(|m| (&m.speech, &m.noise)),
        &opts.chain,
    )?;
    report.clip_id = record.id.clone();
    write_wav(&enhanced, &wav_path, opts.encoding)?;
    write_json(&report_path, &report)?;
    log::info!("enhanced {}", record.id);
    Ok(report)
}

pub fn enhance_corpus(corpus: &Path, out_dir: &Path, opts: &EnhanceOptions) -> Result<Aggregate> {
    let items = list_items(corpus)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let results: Vec<(String, Result<ClipReport>)> = items
        .par_iter()
        .map(|dir| {
            let name = dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            let r = enhance_item(dir, out_dir, opts);
            if let Err(e) = &r {
                log::error!("{name}: {e}");
            }
            (name, r)
        })
        .collect();
    let mut reports = Vec::new();
    let mut failed = Vec::new();
    for (id, r) in results {
        match r {
            Ok(report) => reports.push(report),
            Err(e) => failed.push(ItemFailure {
                id,
                error: e.to_string(),
            }),
        }
    }
    let aggregate = Aggregate::from_reports(&reports, failed, opts)?;
    write_json(&out_dir.join(AGGREGATE_FILE), &aggregate)?;
    Ok(aggregate)
}

impl ClipInputs {
    pub fn truth(&self) -> GroundTruth<'_> {
        GroundTruth {
            speech_image: &self.speech_image,
            noise_image: &self.noise_image,
            dry_speech: self.dry_speech.as_ref(),
        }
    }
}

/// Computes oracle masks for a corpus item, stores them next to its audio and
/// points the item's record at them.
pub fn write_item_masks(item_dir: &Path, chain: &ChainConfig, expected_rate: ExpectedRate) -> Result<()> {
    let mut record = read_record(item_dir)?;
    let clip = read_clip(item_dir, expected_rate)?;
    let grid = chain.stft.analyze(&clip.mixture)?;
    let (speech, noise) = oracle_masks(&grid, &clip.truth(), chain)?;
    save_masks(&speech, &noise, &item_dir.join(MASKS_FILE))?;
    record.masks = Some(MASKS_FILE.into());
    write_json(&item_dir.join(RECORD_FILE), &record)
}

pub fn write_corpus_masks(
    corpus: &Path,
    chain: &ChainConfig,
    expected_rate: ExpectedRate,
) -> Result<Vec<ItemFailure>> {
    let items = list_items(corpus)?;
    let failed = items
        .par_iter()
        .filter_map(|dir| {
            write_item_masks(dir, chain, expected_rate).err().map(|e| {
                let id = dir
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                log::error!("{id}: {e}");
                ItemFailure {
                    id,
                    error: e.to_string(),
                }
            })
        })
        .collect();
    Ok(failed)
}
