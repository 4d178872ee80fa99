//! Per-clip enhancement chain: masks -> spatial covariances -> (Rank-1)
//! SDW-MWF -> WPE, or WPE first when configured.
//!
//! Masks come from ground truth (oracle mode) or from a separation front end
//! (supplied by the caller). When ground truth is available the report holds
//! SI-SNR and SDR of every stage against the reference-channel speech image,
//! or against the dry speech when [`ReportReference::Dry`] is chosen.

use alloc::string::String;
use alloc::vec::Vec;

use crate::beamform::{apply_weights, estimate_covariance, sdw_mwf_weights, BeamformerConfig};
use crate::mask::{masks_from_estimates, oracle_estimates, Mask, MaskEpsilon};
use crate::metrics::{sdr, si_snr};
use crate::stft::{istft, StftConfig, TfGrid, Waveform};
use crate::wpe::{wpe, WpeConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MaskSource {
    #[default]
    Oracle,
    File,
}

/// What the oracle masks treat as the speech target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OracleTarget {
    /// Reverberant speech image; the noise image is the interference.
    #[default]
    Reverberant,
    /// Dry speech; noise and reverberation are the interference.
    Dry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ChainOrder {
    #[default]
    MwfThenWpe,
    WpeThenMwf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ReportReference {
    #[default]
    SpeechImage,
    Dry,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ChainConfig {
    pub mask_source: MaskSource,
    pub oracle_target: OracleTarget,
    pub beamformer: BeamformerConfig,
    /// `None` disables dereverberation.
    pub wpe: Option<WpeConfig>,
    pub order: ChainOrder,
    pub stft: StftConfig,
    pub report_reference: ReportReference,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            mask_source: MaskSource::Oracle,
            oracle_target: OracleTarget::Reverberant,
            beamformer: BeamformerConfig::default(),
            wpe: Some(WpeConfig::default()),
            order: ChainOrder::MwfThenWpe,
            stft: StftConfig::default(),
            report_reference: ReportReference::SpeechImage,
        }
    }
}

/// Ground-truth components of a simulated mixture.
#[derive(Debug, Clone, Copy)]
pub struct GroundTruth<'a> {
    pub speech_image: &'a Waveform,
    pub noise_image: &'a Waveform,
    pub dry_speech: Option<&'a Waveform>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StageReport {
    pub name: String,
    pub si_snr: Option<f64>,
    pub sdr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClipReport {
    pub clip_id: String,
    pub si_snr_in: Option<f64>,
    pub si_snr_out: Option<f64>,
    pub sdr_in: Option<f64>,
    pub sdr_out: Option<f64>,
    pub stages: Vec<StageReport>,
    /// Frequency bins whose filter was zeroed because both covariances were.
    pub silent_bins: usize,
}

impl ClipReport {
    pub fn si_snr_improvement(&self) -> Option<f64> {
        Some(self.si_snr_out? - self.si_snr_in?)
    }

    pub fn sdr_improvement(&self) -> Option<f64> {
        Some(self.sdr_out? - self.sdr_in?)
    }
}

struct Scorer {
    reference: Option<Vec<f64>>,
    reference_channel: usize,
    stages: Vec<StageReport>,
}

impl Scorer {
    fn score(&mut self, name: &str, signal: &Waveform) -> Result<()> {
        let (si, sd) = match &self.reference {
            Some(r) => {
                let k = if signal.num_channels() == 1 {
                    0
                } else {
                    self.reference_channel
                };
                let est = &signal.channel(k)[..r.len().min(signal.len())];
                let r = &r[..est.len()];
                (Some(si_snr(r, est)?), Some(sdr(r, est)?))
            }
            None => (None, None),
        };
        self.stages.push(StageReport {
            name: name.into(),
            si_snr: si,
            sdr: sd,
        });
        Ok(())
    }

    fn score_grid(&mut self, name: &str, grid: &TfGrid) -> Result<()> {
        if self.reference.is_none() {
            self.stages.push(StageReport {
                name: name.into(),
                si_snr: None,
                sdr: None,
            });
            return Ok(());
        }
        let w = istft(grid)?;
        self.score(name, &w)
    }
}

/// Speech and noise masks computed from ground truth.
pub fn oracle_masks(mix: &TfGrid, truth: &GroundTruth<'_>, cfg: &ChainConfig) -> Result<(Mask, Mask)> {
    let stft_cfg = cfg.stft;
    let reference_channel = cfg.beamformer.reference_channel;
    let (s_hat, n_hat) = match cfg.oracle_target {
        OracleTarget::Reverberant => {
            let s = stft_cfg.analyze(truth.speech_image)?;
            let n = stft_cfg.analyze(truth.noise_image)?;
            oracle_estimates(mix, &s, &n, reference_channel)?
        }
        OracleTarget::Dry => {
            let dry = truth
                .dry_speech
                .ok_or_else(|| Error::invalid("dry-target oracle needs the dry speech"))?;
            let dry = dry.resized(truth.speech_image.len());
            let mixture_ref = mix.select(reference_channel)?;
            let s = stft_cfg.analyze(&dry)?;
            if !s.same_layout(&mixture_ref) {
                return Err(Error::shape("dry speech and mixture grids differ"));
            }
            let mut n = mixture_ref.clone();
            for (x, d) in n.as_mut_slice().iter_mut().zip(s.as_slice()) {
                *x -= d;
            }
            (s, n)
        }
    };
    masks_from_estimates(&s_hat, &n_hat, MaskEpsilon::default())
}

/// Runs the enhancement chain on one mixture.
///
/// `truth` is required in oracle mode and enables the SI-SNR/SDR report;
/// `masks` (speech, noise) is required when the configuration reads masks
/// from files.
pub fn enhance_clip(
    mixture: &Waveform,
    truth: Option<&GroundTruth<'_>>,
    masks: Option<(&Mask, &Mask)>,
    cfg: &ChainConfig,
) -> Result<(Waveform, ClipReport)> {
    let k = mixture.num_channels();
    if k < 2 {
        return Err(Error::invalid(alloc::format!(
            "beamforming needs at least two channels, got {k}"
        )));
    }
    cfg.beamformer.validate(k)?;
    if let Some(w) = &cfg.wpe {
        w.validate()?;
    }
    if let Some(t) = truth {
        if t.speech_image.num_channels() != k
            || t.noise_image.num_channels() != k
            || t.speech_image.len() != mixture.len()
            || t.noise_image.len() != mixture.len()
        {
            return Err(Error::shape("ground-truth images do not match the mixture"));
        }
    }
    let reference_channel = cfg.beamformer.reference_channel;
    let reference = match (truth, cfg.report_reference) {
        (None, _) => None,
        (Some(t), ReportReference::SpeechImage) => Some(t.speech_image.channel(reference_channel).to_vec()),
        (Some(t), ReportReference::Dry) => {
            let dry = t
                .dry_speech
                .ok_or_else(|| Error::invalid("dry report reference needs the dry speech"))?;
            Some(dry.resized(mixture.len()).channel(0).to_vec())
        }
    };
    let mut scorer = Scorer {
        reference,
        reference_channel,
        stages: Vec::new(),
    };
    scorer
        .score("input", mixture)
        .map_err(|e| e.in_stage("metrics"))?;

    let y = cfg.stft.analyze(mixture).map_err(|e| e.in_stage("stft"))?;

    let owned_masks;
    let (speech_mask, noise_mask) = match (cfg.mask_source, masks) {
        (MaskSource::File, Some((s, n))) => (s, n),
        (MaskSource::File, None) => {
            return Err(Error::invalid("mask source is file but no masks were supplied").in_stage("masks"))
        }
        (MaskSource::Oracle, _) => {
            let t =
                truth.ok_or_else(|| Error::invalid("oracle masks need ground truth").in_stage("masks"))?;
            owned_masks = oracle_masks(&y, t, cfg).map_err(|e| e.in_stage("masks"))?;
            (&owned_masks.0, &owned_masks.1)
        }
    };
    if !speech_mask.fits(&y) || !noise_mask.fits(&y) {
        return Err(Error::shape(alloc::format!(
            "masks are {}x{}, mixture grid is {}x{}",
            speech_mask.frames(),
            speech_mask.bins(),
            y.frames(),
            y.bins()
        ))
        .in_stage("masks"));
    }

    let mwf = |grid: &TfGrid| -> Result<(TfGrid, usize)> {
        let r_ss = estimate_covariance(grid, speech_mask)?;
        let r_nn = estimate_covariance(grid, noise_mask)?;
        let w = sdw_mwf_weights(&r_ss, &r_nn, &cfg.beamformer)?;
        Ok((apply_weights(grid, &w)?, w.silent_bins()))
    };

    let (out, silent_bins) = match (cfg.order, &cfg.wpe) {
        (_, None) => {
            let (z, silent) = mwf(&y).map_err(|e| e.in_stage("mwf"))?;
            scorer.score_grid("mwf", &z).map_err(|e| e.in_stage("metrics"))?;
            (z, silent)
        }
        (ChainOrder::MwfThenWpe, Some(wcfg)) => {
            let (z, silent) = mwf(&y).map_err(|e| e.in_stage("mwf"))?;
            scorer.score_grid("mwf", &z).map_err(|e| e.in_stage("metrics"))?;
            let d = wpe(&z, wcfg).map_err(|e| e.in_stage("wpe"))?;
            scorer.score_grid("wpe", &d).map_err(|e| e.in_stage("metrics"))?;
            (d, silent)
        }
        (ChainOrder::WpeThenMwf, Some(wcfg)) => {
            let d = wpe(&y, wcfg).map_err(|e| e.in_stage("wpe"))?;
            scorer.score_grid("wpe", &d).map_err(|e| e.in_stage("metrics"))?;
            let (z, silent) = mwf(&d).map_err(|e| e.in_stage("mwf"))?;
            scorer.score_grid("mwf", &z).map_err(|e| e.in_stage("metrics"))?;
            (z, silent)
        }
    };
    let enhanced = istft(&out).map_err(|e| e.in_stage("istft"))?;

    let first = scorer.stages.first().cloned();
    let last = scorer.stages.last().cloned();
    let report = ClipReport {
        clip_id: String::new(),
        si_snr_in: first.as_ref().and_then(|s| s.si_snr),
        sdr_in: first.as_ref().and_then(|s| s.sdr),
        si_snr_out: last.as_ref().and_then(|s| s.si_snr),
        sdr_out: last.as_ref().and_then(|s| s.sdr),
        stages: scorer.stages,
        silent_bins,
    };
    Ok((enhanced, report))
}
