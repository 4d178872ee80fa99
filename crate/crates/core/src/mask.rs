//! Speech and noise ratio masks.
//!
//! Given magnitude estimates of the speech `|s|` and noise `|n|` in every
//! time-frequency bin, the masks share one denominator:
//!
//! ```text
//! M_s = |s| / (|s| + max(|n|, eps))
//! M_n = |n| / (|s| + max(|n|, eps))
//! ```
//!
//! so `M_s + M_n = 1` wherever `|n| >= eps`. The estimates come either from a
//! separation front end (loaded from files by the `farfield` crate) or, in
//! oracle mode, from the ground-truth speech and noise images.

use alloc::format;
use alloc::vec::Vec;

use crate::stft::TfGrid;
use crate::{Error, Result};

/// Floor on the noise magnitude in the mask denominator.
pub const DEFAULT_EPSILON: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskEpsilon(f64);

impl MaskEpsilon {
    pub fn new(epsilon: f64) -> Result<Self> {
        if epsilon > 0.0 && epsilon.is_finite() {
            Ok(MaskEpsilon(epsilon))
        } else {
            Err(Error::invalid(format!("mask epsilon must be > 0, got {epsilon}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for MaskEpsilon {
    fn default() -> Self {
        MaskEpsilon(DEFAULT_EPSILON)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MaskKind {
    Speech,
    Noise,
}

/// Real gains in `[0, 1]`, `frames x bins`, bins fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    frames: usize,
    bins: usize,
    kind: MaskKind,
    gains: Vec<f64>,
}

impl Mask {
    pub fn new(frames: usize, bins: usize, kind: MaskKind, gains: Vec<f64>) -> Result<Self> {
        if gains.len() != frames * bins {
            return Err(Error::shape(format!(
                "{} gains for a {frames}x{bins} mask",
                gains.len()
            )));
        }
        if let Some(bad) = gains.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(Error::invalid(format!("mask gain {bad} outside [0, 1]")));
        }
        Ok(Mask {
            frames,
            bins,
            kind,
            gains,
        })
    }

    /// Builds a mask after clamping every gain into `[0, 1]`; NaN becomes 0.
    /// Returns the mask and the number of values that had to be changed.
    pub fn clamped(frames: usize, bins: usize, kind: MaskKind, mut gains: Vec<f64>) -> Result<(Self, usize)> {
        let mut changed = 0;
        for g in gains.iter_mut() {
            let c = if g.is_nan() { 0.0 } else { g.clamp(0.0, 1.0) };
            if c != *g || g.is_nan() {
                changed += 1;
                *g = c;
            }
        }
        Ok((Self::new(frames, bins, kind, gains)?, changed))
    }

    pub fn filled(frames: usize, bins: usize, kind: MaskKind, value: f64) -> Result<Self> {
        Self::new(frames, bins, kind, alloc::vec![value; frames * bins])
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn kind(&self) -> MaskKind {
        self.kind
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    #[inline]
    pub fn get(&self, t: usize, f: usize) -> f64 {
        self.gains[t * self.bins + f]
    }

    /// True when the mask matches the `(frames, bins)` plane of `grid`.
    pub fn fits(&self, grid: &TfGrid) -> bool {
        self.frames == grid.frames() && self.bins == grid.bins()
    }
}

/// Speech and noise masks from single-channel estimates.
pub fn masks_from_estimates(s_hat: &TfGrid, n_hat: &TfGrid, eps: MaskEpsilon) -> Result<(Mask, Mask)> {
    if s_hat.num_channels() != 1 || n_hat.num_channels() != 1 {
        return Err(Error::shape("mask estimates must be single-channel"));
    }
    if s_hat.shape() != n_hat.shape() {
        return Err(Error::shape(format!(
            "speech estimate {:?} vs noise estimate {:?}",
            s_hat.shape(),
            n_hat.shape()
        )));
    }
    let eps = eps.get();
    let (speech, noise): (Vec<f64>, Vec<f64>) = s_hat
        .as_slice()
        .iter()
        .zip(n_hat.as_slice())
        .map(|(s, n)| {
            let s = s.norm();
            let n = n.norm();
            let denom = s + n.max(eps);
            if n < eps {
                (s / denom, n / denom)
            } else if s <= n {
                // the denominator is exactly |s| + |n| here; taking the larger
                // gain as the complement makes M_s + M_n == 1.0 in floating point
                let ms = s / denom;
                (ms, 1.0 - ms)
            } else {
                let mn = n / denom;
                (1.0 - mn, mn)
            }
        })
        .unzip();
    let (t, f) = (s_hat.frames(), s_hat.bins());
    Ok((
        Mask::new(t, f, MaskKind::Speech, speech)?,
        Mask::new(t, f, MaskKind::Noise, noise)?,
    ))
}

/// Oracle stand-in for a separation front end: the reference-channel slices
/// of the ground-truth speech and noise images.
pub fn oracle_estimates(
    mix: &TfGrid,
    speech_image: &TfGrid,
    noise_image: &TfGrid,
    reference_channel: usize,
) -> Result<(TfGrid, TfGrid)> {
    if mix.shape() != speech_image.shape() || mix.shape() != noise_image.shape() {
        return Err(Error::shape(format!(
            "mixture {:?}, speech {:?}, noise {:?}",
            mix.shape(),
            speech_image.shape(),
            noise_image.shape()
        )));
    }
    Ok((
        speech_image.select(reference_channel)?,
        noise_image.select(reference_channel)?,
    ))
}
