//! Weighted prediction error (WPE) dereverberation.
//!
//! Late reverberation is predicted from a delayed window of past frames and
//! subtracted, independently in every frequency bin:
//!
//! ```text
//! d(t) = y(t) - G^H y~(t),   y~(t) = [y(t - delay), ..., y(t - delay - taps + 1)]
//! ```
//!
//! where `y~` stacks all channels of `taps` past frames. `G` solves the
//! variance-weighted normal equations
//!
//! ```text
//! (sum_t y~ y~^H / lambda(t)) G = sum_t y~ y^H / lambda(t)
//! ```
//!
//! and `lambda(t)` is the channel-averaged power of the current estimate `d`.
//! Estimation of `lambda` and `G` alternates for a fixed number of iterations,
//! starting from `d = y`. Frames before `delay` have an all-zero history and
//! pass through unchanged.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::linalg::{hermitian_solve, CMatrix, DEFAULT_LOADING};
use crate::par::map_indices;
use crate::stft::{istft, StftConfig, TfGrid, Waveform};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct WpeConfig {
    /// Prediction filter length in frames.
    pub taps: usize,
    /// Prediction delay in frames.
    pub delay: usize,
    pub iterations: usize,
    /// Weight of the current frame in the recursive smoothing of the power
    /// estimate: `lambda(t) = alpha p(t) + (1 - alpha) lambda(t - 1)`.
    pub alpha: f64,
    /// Relative diagonal loading of the normal equations.
    pub loading: f64,
}

impl Default for WpeConfig {
    fn default() -> Self {
        WpeConfig {
            taps: 10,
            delay: 3,
            iterations: 5,
            alpha: 0.9999,
            loading: DEFAULT_LOADING,
        }
    }
}

/// Power floor relative to the clip's mean power.
pub const VARIANCE_FLOOR: f64 = 1e-10;

impl WpeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.taps == 0 {
            return Err(Error::invalid("WPE needs at least one tap"));
        }
        if self.delay == 0 {
            return Err(Error::invalid("WPE delay must be at least one frame"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("WPE needs at least one iteration"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!(
                "WPE alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.loading >= 0.0) || !self.loading.is_finite() {
            return Err(Error::invalid("WPE loading must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Dereverberates every channel of `y`.
pub fn wpe(y: &TfGrid, cfg: &WpeConfig) -> Result<TfGrid> {
    cfg.validate()?;
    let required = cfg.delay + cfg.taps;
    if y.frames() <= required {
        return Err(Error::ClipTooShort {
            frames: y.frames(),
            required,
        });
    }
    let mean_power = y.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() / y.as_slice().len() as f64;
    if mean_power == 0.0 {
        return Ok(y.clone());
    }
    let floor = VARIANCE_FLOOR * mean_power;
    let per_bin = map_indices(y.bins(), |f| wpe_bin(&y.bin_slices(f), cfg, floor));
    let per_bin = per_bin.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(y.from_bin_slices(&per_bin)?.with_signal_len(y.signal_len()))
}

/// Time-domain convenience wrapper: STFT, [`wpe`], iSTFT.
pub fn wpe_waveform(x: &Waveform, stft: &StftConfig, cfg: &WpeConfig) -> Result<Waveform> {
    istft(&wpe(&stft.analyze(x)?, cfg)?)
}

/// WPE on one frequency bin; `y` is `[channel][frame]`.
pub fn wpe_bin(y: &[Vec<Complex64>], cfg: &WpeConfig, floor: f64) -> Result<Vec<Vec<Complex64>>> {
    let k = y.len();
    let frames = y.first().map_or(0, Vec::len);
    let dim = k * cfg.taps;
    let mut d = y.to_vec();

    // stacked history y~(t): tap-major, channel-minor
    let history = |t: usize, buf: &mut [Complex64]| {
        for tap in 0..cfg.taps {
            let lag = cfg.delay + tap;
            for c in 0..k {
                buf[tap * k + c] = if t >= lag {
                    y[c][t - lag]
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
        }
    };

    let mut lambda = vec![0.0; frames];
    let mut stacked = vec![Complex64::new(0.0, 0.0); dim];
    for _ in 0..cfg.iterations {
        let mut smoothed = 0.0;
        for t in 0..frames {
            let p = d.iter().map(|ch| ch[t].norm_sqr()).sum::<f64>() / k as f64;
            smoothed = if t == 0 {
                p
            } else {
                cfg.alpha * p + (1.0 - cfg.alpha) * smoothed
            };
            lambda[t] = smoothed.max(floor);
        }

        let mut corr = CMatrix::zeros(dim, dim);
        let mut cross = CMatrix::zeros(dim, k);
        for t in cfg.delay..frames {
            history(t, &mut stacked);
            let inv = 1.0 / lambda[t];
            for i in 0..dim {
                let a = stacked[i] * inv;
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in i..dim {
                    corr[(i, j)] += a * stacked[j].conj();
                }
                for c in 0..k {
                    cross[(i, c)] += a * y[c][t].conj();
                }
            }
        }
        if corr.trace().re == 0.0 {
            // no history energy at all: nothing to predict
            return Ok(d);
        }
        for i in 0..dim {
            corr[(i, i)] = Complex64::new(corr[(i, i)].re, 0.0);
            for j in i + 1..dim {
                corr[(j, i)] = corr[(i, j)].conj();
            }
        }
        let g = hermitian_solve(&corr, &cross, cfg.loading)?;

        for t in 0..frames {
            history(t, &mut stacked);
            for c in 0..k {
                let pred: Complex64 = (0..dim).map(|i| g[(i, c)].conj() * stacked[i]).sum();
                d[c][t] = y[c][t] - pred;
            }
        }
    }
    Ok(d)
}
