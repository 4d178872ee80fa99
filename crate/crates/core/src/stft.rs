//! Short-time Fourier analysis and weighted overlap-add synthesis.
//!
//! Frames use a periodic Hann window for both analysis and synthesis. The
//! signal is zero-padded with `window_len - hop` samples in front (so the first
//! sample is not only seen at the window's zero) and at the end until the last
//! frame is complete. Synthesis divides by the summed squared window, which
//! makes `istft(stft(x)) == x` for any hop that overlaps frames.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::fft::FftPlan;
use crate::{Error, Result};

/// Analysis window length used throughout the toolkit.
pub const DEFAULT_WINDOW_LEN: usize = 512;
/// Hop between frames used throughout the toolkit.
pub const DEFAULT_HOP: usize = 256;

/// Multichannel time-domain signal, `channels x length`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    channels: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(channels: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(first) = channels.first() {
            if channels.iter().any(|c| c.len() != first.len()) {
                return Err(Error::shape("channels have different lengths"));
            }
        }
        Ok(Waveform {
            channels,
            sample_rate,
        })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        Self::new(vec![samples], sample_rate)
    }

    pub fn zeros(channels: usize, len: usize, sample_rate: u32) -> Self {
        Waveform {
            channels: vec![vec![0.0; len]; channels],
            sample_rate,
        }
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channel(&self, k: usize) -> &[f64] {
        &self.channels[k]
    }

    pub fn channel_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.channels[k]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    /// Single-channel copy of channel `k`.
    pub fn select(&self, k: usize) -> Result<Waveform> {
        let ch = self.channels.get(k).ok_or(Error::ChannelOutOfRange {
            index: k,
            channels: self.channels.len(),
        })?;
        Ok(Waveform {
            channels: vec![ch.clone()],
            sample_rate: self.sample_rate,
        })
    }

    /// Keeps the first `len` samples of every channel, zero-extending if shorter.
    pub fn resized(&self, len: usize) -> Waveform {
        let channels = self
            .channels
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.resize(len, 0.0);
                c
            })
            .collect();
        Waveform {
            channels,
            sample_rate: self.sample_rate,
        }
    }

    /// Total energy summed over channels.
    pub fn energy(&self) -> f64 {
        self.channels.iter().flat_map(|c| c.iter()).map(|x| x * x).sum()
    }
}

/// Complex spectrogram, `channels x frames x bins`, last index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct TfGrid {
    channels: usize,
    frames: usize,
    bins: usize,
    window_len: usize,
    hop: usize,
    sample_rate: u32,
    signal_len: Option<usize>,
    data: Vec<Complex64>,
}

impl TfGrid {
    pub fn new(
        channels: usize,
        frames: usize,
        window_len: usize,
        hop: usize,
        sample_rate: u32,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        check_window(window_len, hop)?;
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        let bins = window_len / 2 + 1;
        if data.len() != channels * frames * bins {
            return Err(Error::shape(format!(
                "{} coefficients for {channels}x{frames}x{bins} grid",
                data.len()
            )));
        }
        Ok(TfGrid {
            channels,
            frames,
            bins,
            window_len,
            hop,
            sample_rate,
            signal_len: None,
            data,
        })
    }

    /// All-zero grid with the same geometry as `self` but `channels` channels.
    pub fn zeros_like(&self, channels: usize) -> TfGrid {
        TfGrid {
            channels,
            data: vec![Complex64::new(0.0, 0.0); channels * self.frames * self.bins],
            ..self.clone_header()
        }
    }

    fn clone_header(&self) -> TfGrid {
        TfGrid {
            data: Vec::new(),
            ..*self
        }
    }

    /// Records the time-domain length that [`istft`] trims its output to.
    pub fn with_signal_len(mut self, len: Option<usize>) -> Self {
        self.signal_len = len;
        self
    }

    pub fn num_channels(&self) -> usize {
        self.channels
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn signal_len(&self) -> Option<usize> {
        self.signal_len
    }

    /// `(channels, frames, bins)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.frames, self.bins)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn index(&self, k: usize, t: usize, f: usize) -> usize {
        (k * self.frames + t) * self.bins + f
    }

    #[inline]
    pub fn get(&self, k: usize, t: usize, f: usize) -> Complex64 {
        self.data[self.index(k, t, f)]
    }

    #[inline]
    pub fn set(&mut self, k: usize, t: usize, f: usize, v: Complex64) {
        let i = self.index(k, t, f);
        self.data[i] = v;
    }

    /// Frame `t` of channel `k`, all bins.
    pub fn frame(&self, k: usize, t: usize) -> &[Complex64] {
        let i = self.index(k, t, 0);
        &self.data[i..i + self.bins]
    }

    /// Single-channel copy of channel `k`.
    pub fn select(&self, k: usize) -> Result<TfGrid> {
        if k >= self.channels {
            return Err(Error::ChannelOutOfRange {
                index: k,
                channels: self.channels,
            });
        }
        let n = self.frames * self.bins;
        Ok(TfGrid {
            channels: 1,
            data: self.data[k * n..(k + 1) * n].to_vec(),
            ..self.clone_header()
        })
    }

    /// Spatial vector `y(t, f)` across channels.
    pub fn spatial(&self, t: usize, f: usize) -> Vec<Complex64> {
        (0..self.channels).map(|k| self.get(k, t, f)).collect()
    }

    /// `[channel][frame]` values of one frequency bin.
    pub fn bin_slices(&self, f: usize) -> Vec<Vec<Complex64>> {
        (0..self.channels)
            .map(|k| (0..self.frames).map(|t| self.get(k, t, f)).collect())
            .collect()
    }

    /// Inverse of [`TfGrid::bin_slices`]: builds a grid with this geometry from
    /// per-bin `[channel][frame]` blocks.
    pub fn from_bin_slices(&self, per_bin: &[Vec<Vec<Complex64>>]) -> Result<TfGrid> {
        if per_bin.len() != self.bins {
            return Err(Error::shape("bin count differs"));
        }
        let channels = per_bin.first().map_or(0, Vec::len);
        let mut out = self.zeros_like(channels);
        for (f, block) in per_bin.iter().enumerate() {
            if block.len() != channels || block.iter().any(|c| c.len() != self.frames) {
                return Err(Error::shape("inconsistent per-bin block"));
            }
            for (k, frames) in block.iter().enumerate() {
                for (t, &v) in frames.iter().enumerate() {
                    out.set(k, t, f, v);
                }
            }
        }
        Ok(out)
    }

    /// True when geometry (everything except channel count and data) matches.
    pub fn same_layout(&self, other: &TfGrid) -> bool {
        self.frames == other.frames
            && self.bins == other.bins
            && self.window_len == other.window_len
            && self.hop == other.hop
    }
}

fn check_window(window_len: usize, hop: usize) -> Result<()> {
    if window_len < 2 || !window_len.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "window length must be even and >= 2, got {window_len}"
        )));
    }
    if hop == 0 || hop > window_len {
        return Err(Error::invalid(format!(
            "hop must be in 1..={window_len}, got {hop}"
        )));
    }
    Ok(())
}

/// Periodic Hann window, `w[n] = 0.5 - 0.5 cos(2 pi n / N)`.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * libm::cos(2.0 * PI * n as f64 / len as f64))
        .collect()
}

/// Number of frames produced for a signal of `len` samples.
///
/// The signal is preceded by `window_len - hop` zeros and followed by enough
/// zeros that every sample, the last one included, lies under as many window
/// overlaps as an interior sample. Otherwise the final samples would be
/// normalized by a near-zero window sum and any processing of the last frame
/// would be amplified without bound.
pub fn frame_count(len: usize, window_len: usize, hop: usize) -> usize {
    (len + window_len - hop).div_ceil(hop).max(1)
}

/// One-sided STFT of every channel.
pub fn stft(x: &Waveform, window_len: usize, hop: usize) -> Result<TfGrid> {
    check_window(window_len, hop)?;
    let len = x.len();
    if x.num_channels() == 0 || len == 0 {
        return Err(Error::EmptySignal);
    }
    if len < window_len {
        return Err(Error::invalid(format!(
            "signal of {len} samples is shorter than the {window_len}-sample window"
        )));
    }
    let window = hann(window_len);
    let plan = FftPlan::new(window_len);
    let lead = window_len - hop;
    let frames = frame_count(len, window_len, hop);
    let bins = window_len / 2 + 1;
    let mut data = Vec::with_capacity(x.num_channels() * frames * bins);
    let mut buf = vec![Complex64::new(0.0, 0.0); window_len];
    for ch in x.channels() {
        for t in 0..frames {
            let start = t * hop;
            for (n, (b, w)) in buf.iter_mut().zip(&window).enumerate() {
                let p = start + n;
                let s = if p >= lead && p - lead < len {
                    ch[p - lead]
                } else {
                    0.0
                };
                *b = Complex64::new(s * w, 0.0);
            }
            plan.forward(&mut buf);
            data.extend_from_slice(&buf[..bins]);
        }
    }
    Ok(TfGrid {
        channels: x.num_channels(),
        frames,
        bins,
        window_len,
        hop,
        sample_rate: x.sample_rate(),
        signal_len: Some(len),
        data,
    })
}

/// Weighted overlap-add synthesis.
///
/// The output has `signal_len` samples when the grid carries one (grids from
/// [`stft`] do), otherwise every sample the frames cover after the front pad.
pub fn istft(g: &TfGrid) -> Result<Waveform> {
    check_window(g.window_len, g.hop)?;
    if g.bins != g.window_len / 2 + 1 {
        return Err(Error::shape(format!(
            "{} bins inconsistent with window length {}",
            g.bins, g.window_len
        )));
    }
    let n = g.window_len;
    let lead = n - g.hop;
    let padded = if g.frames == 0 {
        0
    } else {
        (g.frames - 1) * g.hop + n
    };
    let out_len = g.signal_len.unwrap_or(padded.saturating_sub(lead));
    let window = hann(n);
    let mut norm = vec![0.0; padded];
    for t in 0..g.frames {
        for (i, w) in window.iter().enumerate() {
            norm[t * g.hop + i] += w * w;
        }
    }
    let plan = FftPlan::new(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut channels = Vec::with_capacity(g.channels);
    for k in 0..g.channels {
        let mut acc = vec![0.0; padded];
        for t in 0..g.frames {
            let frame = g.frame(k, t);
            buf[..g.bins].copy_from_slice(frame);
            // Hermitian extension; DC and Nyquist imaginary parts are dropped by
            // taking the real part of the inverse.
            for f in 1..n / 2 {
                buf[n - f] = frame[f].conj();
            }
            plan.inverse(&mut buf);
            let start = t * g.hop;
            for (i, (b, w)) in buf.iter().zip(&window).enumerate() {
                acc[start + i] += b.re / n as f64 * w;
            }
        }
        let mut out = vec![0.0; out_len];
        for (i, o) in out.iter_mut().enumerate() {
            let p = i + lead;
            if p < padded && norm[p] > 1e-12 {
                *o = acc[p] / norm[p];
            }
        }
        channels.push(out);
    }
    Waveform::new(channels, g.sample_rate)
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig {
            window_len: DEFAULT_WINDOW_LEN,
            hop: DEFAULT_HOP,
        }
    }
}

/// Window/hop pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct StftConfig {
    pub window_len: usize,
    pub hop: usize,
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        check_window(self.window_len, self.hop)
    }

    pub fn analyze(&self, x: &Waveform) -> Result<TfGrid> {
        stft(x, self.window_len, self.hop)
    }
}
