//! Shoebox room impulse responses by the image-source method.
//!
//! Rooms are drawn at random from two profiles. Both use lengths in
//! `[3, 8]` m, widths in `[3, 5]` m and heights in `[2, 3]` m; the training
//! profile draws the RT60 uniformly from `[0.2, 0.6]` s while the evaluation
//! profile fixes it at 0.4 s. Sources stay 1.5 m and microphones 1 m away from
//! the four walls.
//!
//! Walls share one frequency-independent absorption coefficient obtained by
//! inverting Sabine's formula `RT60 = 0.161 V / (S alpha)`. Every image source
//! within `1.5 * RT60` of propagation contributes `beta^r / (4 pi d)` with
//! `beta = sqrt(1 - alpha)` and `r` the number of wall reflections, rendered
//! at its fractional delay by an 81-tap Hann-windowed sinc.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::par::map_indices;
use crate::stft::Waveform;
use crate::{Error, Result, DEFAULT_SAMPLE_RATE};

pub const SPEED_OF_SOUND: f64 = 343.0;
/// Taps of the fractional-delay interpolator.
pub const SINC_TAPS: usize = 81;
/// RIR duration as a multiple of the target RT60.
pub const RIR_LENGTH_FACTOR: f64 = 1.5;
pub const MAX_PLACEMENT_RETRIES: usize = 1000;

pub const LENGTH_RANGE: (f64, f64) = (3.0, 8.0);
pub const WIDTH_RANGE: (f64, f64) = (3.0, 5.0);
pub const HEIGHT_RANGE: (f64, f64) = (2.0, 3.0);
pub const TRAIN_RT60_RANGE: (f64, f64) = (0.2, 0.6);
pub const EVAL_RT60: f64 = 0.4;
pub const SOURCE_WALL_DISTANCE: f64 = 1.5;
pub const MIC_WALL_DISTANCE: f64 = 1.0;
/// Clearance from floor and ceiling for every source and microphone.
pub const VERTICAL_CLEARANCE: f64 = 0.5;
/// Smallest allowed source-to-microphone distance.
pub const MIN_SOURCE_MIC_DISTANCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum RoomProfile {
    Train,
    Eval,
}

/// Rigid microphone array: `mics` microphones on a line, `spacing` apart.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ArrayGeometry {
    pub mics: usize,
    pub spacing: f64,
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        ArrayGeometry {
            mics: 4,
            spacing: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct RoomSpec {
    /// Length, width, height in meters.
    pub dimensions: [f64; 3],
    pub rt60_target: f64,
    pub source_position: [f64; 3],
    /// Position of the interfering noise source, if any.
    #[cfg_attr(feature = "serde", serde(default))]
    pub noise_position: Option<[f64; 3]>,
    pub mic_positions: Vec<[f64; 3]>,
    pub sample_rate: u32,
    pub seed: u64,
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    libm::sqrt((0..3).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum())
}

fn wall_distance(p: &[f64; 3], dims: &[f64; 3]) -> f64 {
    p[0].min(dims[0] - p[0]).min(p[1]).min(dims[1] - p[1])
}

fn strictly_inside(p: &[f64; 3], dims: &[f64; 3]) -> bool {
    (0..3).all(|i| p[i] > 0.0 && p[i] < dims[i])
}

impl RoomSpec {
    pub fn volume(&self) -> f64 {
        self.dimensions.iter().product()
    }

    pub fn surface_area(&self) -> f64 {
        let [l, w, h] = self.dimensions;
        2.0 * (l * w + l * h + w * h)
    }

    /// Checks the geometric invariants: positive dimensions, every position
    /// strictly inside, wall distances, and no source on top of a microphone.
    pub fn validate(&self) -> Result<()> {
        let dims = &self.dimensions;
        if dims.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::invalid("room dimensions must be positive"));
        }
        if !(self.rt60_target > 0.0) || !self.rt60_target.is_finite() {
            return Err(Error::invalid("RT60 target must be positive"));
        }
        if self.sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if self.mic_positions.is_empty() {
            return Err(Error::invalid("room has no microphones"));
        }
        let sources = core::iter::once(&self.source_position).chain(self.noise_position.iter());
        for s in sources {
            if !strictly_inside(s, dims) {
                return Err(Error::invalid(format!("source {s:?} outside the room")));
            }
            if self.mic_positions.iter().any(|m| distance(m, s) == 0.0) {
                return Err(Error::invalid("source coincides with a microphone"));
            }
        }
        if let Some(m) = self.mic_positions.iter().find(|m| !strictly_inside(m, dims)) {
            return Err(Error::invalid(format!("microphone {m:?} outside the room")));
        }
        Ok(())
    }

    /// True when the placement rules of the sampling profiles hold.
    pub fn meets_placement_rules(&self) -> bool {
        let dims = &self.dimensions;
        let vertical_ok =
            |p: &[f64; 3]| p[2] >= VERTICAL_CLEARANCE - 1e-12 && p[2] <= dims[2] - VERTICAL_CLEARANCE + 1e-12;
        let sources: Vec<&[f64; 3]> = core::iter::once(&self.source_position)
            .chain(self.noise_position.iter())
            .collect();
        sources.iter().all(|s| {
            wall_distance(s, dims) >= SOURCE_WALL_DISTANCE - 1e-12
                && vertical_ok(s)
                && self
                    .mic_positions
                    .iter()
                    .all(|m| distance(m, s) >= MIN_SOURCE_MIC_DISTANCE)
        }) && self
            .mic_positions
            .iter()
            .all(|m| wall_distance(m, dims) >= MIC_WALL_DISTANCE - 1e-12 && vertical_ok(m))
    }
}

/// Draws a room for `profile` with the default 4-microphone array.
pub fn sample_room(seed: u64, profile: RoomProfile) -> Result<RoomSpec> {
    sample_room_with(seed, profile, &ArrayGeometry::default())
}

pub fn sample_room_with(seed: u64, profile: RoomProfile, array: &ArrayGeometry) -> Result<RoomSpec> {
    if array.mics == 0 || !(array.spacing >= 0.0) {
        return Err(Error::invalid(
            "array needs at least one microphone and spacing >= 0",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| {
        if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        }
    };
    let dimensions = [
        uniform(&mut rng, LENGTH_RANGE),
        uniform(&mut rng, WIDTH_RANGE),
        uniform(&mut rng, HEIGHT_RANGE),
    ];
    let rt60_target = match profile {
        RoomProfile::Train => uniform(&mut rng, TRAIN_RT60_RANGE),
        RoomProfile::Eval => EVAL_RT60,
    };
    let [l, w, h] = dimensions;
    let span = array.spacing * (array.mics - 1) as f64;
    for _ in 0..MAX_PLACEMENT_RETRIES {
        let source = |rng: &mut ChaCha8Rng| {
            [
                uniform(rng, (SOURCE_WALL_DISTANCE, l - SOURCE_WALL_DISTANCE)),
                uniform(rng, (SOURCE_WALL_DISTANCE, w - SOURCE_WALL_DISTANCE)),
                uniform(rng, (VERTICAL_CLEARANCE, h - VERTICAL_CLEARANCE)),
            ]
        };
        let source_position = source(&mut rng);
        let noise_position = source(&mut rng);
        let center = [
            uniform(&mut rng, (MIC_WALL_DISTANCE, l - MIC_WALL_DISTANCE)),
            uniform(&mut rng, (MIC_WALL_DISTANCE, w - MIC_WALL_DISTANCE)),
            uniform(&mut rng, (VERTICAL_CLEARANCE, h - VERTICAL_CLEARANCE)),
        ];
        let azimuth = rng.random_range(0.0..2.0 * PI);
        let (dx, dy) = (libm::cos(azimuth), libm::sin(azimuth));
        let mic_positions = (0..array.mics)
            .map(|i| {
                let off = i as f64 * array.spacing - span / 2.0;
                [center[0] + off * dx, center[1] + off * dy, center[2]]
            })
            .collect();
        let room = RoomSpec {
            dimensions,
            rt60_target,
            source_position,
            noise_position: Some(noise_position),
            mic_positions,
            sample_rate: DEFAULT_SAMPLE_RATE,
            seed,
        };
        if room.meets_placement_rules() && room.validate().is_ok() {
            return Ok(room);
        }
    }
    Err(Error::InfeasibleGeometry {
        retries: MAX_PLACEMENT_RETRIES,
    })
}

/// Uniform wall absorption reaching the target RT60 by Sabine's formula.
pub fn rt60_to_absorption(room: &RoomSpec) -> Result<f64> {
    if room.dimensions.iter().any(|d| !(*d > 0.0)) || !(room.rt60_target > 0.0) {
        return Err(Error::invalid("room dimensions and RT60 must be positive"));
    }
    let alpha = 0.161 * room.volume() / (room.surface_area() * room.rt60_target);
    if alpha > 1.0 {
        return Err(Error::InfeasibleAbsorption { alpha });
    }
    Ok(alpha)
}

/// Impulse responses, one per microphone.
#[derive(Debug, Clone, PartialEq)]
pub struct Rir {
    taps: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl Rir {
    pub fn new(taps: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self> {
        if taps.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite RIR tap"));
        }
        Waveform::new(taps.clone(), sample_rate)?;
        Ok(Rir { taps, sample_rate })
    }

    pub fn num_mics(&self) -> usize {
        self.taps.len()
    }

    pub fn len(&self) -> usize {
        self.taps.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn mic(&self, k: usize) -> &[f64] {
        &self.taps[k]
    }

    pub fn taps(&self) -> &[Vec<f64>] {
        &self.taps
    }

    pub fn to_waveform(&self) -> Waveform {
        Waveform::new(self.taps.clone(), self.sample_rate).expect("validated on construction")
    }

    /// Keeps taps up to `len` samples, e.g. to split direct+early from late.
    pub fn truncated(&self, len: usize) -> Rir {
        Rir {
            taps: self.taps.iter().map(|t| t[..len.min(t.len())].to_vec()).collect(),
            sample_rate: self.sample_rate,
        }
    }
}

impl TryFrom<Waveform> for Rir {
    type Error = Error;
    fn try_from(w: Waveform) -> Result<Rir> {
        let fs = w.sample_rate();
        Rir::new(w.into_channels(), fs)
    }
}

/// RIR from the speech source to every microphone.
pub fn simulate_rir(room: &RoomSpec) -> Result<Rir> {
    simulate_rir_from(room, &room.source_position)
}

/// RIR from the noise source; falls back to the speech source when the room
/// has none.
pub fn simulate_noise_rir(room: &RoomSpec) -> Result<Rir> {
    simulate_rir_from(
        room,
        room.noise_position.as_ref().unwrap_or(&room.source_position),
    )
}

/// RIR from an arbitrary source position inside `room`.
pub fn simulate_rir_from(room: &RoomSpec, source: &[f64; 3]) -> Result<Rir> {
    room.validate()?;
    let alpha = rt60_to_absorption(room)?;
    let beta = libm::sqrt(1.0 - alpha);
    let fs = room.sample_rate as f64;
    let len = libm::ceil(RIR_LENGTH_FACTOR * room.rt60_target * fs) as usize;
    let max_dist = len as f64 / fs * SPEED_OF_SOUND;
    let taps = map_indices(room.mic_positions.len(), |k| {
        render_images(
            &room.dimensions,
            source,
            &room.mic_positions[k],
            beta,
            len,
            max_dist,
            fs,
        )
    });
    Rir::new(taps, room.sample_rate)
}

/// Offsets between image sources and the microphone along one axis, with the
/// number of reflections each image implies.
fn axis_images(size: f64, src: f64, mic: f64, max_dist: f64) -> Vec<(f64, u32)> {
    let n_max = libm::ceil(max_dist / (2.0 * size)) as i64 + 1;
    let mut out = Vec::new();
    for n in -n_max..=n_max {
        for q in 0..=1i64 {
            let pos = (1 - 2 * q) as f64 * src + 2.0 * n as f64 * size;
            let off = pos - mic;
            if off.abs() <= max_dist {
                out.push((off, ((n - q).abs() + n.abs()) as u32));
            }
        }
    }
    out
}

fn render_images(
    dims: &[f64; 3],
    src: &[f64; 3],
    mic: &[f64; 3],
    beta: f64,
    len: usize,
    max_dist: f64,
    fs: f64,
) -> Vec<f64> {
    let xs = axis_images(dims[0], src[0], mic[0], max_dist);
    let ys = axis_images(dims[1], src[1], mic[1], max_dist);
    let zs = axis_images(dims[2], src[2], mic[2], max_dist);
    let max_order = 3 * (xs.iter().chain(&ys).chain(&zs).map(|p| p.1).max().unwrap_or(0) as usize) + 1;
    let mut gain = vec![1.0; max_order];
    for i in 1..max_order {
        gain[i] = gain[i - 1] * beta;
    }
    let half = (SINC_TAPS / 2) as i64;
    // Hann window reaching zero one sample beyond the outermost tap; its
    // argument pi (m - frac) / width is expanded so only frac needs a libm call
    let window_width = half as f64 + 1.0;
    let tap_angle: Vec<(f64, f64)> = (-half..=half)
        .map(|m| {
            let a = PI * m as f64 / window_width;
            (libm::cos(a), libm::sin(a))
        })
        .collect();
    let max_d2 = max_dist * max_dist;
    let mut h = vec![0.0; len];
    for &(dx, rx) in &xs {
        let dx2 = dx * dx;
        for &(dy, ry) in &ys {
            let dxy2 = dx2 + dy * dy;
            if dxy2 > max_d2 {
                continue;
            }
            for &(dz, rz) in &zs {
                let d2 = dxy2 + dz * dz;
                if d2 > max_d2 {
                    continue;
                }
                let g = gain[(rx + ry + rz) as usize];
                if g == 0.0 {
                    continue;
                }
                let d = libm::sqrt(d2);
                let amp = g / (4.0 * PI * d);
                let delay = d / SPEED_OF_SOUND * fs;
                let center = libm::floor(delay) as i64;
                let frac = delay - center as f64;
                // sin(pi (m - frac)) = (-1)^(m+1) sin(pi frac)
                let s = libm::sin(PI * frac);
                let (cf, sf) = (
                    libm::cos(PI * frac / window_width),
                    libm::sin(PI * frac / window_width),
                );
                let lo = (-half).max(-center);
                let hi = half.min(len as i64 - 1 - center);
                for m in lo..=hi {
                    let tau = m as f64 - frac;
                    let sinc = if tau.abs() < 1e-12 {
                        1.0
                    } else {
                        let sign = if m % 2 == 0 { -1.0 } else { 1.0 };
                        sign * s / (PI * tau)
                    };
                    let w = if tau.abs() >= window_width {
                        0.0
                    } else {
                        let (cm, sm) = tap_angle[(m + half) as usize];
                        0.5 * (1.0 + cm * cf + sm * sf)
                    };
                    h[(center + m) as usize] += amp * sinc * w;
                }
            }
        }
    }
    highpass(&mut h, RIR_HIGHPASS_HZ, fs);
    h
}

/// Cut-off of the DC-blocking high-pass applied to every rendered RIR.
///
/// All image amplitudes are positive, so without it the dense late tail adds
/// up coherently at DC and decays far slower than the reflection losses imply.
pub const RIR_HIGHPASS_HZ: f64 = 20.0;

/// Second-order Butterworth high-pass (bilinear transform), in place.
fn highpass(x: &mut [f64], cutoff: f64, fs: f64) {
    let w0 = 2.0 * PI * cutoff / fs;
    let (cw, sw) = (libm::cos(w0), libm::sin(w0));
    let q = core::f64::consts::FRAC_1_SQRT_2;
    let alpha = sw / (2.0 * q);
    let a0 = 1.0 + alpha;
    let b0 = (1.0 + cw) / 2.0 / a0;
    let b1 = -(1.0 + cw) / a0;
    let b2 = b0;
    let a1 = -2.0 * cw / a0;
    let a2 = (1.0 - alpha) / a0;
    let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
    for v in x.iter_mut() {
        let x0 = *v;
        let y0 = b0 * x0 + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
        x2 = x1;
        x1 = x0;
        y2 = y1;
        y1 = y0;
        *v = y0;
    }
}

/// Direct-path delay from `source` to microphone `k`, in samples.
pub fn direct_delay_samples(room: &RoomSpec, source: &[f64; 3], k: usize) -> f64 {
    distance(source, &room.mic_positions[k]) / SPEED_OF_SOUND * room.sample_rate as f64
}

/// RT60 measured on an impulse response by Schroeder backward integration and
/// a least-squares line through the -5 dB to -25 dB part of the decay curve,
/// extrapolated to 60 dB. `None` if the curve never drops 25 dB.
pub fn schroeder_rt60(h: &[f64], sample_rate: u32) -> Option<f64> {
    let edc = schroeder_curve(h);
    let total = *edc.first()?;
    if !(total > 0.0) {
        return None;
    }
    let db: Vec<f64> = edc.iter().map(|e| 10.0 * libm::log10(e / total)).collect();
    let start = db.iter().position(|&v| v <= -5.0)?;
    let end = db.iter().position(|&v| v <= -25.0)?;
    if end <= start + 1 {
        return None;
    }
    let fs = sample_rate as f64;
    let n = (end - start + 1) as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for (i, &v) in db[start..=end].iter().enumerate() {
        let t = (start + i) as f64 / fs;
        st += t;
        sy += v;
        stt += t * t;
        sty += t * v;
    }
    let slope = (n * sty - st * sy) / (n * stt - st * st);
    if !(slope < 0.0) {
        return None;
    }
    Some(-60.0 / slope)
}

/// Backward-integrated energy `E(t) = sum_{n >= t} h[n]^2`.
pub fn schroeder_curve(h: &[f64]) -> Vec<f64> {
    let mut edc = vec![0.0; h.len()];
    let mut acc = 0.0;
    for (e, x) in edc.iter_mut().zip(h).rev() {
        acc += x * x;
        *e = acc;
    }
    edc
}
