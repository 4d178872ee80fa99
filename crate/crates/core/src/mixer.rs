//! Reverberant speech + noise mixtures at a target SNR.
//!
//! Dry speech and dry noise are convolved with the room's speech and noise
//! RIRs; the noise image is then scaled so that the reference-channel power
//! ratio of the two images hits the requested SNR. Speech keeps unit gain.
//!
//! Images are rounded to `f32` and the mixture is their `f32` sum, so the
//! identity `mixture == speech_image + noise_image` holds bit for bit in the
//! float32 files the corpus is stored in.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fft::convolve_real;
use crate::room::{simulate_noise_rir, simulate_rir, Rir, RoomSpec};
use crate::stft::Waveform;
use crate::{Error, Result};

/// Default truncation of dry speech, seconds.
pub const DEFAULT_TRUNCATE_S: f64 = 10.0;

/// Full linear convolution of a mono signal with every microphone's RIR.
pub fn convolve(dry: &Waveform, rir: &Rir) -> Result<Waveform> {
    if dry.num_channels() != 1 {
        return Err(Error::shape(format!(
            "dry signal must be mono, got {} channels",
            dry.num_channels()
        )));
    }
    if dry.sample_rate() != rir.sample_rate() {
        return Err(Error::RateMismatch {
            expected: rir.sample_rate(),
            found: dry.sample_rate(),
        });
    }
    let x = dry.channel(0);
    let channels = rir.taps().iter().map(|h| convolve_real(x, h)).collect();
    Waveform::new(channels, dry.sample_rate())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureBundle {
    pub mixture: Waveform,
    pub speech_image: Waveform,
    pub noise_image: Waveform,
    pub snr_db: f64,
    pub achieved_snr_db: f64,
    /// Gain applied to the noise image before mixing.
    pub noise_gain: f64,
}

fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Reference-channel SNR of two images, dB.
pub fn snr_db(speech: &[f64], noise: &[f64]) -> f64 {
    10.0 * libm::log10(mean_power(speech) / mean_power(noise))
}

fn to_f32_grid(x: f64) -> f64 {
    x as f32 as f64
}

/// Scales the noise image to reach `snr_db` on channel 0.
pub fn mix_at_snr(speech_image: &Waveform, noise_image: &Waveform, snr_db: f64) -> Result<MixtureBundle> {
    mix_at_snr_on(speech_image, noise_image, snr_db, 0)
}

/// Scales the noise image to reach `snr_db` on `reference_channel`.
pub fn mix_at_snr_on(
    speech_image: &Waveform,
    noise_image: &Waveform,
    target_db: f64,
    reference_channel: usize,
) -> Result<MixtureBundle> {
    if !target_db.is_finite() {
        return Err(Error::invalid("target SNR must be finite"));
    }
    if speech_image.num_channels() != noise_image.num_channels() || speech_image.len() != noise_image.len() {
        return Err(Error::shape(format!(
            "speech image {}x{} vs noise image {}x{}",
            speech_image.num_channels(),
            speech_image.len(),
            noise_image.num_channels(),
            noise_image.len()
        )));
    }
    if speech_image.sample_rate() != noise_image.sample_rate() {
        return Err(Error::RateMismatch {
            expected: speech_image.sample_rate(),
            found: noise_image.sample_rate(),
        });
    }
    if reference_channel >= speech_image.num_channels() {
        return Err(Error::ChannelOutOfRange {
            index: reference_channel,
            channels: speech_image.num_channels(),
        });
    }
    let fs = speech_image.sample_rate();
    let speech: Vec<Vec<f64>> = speech_image
        .channels()
        .iter()
        .map(|c| c.iter().map(|&x| to_f32_grid(x)).collect())
        .collect();
    let p_s = mean_power(&speech[reference_channel]);
    let p_n = mean_power(noise_image.channel(reference_channel));
    if !(p_s > 0.0) {
        return Err(Error::SilentSignal("speech"));
    }
    if !(p_n > 0.0) {
        return Err(Error::SilentSignal("noise"));
    }
    let noise_gain = libm::sqrt(p_s / (p_n * libm::pow(10.0, target_db / 10.0)));
    let noise: Vec<Vec<f64>> = noise_image
        .channels()
        .iter()
        .map(|c| c.iter().map(|&x| to_f32_grid(x * noise_gain)).collect())
        .collect();
    let mixture: Vec<Vec<f64>> = speech
        .iter()
        .zip(&noise)
        .map(|(s, n)| {
            s.iter()
                .zip(n)
                .map(|(&a, &b)| (a as f32 + b as f32) as f64)
                .collect()
        })
        .collect();
    let achieved_snr_db = snr_db(&speech[reference_channel], &noise[reference_channel]);
    if !achieved_snr_db.is_finite() {
        return Err(Error::SilentSignal("noise"));
    }
    Ok(MixtureBundle {
        mixture: Waveform::new(mixture, fs)?,
        speech_image: Waveform::new(speech, fs)?,
        noise_image: Waveform::new(noise, fs)?,
        snr_db: target_db,
        achieved_snr_db,
        noise_gain,
    })
}

/// Brings a noise recording to `len` samples: longer recordings are cropped
/// at a random offset, shorter ones are looped from a random circular offset.
pub fn fit_noise(noise: &[f64], len: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if noise.is_empty() {
        return Err(Error::EmptySignal);
    }
    if noise.len() >= len {
        let start = rng.random_range(0..=noise.len() - len);
        return Ok(noise[start..start + len].to_vec());
    }
    let offset = rng.random_range(0..noise.len());
    Ok((0..len).map(|i| noise[(offset + i) % noise.len()]).collect())
}

/// Dry inputs and parameters of one mixture.
#[derive(Debug, Clone, Copy)]
pub struct MixRequest<'a> {
    pub speech: &'a Waveform,
    pub noise: &'a Waveform,
    pub room: &'a RoomSpec,
    pub snr_db: f64,
    /// Seeds the noise crop/loop offset.
    pub seed: u64,
    /// Dry speech is cut to this many seconds first.
    pub truncate_s: f64,
    pub reference_channel: usize,
}

/// Truncates the speech, fits the noise to it, convolves both with their RIRs
/// and mixes at the requested SNR.
pub fn render_mixture(req: &MixRequest<'_>) -> Result<MixtureBundle> {
    let fs = req.room.sample_rate;
    for w in [req.speech, req.noise] {
        if w.sample_rate() != fs {
            return Err(Error::RateMismatch {
                expected: fs,
                found: w.sample_rate(),
            });
        }
        if w.num_channels() != 1 {
            return Err(Error::shape("dry speech and noise must be mono"));
        }
    }
    if !(req.truncate_s > 0.0) {
        return Err(Error::invalid("truncation must be positive"));
    }
    let max_len = libm::round(req.truncate_s * fs as f64) as usize;
    let speech = Waveform::mono(
        req.speech.channel(0)[..req.speech.len().min(max_len)].to_vec(),
        fs,
    )?;
    if speech.is_empty() {
        return Err(Error::EmptySignal);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let noise = Waveform::mono(fit_noise(req.noise.channel(0), speech.len(), &mut rng)?, fs)?;
    let speech_image = convolve(&speech, &simulate_rir(req.room)?)?;
    let noise_image = convolve(&noise, &simulate_noise_rir(req.room)?)?;
    mix_at_snr_on(&speech_image, &noise_image, req.snr_db, req.reference_channel)
}

/// Per-microphone RIR keeping everything up to `early_s` seconds after the
/// direct-path arrival; the rest is zeroed. `direct_delays` holds the arrival
/// of each microphone in samples (see [`crate::room::direct_delay_samples`]).
pub fn early_part(rir: &Rir, direct_delays: &[f64], early_s: f64) -> Result<Rir> {
    if direct_delays.len() != rir.num_mics() {
        return Err(Error::shape(format!(
            "{} direct delays for {} microphones",
            direct_delays.len(),
            rir.num_mics()
        )));
    }
    let fs = rir.sample_rate() as f64;
    let taps = rir
        .taps()
        .iter()
        .zip(direct_delays)
        .map(|(h, &d)| {
            let cut = (libm::round(d + early_s * fs).max(0.0) as usize + 1).min(h.len());
            let mut out = h.clone();
            out[cut..].iter_mut().for_each(|x| *x = 0.0);
            out
        })
        .collect();
    Rir::new(taps, rir.sample_rate())
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use alloc::vec;

    fn mono(x: Vec<f64>) -> Waveform {
        Waveform::mono(x, 16000).unwrap()
    }

    #[test]
    fn unit_impulse_is_identity() {
        let x = mono(vec![0.5, -1.0, 0.25, 2.0]);
        let rir = Rir::new(vec![vec![1.0]], 16000).unwrap();
        let y = convolve(&x, &rir).unwrap();
        for (a, b) in y.channel(0).iter().zip(x.channel(0)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn delayed_impulse_shifts() {
        let x = mono(vec![1.0, 2.0, 3.0]);
        let rir = Rir::new(vec![vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]], 16000).unwrap();
        let y = convolve(&x, &rir).unwrap();
        assert_eq!(y.len(), 5);
        let expect = [[0.0, 0.0, 1.0, 2.0, 3.0], [1.0, 2.0, 3.0, 0.0, 0.0]];
        for k in 0..2 {
            for (a, b) in y.channel(k).iter().zip(&expect[k]) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rate_mismatch() {
        let x = Waveform::mono(vec![1.0], 8000).unwrap();
        let rir = Rir::new(vec![vec![1.0]], 16000).unwrap();
        assert_eq!(
            convolve(&x, &rir),
            Err(Error::RateMismatch {
                expected: 16000,
                found: 8000
            })
        );
    }

    #[test]
    fn equal_power_at_zero_db() {
        let s = mono(vec![1.0, -1.0, 1.0, -1.0]);
        let n = mono(vec![1.0, 1.0, -1.0, -1.0]);
        // both have mean power 1
        let b = mix_at_snr(&s, &n, 0.0).unwrap();
        assert_eq!(b.noise_gain, 1.0);
        assert_eq!(b.mixture.channel(0), &[2.0, 0.0, 0.0, -2.0]);
        assert!(b.achieved_snr_db.abs() < 1e-12);
    }

    #[test]
    fn twenty_db_scales_noise_by_a_tenth() {
        let s = mono(vec![1.0, -1.0, 1.0, -1.0]);
        let n = mono(vec![1.0, 1.0, -1.0, -1.0]);
        let b = mix_at_snr(&s, &n, 20.0).unwrap();
        assert!((b.noise_gain - 0.1).abs() < 1e-15);
        assert!((b.achieved_snr_db - 20.0).abs() < 1e-5);
    }

    #[test]
    fn silent_noise_is_error() {
        let s = mono(vec![1.0, -1.0]);
        let z = mono(vec![0.0, 0.0]);
        assert_eq!(mix_at_snr(&s, &z, 5.0), Err(Error::SilentSignal("noise")));
        assert_eq!(mix_at_snr(&z, &s, 5.0), Err(Error::SilentSignal("speech")));
    }

    #[test]
    fn noise_fitting_crops_and_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noise: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let cropped = fit_noise(&noise, 4, &mut rng).unwrap();
        assert_eq!(cropped.len(), 4);
        assert!(cropped.windows(2).all(|w| w[1] == w[0] + 1.0));
        let looped = fit_noise(&noise, 25, &mut rng).unwrap();
        assert_eq!(looped.len(), 25);
        for i in 0..15 {
            assert_eq!(looped[i], looped[i + 10]);
        }
        assert!(fit_noise(&[], 3, &mut rng).is_err());
    }

    #[test]
    fn additivity_in_f32() {
        let s = mono((0..100).map(|i| libm::sin(i as f64 * 0.1)).collect());
        let n = mono((0..100).map(|i| libm::cos(i as f64 * 1.3) * 0.37).collect());
        let b = mix_at_snr(&s, &n, 7.5).unwrap();
        for i in 0..100 {
            let m = b.mixture.channel(0)[i] as f32;
            assert_eq!(
                m,
                b.speech_image.channel(0)[i] as f32 + b.noise_image.channel(0)[i] as f32
            );
        }
        assert!((b.achieved_snr_db - 7.5).abs() < 0.01);
    }
}
