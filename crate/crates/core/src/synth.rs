//! Deterministic synthetic test signals.
//!
//! [`speech_like`] produces a voiced/unvoiced syllable sequence with a gliding
//! pitch, formant-shaped harmonics and pauses. It is no substitute for real
//! speech but it has the properties the enhancement chain relies on: sparse
//! time-frequency support, a low-pass spectral tilt and silent gaps.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Zero-mean Gaussian white noise with standard deviation `std`.
pub fn white_noise(len: usize, std: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * std
        })
        .collect()
}

/// Approximately 1/f noise (Kellet's filtered white noise), unit-ish RMS.
pub fn pink_noise(len: usize, seed: u64) -> Vec<f64> {
    let white = white_noise(len, 1.0, seed);
    let mut b = [0.0f64; 7];
    let mut out = Vec::with_capacity(len);
    for w in white {
        b[0] = 0.99886 * b[0] + w * 0.0555179;
        b[1] = 0.99332 * b[1] + w * 0.0750759;
        b[2] = 0.96900 * b[2] + w * 0.1538520;
        b[3] = 0.86650 * b[3] + w * 0.3104856;
        b[4] = 0.55000 * b[4] + w * 0.5329522;
        b[5] = -0.7616 * b[5] - w * 0.0168980;
        let y = b[0] + b[1] + b[2] + b[3] + b[4] + b[5] + b[6] + w * 0.5362;
        b[6] = w * 0.115926;
        out.push(y * 0.2);
    }
    out
}

// formant centre frequencies and bandwidths (Hz) of a few vowel-like shapes
const VOWELS: [[(f64, f64); 3]; 4] = [
    [(730.0, 90.0), (1090.0, 110.0), (2440.0, 160.0)],
    [(270.0, 60.0), (2290.0, 100.0), (3010.0, 120.0)],
    [(530.0, 60.0), (1840.0, 100.0), (2480.0, 120.0)],
    [(300.0, 60.0), (870.0, 90.0), (2240.0, 120.0)],
];

fn formant_gain(freq: f64, vowel: &[(f64, f64); 3]) -> f64 {
    let tilt = 1.0 / (1.0 + freq / 300.0);
    let peaks: f64 = vowel
        .iter()
        .map(|&(fc, bw)| 1.0 / (1.0 + ((freq - fc) / bw) * ((freq - fc) / bw)))
        .sum();
    tilt * (0.05 + peaks)
}

/// Speech-like test signal of `len` samples, peak-normalized to 0.5.
pub fn speech_like(len: usize, sample_rate: u32, seed: u64) -> Vec<f64> {
    let fs = sample_rate as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; len];
    let mut pos = (rng.random_range(0.02..0.1) * fs) as usize;
    let base_f0 = rng.random_range(95.0..210.0);
    while pos < len {
        let dur = (rng.random_range(0.12..0.35) * fs) as usize;
        let end = (pos + dur).min(len);
        let seg = end - pos;
        if rng.random_bool(0.8) {
            let vowel = &VOWELS[rng.random_range(0..VOWELS.len())];
            let f0_start = base_f0 * rng.random_range(0.85..1.2);
            let f0_end = base_f0 * rng.random_range(0.8..1.15);
            let mut phase = 0.0;
            for i in 0..seg {
                let u = i as f64 / seg as f64;
                let f0 = f0_start + (f0_end - f0_start) * u;
                phase += 2.0 * PI * f0 / fs;
                let env = libm::sin(PI * u) * libm::sin(PI * u);
                let mut v = 0.0;
                let mut h = 1;
                while (h as f64) * f0 < 4000.0 && (h as f64) * f0 < fs / 2.0 {
                    v += formant_gain(h as f64 * f0, vowel) * libm::sin(h as f64 * phase);
                    h += 1;
                }
                out[pos + i] += env * v;
            }
        } else {
            // fricative: high-passed noise burst
            let mut prev = 0.0;
            let level = rng.random_range(0.05..0.15);
            for i in 0..seg {
                let u = i as f64 / seg as f64;
                let z: f64 = StandardNormal.sample(&mut rng);
                let hp = z - prev;
                prev = z;
                out[pos + i] += level * libm::sin(PI * u) * hp;
            }
        }
        pos = end + (rng.random_range(0.03..0.25) * fs) as usize;
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        for v in out.iter_mut() {
            *v *= 0.5 / peak;
        }
    }
    out
}
