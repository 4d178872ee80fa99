//! WAV audio: 16-bit PCM or 32-bit IEEE float, any channel count.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use farfield_core::Waveform;
use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use serde::{Deserialize, Serialize};

use crate::fsutil::write_atomic;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Pcm16,
    #[default]
    Float32,
}

/// Sample-rate policy of [`read_wav`]: `None` accepts any rate.
pub type ExpectedRate = Option<u32>;

fn hound_error(path: &Path, e: hound::Error) -> Error {
    match e {
        // the file opened fine, so read failures here mean a short or corrupt file
        hound::Error::IoError(io) => Error::format(path, format!("malformed WAV: {io}")),
        hound::Error::Unsupported => Error::format(path, "unsupported codec"),
        other => Error::format(path, format!("malformed WAV: {other}")),
    }
}

pub fn read_wav(path: &Path, expected_rate: ExpectedRate) -> Result<Waveform> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = WavReader::new(BufReader::new(file)).map_err(|e| hound_error(path, e))?;
    let spec = reader.spec();
    if let Some(expected) = expected_rate {
        if spec.sample_rate != expected {
            return Err(farfield_core::Error::RateMismatch {
                expected,
                found: spec.sample_rate,
            }
            .into());
        }
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>(),
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>(),
        (format, bits) => {
            return Err(Error::format(
                path,
                format!("unsupported codec: {bits}-bit {format:?}"),
            ))
        }
    }
    .map_err(|e| hound_error(path, e))?;
    let k = spec.channels as usize;
    if k == 0 {
        return Err(Error::format(path, "zero channels"));
    }
    let mut channels = vec![Vec::with_capacity(interleaved.len() / k); k];
    for frame in interleaved.chunks_exact(k) {
        for (c, &v) in channels.iter_mut().zip(frame) {
            c.push(v);
        }
    }
    Ok(Waveform::new(channels, spec.sample_rate)?)
}

/// 16-bit code of `x`: `x * 32768` rounded half away from zero, saturated.
pub fn quantize_pcm16(x: f64) -> i16 {
    if x.is_nan() {
        return 0;
    }
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

pub fn write_wav(w: &Waveform, path: &Path, encoding: Encoding) -> Result<()> {
    let k = w.num_channels();
    let channels = u16::try_from(k)
        .ok()
        .filter(|&c| c > 0)
        .ok_or_else(|| Error::format(path, format!("cannot write {k} channels")))?;
    let spec = WavSpec {
        channels,
        sample_rate: w.sample_rate(),
        bits_per_sample: match encoding {
            Encoding::Pcm16 => 16,
            Encoding::Float32 => 32,
        },
        sample_format: match encoding {
            Encoding::Pcm16 => SampleFormat::Int,
            Encoding::Float32 => SampleFormat::Float,
        },
    };
    write_atomic(path, |out| {
        let mut writer = WavWriter::new(out, spec).map_err(|e| hound_error(path, e))?;
        for t in 0..w.len() {
            for c in w.channels() {
                match encoding {
                    Encoding::Pcm16 => writer.write_sample(quantize_pcm16(c[t])),
                    Encoding::Float32 => writer.write_sample(c[t] as f32),
                }
                .map_err(|e| hound_error(path, e))?;
            }
        }
        writer.finalize().map_err(|e| hound_error(path, e))
    })
}
