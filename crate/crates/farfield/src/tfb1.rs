//! TFB1 tensor container.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "TFB1" | version u8 = 1 | dtype u8 | ndim u8 | reserved u8 = 0 | ndim x u32 dims | payload
//! ```
//!
//! `dtype` 0 is float32, 1 is complex64 (interleaved re/im float32). The
//! payload is row-major with the last dimension fastest. Spectrograms are
//! stored as `(channels, frames, bins)`, masks as `(frames, bins)` or stacked
//! speech/noise as `(2, frames, bins)`.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use farfield_core::mask::{Mask, MaskKind};
use farfield_core::{Complex64, TfGrid};
use num_complex::Complex32;

use crate::fsutil::write_atomic;
use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"TFB1";
pub const VERSION: u8 = 1;
const FIXED_HEADER: u64 = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum Tensor {
    F32 { dims: Vec<usize>, data: Vec<f32> },
    C64 { dims: Vec<usize>, data: Vec<Complex32> },
}

impl Tensor {
    pub fn dims(&self) -> &[usize] {
        match self {
            Tensor::F32 { dims, .. } | Tensor::C64 { dims, .. } => dims,
        }
    }

    fn dtype(&self) -> u8 {
        match self {
            Tensor::F32 { .. } => 0,
            Tensor::C64 { .. } => 1,
        }
    }

    fn len(&self) -> usize {
        match self {
            Tensor::F32 { data, .. } => data.len(),
            Tensor::C64 { data, .. } => data.len(),
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        let dims = self.dims();
        if dims.len() > u8::MAX as usize {
            return Err(format!("{} dimensions, at most 255 allowed", dims.len()));
        }
        if dims.iter().any(|&d| u32::try_from(d).is_err()) {
            return Err("dimension does not fit in u32".into());
        }
        let n = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        if n != Some(self.len()) {
            return Err(format!("{} elements for dims {dims:?}", self.len()));
        }
        Ok(())
    }

    pub fn encode(&self, out: &mut impl Write) -> std::io::Result<()> {
        self.check()
            .map_err(|m| std::io::Error::new(std::io::ErrorKind::InvalidInput, m))?;
        let dims = self.dims();
        out.write_all(&MAGIC)?;
        out.write_all(&[VERSION, self.dtype(), dims.len() as u8, 0])?;
        for &d in dims {
            out.write_all(&(d as u32).to_le_bytes())?;
        }
        match self {
            Tensor::F32 { data, .. } => {
                for v in data {
                    out.write_all(&v.to_le_bytes())?;
                }
            }
            Tensor::C64 { data, .. } => {
                for v in data {
                    out.write_all(&v.re.to_le_bytes())?;
                    out.write_all(&v.im.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    /// Decodes a tensor from `input`, which holds exactly `total_len` bytes.
    /// The header is checked against `total_len` before any payload buffer
    /// is allocated.
    pub fn decode(input: &mut impl Read, total_len: u64) -> std::result::Result<Tensor, DecodeError> {
        use DecodeError::*;
        if total_len < FIXED_HEADER {
            return Err(Truncated);
        }
        let mut head = [0u8; 8];
        input.read_exact(&mut head).map_err(Io)?;
        if head[..4] != MAGIC {
            return Err(BadMagic);
        }
        if head[4] != VERSION {
            return Err(BadVersion(head[4]));
        }
        let elem = match head[5] {
            0 => 4u64,
            1 => 8u64,
            d => return Err(BadDtype(d)),
        };
        if head[7] != 0 {
            return Err(BadReserved(head[7]));
        }
        let ndim = head[6] as u64;
        let header_len = FIXED_HEADER + 4 * ndim;
        if total_len < header_len {
            return Err(Truncated);
        }
        let mut raw = vec![0u8; 4 * ndim as usize];
        input.read_exact(&mut raw).map_err(Io)?;
        let dims: Vec<u64> = raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as u64)
            .collect();
        let payload = dims
            .iter()
            .try_fold(elem, |acc, &d| acc.checked_mul(d))
            .ok_or(DimOverflow)?;
        let available = total_len - header_len;
        if payload != available {
            return Err(SizeMismatch {
                expected: payload,
                found: available,
            });
        }
        let count = usize::try_from(payload / elem).map_err(|_| DimOverflow)?;
        let dims: Vec<usize> = dims.into_iter().map(|d| d as usize).collect();
        let mut bytes = vec![0u8; payload as usize];
        input.read_exact(&mut bytes).map_err(Io)?;
        let f = |c: &[u8]| f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
        Ok(if elem == 4 {
            Tensor::F32 {
                dims,
                data: bytes.chunks_exact(4).map(f).collect(),
            }
        } else {
            let data: Vec<Complex32> = bytes
                .chunks_exact(8)
                .map(|c| Complex32::new(f(&c[..4]), f(&c[4..])))
                .collect();
            debug_assert_eq!(data.len(), count);
            Tensor::C64 { dims, data }
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode(&mut out).expect("tensor shape is consistent");
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Tensor, DecodeError> {
        Tensor::decode(&mut &bytes[..], bytes.len() as u64)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DecodeError {
    #[error("file shorter than its header")]
    Truncated,
    #[error("bad magic, not a TFB1 file")]
    BadMagic,
    #[error("unsupported TFB1 version {0}")]
    BadVersion(u8),
    #[error("unknown dtype code {0}")]
    BadDtype(u8),
    #[error("reserved header byte is {0}, expected 0")]
    BadReserved(u8),
    #[error("dimensions overflow")]
    DimOverflow,
    #[error("header announces {expected} payload bytes, file holds {found}")]
    SizeMismatch { expected: u64, found: u64 },
    #[error(transparent)]
    Io(std::io::Error),
}

pub fn read_tfb1(path: &Path) -> Result<Tensor> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    Tensor::decode(&mut BufReader::new(file), len).map_err(|e| match e {
        DecodeError::Io(io) => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    })
}

pub fn write_tfb1(tensor: &Tensor, path: &Path) -> Result<()> {
    tensor.check().map_err(|m| Error::format(path, m))?;
    write_atomic(path, |w| tensor.encode(w).map_err(|e| Error::io(path, e)))
}

/// Complex64 tensor of shape `(channels, frames, bins)`; values are rounded
/// to single precision.
pub fn grid_to_tensor(grid: &TfGrid) -> Tensor {
    let (k, t, f) = grid.shape();
    Tensor::C64 {
        dims: vec![k, t, f],
        data: grid
            .as_slice()
            .iter()
            .map(|c| Complex32::new(c.re as f32, c.im as f32))
            .collect(),
    }
}

pub fn tensor_to_grid(tensor: &Tensor, window_len: usize, hop: usize, sample_rate: u32) -> Result<TfGrid> {
    let Tensor::C64 { dims, data } = tensor else {
        return Err(farfield_core::Error::ShapeMismatch("spectrogram must be complex64".into()).into());
    };
    let &[k, t, f] = dims.as_slice() else {
        return Err(
            farfield_core::Error::ShapeMismatch(format!("spectrogram dims {dims:?}, expected 3")).into(),
        );
    };
    if f != window_len / 2 + 1 {
        return Err(farfield_core::Error::ShapeMismatch(format!(
            "{f} bins do not match a {window_len}-sample window"
        ))
        .into());
    }
    let data = data
        .iter()
        .map(|c| Complex64::new(c.re as f64, c.im as f64))
        .collect();
    Ok(TfGrid::new(k, t, window_len, hop, sample_rate, data)?)
}

/// Stacked `(2, frames, bins)` float32 tensor, speech first.
pub fn masks_to_tensor(speech: &Mask, noise: &Mask) -> Result<Tensor> {
    if speech.frames() != noise.frames() || speech.bins() != noise.bins() {
        return Err(
            farfield_core::Error::ShapeMismatch("speech and noise masks differ in shape".into()).into(),
        );
    }
    let data = speech
        .gains()
        .iter()
        .chain(noise.gains())
        .map(|&g| g as f32)
        .collect();
    Ok(Tensor::F32 {
        dims: vec![2, speech.frames(), speech.bins()],
        data,
    })
}

/// Masks read from a file, with the number of gains that had to be clamped
/// into `[0, 1]`.
#[derive(Debug, Clone)]
pub struct LoadedMasks {
    pub speech: Mask,
    pub noise: Mask,
    pub clamped: usize,
}

/// Reads masks stored as `(2, frames, bins)` or as a single speech mask
/// `(frames, bins)`, in which case the noise mask is its complement.
/// `expected` is the `(frames, bins)` shape of the grid they will be applied to.
pub fn load_masks(path: &Path, expected: Option<(usize, usize)>) -> Result<LoadedMasks> {
    let tensor = read_tfb1(path)?;
    let Tensor::F32 { dims, data } = tensor else {
        return Err(Error::format(path, "masks must be float32"));
    };
    let (frames, bins, noise) = match dims.as_slice() {
        &[2, t, f] => (
            t,
            f,
            Some(data[t * f..].iter().map(|&g| g as f64).collect::<Vec<_>>()),
        ),
        &[t, f] => (t, f, None),
        other => {
            return Err(Error::format(
                path,
                format!("mask dims {other:?}, expected (2, T, F) or (T, F)"),
            ))
        }
    };
    if let Some(shape) = expected {
        if shape != (frames, bins) {
            return Err(farfield_core::Error::ShapeMismatch(format!(
                "{}: masks are {frames}x{bins}, grid is {}x{}",
                path.display(),
                shape.0,
                shape.1
            ))
            .into());
        }
    }
    let speech_gains: Vec<f64> = data[..frames * bins].iter().map(|&g| g as f64).collect();
    let (speech, c_s) = Mask::clamped(frames, bins, MaskKind::Speech, speech_gains)?;
    let noise_gains = noise.unwrap_or_else(|| speech.gains().iter().map(|g| 1.0 - g).collect());
    let (noise, c_n) = Mask::clamped(frames, bins, MaskKind::Noise, noise_gains)?;
    if c_s + c_n > 0 {
        log::warn!(
            "{}: clamped {} mask values into [0, 1]",
            path.display(),
            c_s + c_n
        );
    }
    Ok(LoadedMasks {
        speech,
        noise,
        clamped: c_s + c_n,
    })
}

pub fn save_masks(speech: &Mask, noise: &Mask, path: &Path) -> Result<()> {
    write_tfb1(&masks_to_tensor(speech, noise)?, path)
}
