//! Multichannel far-field speech enhancement.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every numerical piece of
//! the toolkit:
//!
//! - [`stft`]: Hann STFT / weighted overlap-add iSTFT and the [`Waveform`] and
//!   [`TfGrid`] containers.
//! - [`linalg`]: small complex Hermitian solves and the principal eigenpair.
//! - [`mask`]: ratio masks from separated speech/noise estimates.
//! - [`beamform`]: mask-weighted spatial covariances and the (Rank-1)
//!   speech-distortion-weighted multichannel Wiener filter.
//! - [`wpe`]: iterative weighted-prediction-error dereverberation.
//! - [`room`]: shoebox image-source room impulse responses.
//! - [`mixer`]: convolution with RIRs and mixing at a target SNR.
//! - [`metrics`]: SDR, SI-SNR, EER and bootstrap confidence intervals.
//! - [`pipeline`]: the per-clip masks -> MWF -> WPE chain.
//!
//! File formats, corpus building and the command-line tool live in the
//! `farfield` crate.
//!
//! The `parallel` feature (implies `std`) spreads per-frequency work over a
//! rayon pool. Results do not depend on the schedule.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` deliberately also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod beamform;
mod error;
pub mod fft;
pub mod linalg;
pub mod mask;
pub mod metrics;
pub mod mixer;
mod par;
pub mod pipeline;
pub mod room;
pub mod stft;
pub mod synth;
pub mod wpe;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use stft::{TfGrid, Waveform};

/// Default sample rate of every signal in the toolkit.
pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;
