//! File formats, corpus tools and the `farfield` command-line front end.
//!
//! Everything numerical lives in [`farfield_core`]; this crate reads and
//! writes WAV audio, TFB1 tensors, trial lists and JSON-lines manifests, and
//! drives corpus building and batch enhancement over a rayon pool.

pub mod cli;
pub mod config;
pub mod corpus;
pub mod enhance;
mod error;
pub mod fsutil;
pub mod manifest;
pub mod tfb1;
pub mod trials;
pub mod wav;

pub use error::{Error, Result};
