#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use farfield::manifest::{write_manifest, MixtureSpec, RoomRef};
use farfield::wav::{write_wav, Encoding};
use farfield_core::room::RoomProfile;
use farfield_core::synth::{pink_noise, speech_like};
use farfield_core::{Waveform, DEFAULT_SAMPLE_RATE};

pub fn farfield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_farfield"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run farfield")
}

pub fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "farfield failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Dry speech-like and pink-noise WAVs `speech_XX.wav` / `noise_XX.wav` for
/// `n` sources of `seconds` each.
pub fn write_sources(dir: &Path, n: usize, seconds: f64) {
    let fs = DEFAULT_SAMPLE_RATE;
    let len = (seconds * fs as f64) as usize;
    for i in 0..n {
        let speech = Waveform::mono(speech_like(len, fs, 1000 + i as u64), fs).unwrap();
        let noise = Waveform::mono(pink_noise(len + fs as usize, 2000 + i as u64), fs).unwrap();
        write_wav(
            &speech,
            &dir.join(format!("speech_{i:02}.wav")),
            Encoding::Float32,
        )
        .unwrap();
        write_wav(&noise, &dir.join(format!("noise_{i:02}.wav")), Encoding::Float32).unwrap();
    }
}

/// Manifest `name` in `dir` pairing source `i` with eval room seed `i`, at
/// `snr_db`, for `i in 0..n`.
pub fn write_manifest_for(dir: &Path, name: &str, n: usize, snr_db: f64) -> PathBuf {
    let specs: Vec<MixtureSpec> = (0..n)
        .map(|i| MixtureSpec {
            id: Some(format!("room{i:02}")),
            speech_path: format!("speech_{i:02}.wav").into(),
            noise_path: format!("noise_{i:02}.wav").into(),
            rir: RoomRef::Sampled {
                profile: RoomProfile::Eval,
                seed: Some(i as u64),
            },
            snr_db,
            seed: None,
            truncate_s: 10.0,
        })
        .collect();
    let manifest = dir.join(name);
    write_manifest(&specs, &manifest).unwrap();
    manifest
}

/// Every file below `root` as (relative path, contents), sorted by path.
pub fn snapshot(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.push((
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                ));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort();
    out
}
