//! The `farfield` command line. Each subcommand parses its flags, merges them
//! with the run configuration and calls one library operation. Results go to
//! stdout as JSON, progress and errors to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use farfield_core::metrics::{bootstrap_ci_with, sdr, si_snr};
use farfield_core::pipeline::{
    enhance_clip, oracle_masks, ChainConfig, ChainOrder, GroundTruth, MaskSource, OracleTarget,
    ReportReference,
};
use farfield_core::room::{
    rt60_to_absorption, sample_room_with, schroeder_rt60, simulate_rir, RoomProfile, RoomSpec,
};
use farfield_core::wpe::{wpe_waveform, WpeConfig};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::corpus::{build_corpus, BuildOptions};
use crate::enhance::{enhance_corpus, grid_shape, write_corpus_masks, EnhanceOptions};
use crate::fsutil::{read_json, write_json};
use crate::tfb1::{load_masks, save_masks, write_tfb1, Tensor};
use crate::trials::read_trials;
use crate::wav::{read_wav, write_wav, Encoding, ExpectedRate};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "farfield", version, about = "Far-field speech enhancement toolkit")]
pub struct Cli {
    /// Run seed; every random draw derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Never changes outputs.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Accept WAV files at any sample rate.
    #[arg(long, global = true)]
    pub allow_rate: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a room and write its impulse responses.
    SimulateRir(SimulateRirArgs),
    /// Render a mixture manifest into a corpus directory.
    Mix(MixArgs),
    /// Compute oracle masks for a corpus or a single clip.
    Masks(MasksArgs),
    /// Run the enhancement chain over a corpus or a single clip.
    Enhance(EnhanceArgs),
    /// Dereverberate a multichannel WAV.
    Wpe(WpeArgs),
    /// SI-SNR and SDR of an estimate against a reference.
    Metrics(MetricsArgs),
    /// Equal error rate of a trial list with a bootstrap interval.
    Eer(EerArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProfileArg {
    Train,
    Eval,
}

impl From<ProfileArg> for RoomProfile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Train => RoomProfile::Train,
            ProfileArg::Eval => RoomProfile::Eval,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RirFormat {
    Wav,
    Tfb1,
}

#[derive(Debug, Args)]
pub struct SimulateRirArgs {
    #[arg(long, value_enum)]
    pub profile: Option<ProfileArg>,
    /// Use this RoomSpec JSON instead of drawing a room.
    #[arg(long)]
    pub room: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "wav")]
    pub format: RirFormat,
    /// Output directory for room.json and rir.wav / rir.tfb.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MixArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub encoding: Option<Encoding>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OrderArg {
    MwfThenWpe,
    WpeThenMwf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MaskSourceArg {
    Oracle,
    File,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TargetArg {
    Reverberant,
    Dry,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReferenceArg {
    SpeechImage,
    Dry,
}

#[derive(Debug, Default, Args)]
pub struct WpeFlags {
    /// WPE filter taps (frames).
    #[arg(long)]
    pub taps: Option<usize>,
    /// WPE prediction delay (frames).
    #[arg(long)]
    pub delay: Option<usize>,
    /// WPE iterations.
    #[arg(long)]
    pub iters: Option<usize>,
    /// WPE power smoothing weight.
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl WpeFlags {
    fn any(&self) -> bool {
        self.taps.is_some() || self.delay.is_some() || self.iters.is_some() || self.alpha.is_some()
    }

    fn apply(&self, w: &mut WpeConfig) {
        if let Some(v) = self.taps {
            w.taps = v;
        }
        if let Some(v) = self.delay {
            w.delay = v;
        }
        if let Some(v) = self.iters {
            w.iterations = v;
        }
        if let Some(v) = self.alpha {
            w.alpha = v;
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct ChainFlags {
    /// Speech distortion weight of the SDW-MWF.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Rank-1 speech covariance (true/false).
    #[arg(long, action = ArgAction::Set)]
    pub rank1: Option<bool>,
    #[arg(long)]
    pub ref_channel: Option<usize>,
    #[arg(long, value_enum)]
    pub order: Option<OrderArg>,
    #[arg(long, value_enum)]
    pub mask_source: Option<MaskSourceArg>,
    #[arg(long, value_enum)]
    pub oracle_target: Option<TargetArg>,
    /// Signal the SI-SNR/SDR report is computed against.
    #[arg(long, value_enum)]
    pub report_reference: Option<ReferenceArg>,
    /// Skip dereverberation.
    #[arg(long, conflicts_with_all = ["taps", "delay", "iters", "alpha"])]
    pub no_wpe: bool,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub hop: Option<usize>,
    #[command(flatten)]
    pub wpe: WpeFlags,
}

impl ChainFlags {
    pub fn apply(&self, c: &mut ChainConfig) {
        if let Some(v) = self.mu {
            c.beamformer.mu = v;
        }
        if let Some(v) = self.rank1 {
            c.beamformer.rank1 = v;
        }
        if let Some(v) = self.ref_channel {
            c.beamformer.reference_channel = v;
        }
        if let Some(v) = self.order {
            c.order = match v {
                OrderArg::MwfThenWpe => ChainOrder::MwfThenWpe,
                OrderArg::WpeThenMwf => ChainOrder::WpeThenMwf,
            };
        }
        if let Some(v) = self.mask_source {
            c.mask_source = match v {
                MaskSourceArg::Oracle => MaskSource::Oracle,
                MaskSourceArg::File => MaskSource::File,
            };
        }
        if let Some(v) = self.oracle_target {
            c.oracle_target = match v {
                TargetArg::Reverberant => OracleTarget::Reverberant,
                TargetArg::Dry => OracleTarget::Dry,
            };
        }
        if let Some(v) = self.report_reference {
            c.report_reference = match v {
                ReferenceArg::SpeechImage => ReportReference::SpeechImage,
                ReferenceArg::Dry => ReportReference::Dry,
            };
        }
        if let Some(v) = self.window {
            c.stft.window_len = v;
        }
        if let Some(v) = self.hop {
            c.stft.hop = v;
        }
        if self.no_wpe {
            c.wpe = None;
        } else if self.wpe.any() {
            self.wpe.apply(c.wpe.get_or_insert_with(WpeConfig::default));
        }
    }
}

#[derive(Debug, Args)]
pub struct MasksArgs {
    /// Corpus directory; masks.tfb is written into every item.
    #[arg(long, conflicts_with_all = ["mixture", "out"])]
    pub corpus: Option<PathBuf>,
    #[arg(long, requires_all = ["speech_image", "noise_image", "out"])]
    pub mixture: Option<PathBuf>,
    #[arg(long)]
    pub speech_image: Option<PathBuf>,
    #[arg(long)]
    pub noise_image: Option<PathBuf>,
    #[arg(long)]
    pub dry: Option<PathBuf>,
    /// Output TFB1 file of a single clip.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub chain: ChainFlags,
}

#[derive(Debug, Args)]
pub struct EnhanceArgs {
    /// Corpus directory built by `mix`.
    #[arg(long = "in", conflicts_with = "mixture", requires = "out")]
    pub input: Option<PathBuf>,
    /// Output directory of a corpus run.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Recompute items whose outputs already exist.
    #[arg(long)]
    pub force: bool,
    #[arg(long, requires = "output")]
    pub mixture: Option<PathBuf>,
    #[arg(long, requires = "noise_image")]
    pub speech_image: Option<PathBuf>,
    #[arg(long, requires = "speech_image")]
    pub noise_image: Option<PathBuf>,
    #[arg(long)]
    pub dry: Option<PathBuf>,
    /// TFB1 masks of a single clip; implies --mask-source file.
    #[arg(long)]
    pub masks: Option<PathBuf>,
    /// Enhanced WAV of a single clip.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Bootstrap resamples for the aggregate intervals.
    #[arg(long)]
    pub resamples: Option<usize>,
    #[command(flatten)]
    pub chain: ChainFlags,
}

#[derive(Debug, Args)]
pub struct WpeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub hop: Option<usize>,
    #[command(flatten)]
    pub wpe: WpeFlags,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub estimate: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub ref_channel: usize,
    #[arg(long, default_value_t = 0)]
    pub est_channel: usize,
}

#[derive(Debug, Args)]
pub struct EerArgs {
    /// CSV of `label,score` lines.
    #[arg(long)]
    pub trials: PathBuf,
    #[arg(long)]
    pub resamples: Option<usize>,
    #[arg(long)]
    pub confidence: Option<f64>,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            report_error("usage", &e.to_string());
            return 2;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            report_error(e.kind(), &e.to_string());
            e.exit_code()
        }
    }
}

fn report_error(kind: &str, message: &str) {
    let body = json!({ "error": { "kind": kind, "message": message.trim_end() } });
    eprintln!("{body}");
}

fn emit<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string(value).map_err(|e| Error::json(Path::new("<stdout>"), e))?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| Error::io(Path::new("<stdout>"), e))
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = Some(w);
    }
    if cfg.workers == Some(0) {
        return Err(Error::usage("--workers must be at least 1"));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::usage(format!("cannot start worker pool: {e}")))?;
    let rate: ExpectedRate = if cli.allow_rate {
        None
    } else {
        Some(cfg.sample_rate)
    };
    pool.install(|| dispatch(cli.command, cfg, rate))
}

fn dispatch(command: Command, mut cfg: RunConfig, rate: ExpectedRate) -> Result<()> {
    match command {
        Command::SimulateRir(a) => simulate_rir_cmd(a, &cfg),
        Command::Mix(a) => {
            let manifest = a
                .manifest
                .or(cfg.manifest.clone())
                .ok_or_else(|| Error::usage("mix needs --manifest or a manifest in the config"))?;
            let opts = BuildOptions {
                seed: cfg.seed,
                expected_rate: rate,
                array: cfg.array,
                reference_channel: cfg.chain.beamformer.reference_channel,
                encoding: a.encoding.unwrap_or(cfg.encoding),
            };
            let summary = build_corpus(&manifest, &a.out, &opts)?;
            emit(&summary)?;
            match summary.failed.len() {
                0 => Ok(()),
                n => Err(Error::Partial {
                    failed: n,
                    total: summary.total,
                }),
            }
        }
        Command::Masks(a) => {
            a.chain.apply(&mut cfg.chain);
            check_chain(&cfg.chain)?;
            masks_cmd(a, &cfg.chain, rate)
        }
        Command::Enhance(a) => {
            a.chain.apply(&mut cfg.chain);
            if a.masks.is_some() {
                cfg.chain.mask_source = MaskSource::File;
            }
            check_chain(&cfg.chain)?;
            enhance_cmd(a, &cfg, rate)
        }
        Command::Wpe(a) => {
            let mut w = cfg.chain.wpe.unwrap_or_default();
            a.wpe.apply(&mut w);
            let mut stft = cfg.chain.stft;
            if let Some(v) = a.window {
                stft.window_len = v;
            }
            if let Some(v) = a.hop {
                stft.hop = v;
            }
            w.validate().map_err(|e| Error::usage(e.to_string()))?;
            stft.validate().map_err(|e| Error::usage(e.to_string()))?;
            let x = read_wav(&a.input, rate)?;
            let y = wpe_waveform(&x, &stft, &w)?;
            write_wav(&y, &a.output, cfg.encoding)?;
            emit(&json!({ "output": a.output, "channels": y.num_channels(), "samples": y.len(), "wpe": w }))
        }
        Command::Metrics(a) => {
            let reference = read_wav(&a.reference, rate)?;
            let estimate = read_wav(&a.estimate, rate)?;
            let r = reference.select(a.ref_channel)?;
            let e = estimate.select(a.est_channel)?;
            emit(&json!({
                "si_snr": si_snr(r.channel(0), e.channel(0))?,
                "sdr": sdr(r.channel(0), e.channel(0))?,
            }))
        }
        Command::Eer(a) => {
            let trials = read_trials(&a.trials)?;
            let resamples = a.resamples.unwrap_or(cfg.bootstrap_resamples);
            let confidence = a.confidence.unwrap_or(cfg.confidence);
            emit(&bootstrap_ci_with(&trials, resamples, cfg.seed, confidence)?)
        }
    }
}

fn check_chain(chain: &ChainConfig) -> Result<()> {
    let probe = RunConfig {
        chain: *chain,
        ..RunConfig::default()
    };
    probe.validate().map_err(Error::usage)
}

fn simulate_rir_cmd(a: SimulateRirArgs, cfg: &RunConfig) -> Result<()> {
    let room: RoomSpec = match &a.room {
        Some(p) => read_json(p)?,
        None => sample_room_with(
            cfg.seed,
            a.profile.map(Into::into).unwrap_or(cfg.profile),
            &cfg.array,
        )?,
    };
    let rir = simulate_rir(&room)?;
    write_json(&a.out.join("room.json"), &room)?;
    let rir_path = match a.format {
        RirFormat::Wav => {
            let p = a.out.join("rir.wav");
            write_wav(&rir.to_waveform(), &p, Encoding::Float32)?;
            p
        }
        RirFormat::Tfb1 => {
            let p = a.out.join("rir.tfb");
            let tensor = Tensor::F32 {
                dims: vec![rir.num_mics(), rir.len()],
                data: rir.taps().iter().flatten().map(|&v| v as f32).collect(),
            };
            write_tfb1(&tensor, &p)?;
            p
        }
    };
    let rt60: Vec<Option<f64>> = rir
        .taps()
        .iter()
        .map(|h| schroeder_rt60(h, rir.sample_rate()))
        .collect();
    emit(&json!({
        "rir": rir_path,
        "absorption": rt60_to_absorption(&room)?,
        "length": rir.len(),
        "rt60_target": room.rt60_target,
        "rt60_measured": rt60,
    }))
}

fn masks_cmd(a: MasksArgs, chain: &ChainConfig, rate: ExpectedRate) -> Result<()> {
    if let Some(corpus) = &a.corpus {
        let failed = write_corpus_masks(corpus, chain, rate)?;
        emit(&json!({ "corpus": corpus, "failed": failed }))?;
        return match failed.len() {
            0 => Ok(()),
            n => Err(Error::Partial {
                failed: n,
                total: crate::corpus::list_items(corpus)?.len(),
            }),
        };
    }
    let (Some(mixture), Some(speech), Some(noise), Some(out)) =
        (&a.mixture, &a.speech_image, &a.noise_image, &a.out)
    else {
        return Err(Error::usage(
            "masks needs --corpus, or --mixture, --speech-image, --noise-image and --out",
        ));
    };
    let mixture = read_wav(mixture, rate)?;
    let speech_image = read_wav(speech, rate)?;
    let noise_image = read_wav(noise, rate)?;
    let dry = a.dry.as_ref().map(|p| read_wav(p, rate)).transpose()?;
    let truth = GroundTruth {
        speech_image: &speech_image,
        noise_image: &noise_image,
        dry_speech: dry.as_ref(),
    };
    let grid = chain.stft.analyze(&mixture)?;
    let (s, n) = oracle_masks(&grid, &truth, chain)?;
    save_masks(&s, &n, out)?;
    emit(&json!({ "masks": out, "frames": s.frames(), "bins": s.bins() }))
}

fn enhance_cmd(a: EnhanceArgs, cfg: &RunConfig, rate: ExpectedRate) -> Result<()> {
    if let Some(input) = &a.input {
        let out = a.out.as_ref().ok_or_else(|| Error::usage("--in needs --out"))?;
        let opts = EnhanceOptions {
            chain: cfg.chain,
            force: a.force,
            seed: cfg.seed,
            resamples: a.resamples.unwrap_or(cfg.bootstrap_resamples),
            confidence: cfg.confidence,
            expected_rate: rate,
            encoding: cfg.encoding,
        };
        if opts.resamples == 0 {
            return Err(Error::usage("--resamples must be at least 1"));
        }
        let aggregate = enhance_corpus(input, out, &opts)?;
        emit(&aggregate)?;
        return match aggregate.failed.len() {
            0 => Ok(()),
            n => Err(Error::Partial {
                failed: n,
                total: aggregate.clips,
            }),
        };
    }
    let (Some(mixture), Some(output)) = (&a.mixture, &a.output) else {
        return Err(Error::usage(
            "enhance needs --in/--out, or --mixture and --output",
        ));
    };
    let mixture = read_wav(mixture, rate)?;
    let speech_image = a.speech_image.as_ref().map(|p| read_wav(p, rate)).transpose()?;
    let noise_image = a.noise_image.as_ref().map(|p| read_wav(p, rate)).transpose()?;
    let dry = a.dry.as_ref().map(|p| read_wav(p, rate)).transpose()?;
    let truth = match (&speech_image, &noise_image) {
        (Some(s), Some(n)) => Some(GroundTruth {
            speech_image: s,
            noise_image: n,
            dry_speech: dry.as_ref(),
        }),
        _ => None,
    };
    let masks = match &a.masks {
        Some(p) => Some(load_masks(p, Some(grid_shape(mixture.len(), &cfg.chain)))?),
        None => None,
    };
    let (enhanced, report) = enhance_clip(
        &mixture,
        truth.as_ref(),
        masks.as_ref().map(|m| (&m.speech, &m.noise)),
        &cfg.chain,
    )?;
    write_wav(&enhanced, output, cfg.encoding)?;
    emit(&report)
}
