use farfield_core::beamform::{apply_weights, estimate_covariance, sdw_mwf_weights, BeamformerConfig};
use farfield_core::mask::{masks_from_estimates, oracle_estimates, Mask, MaskEpsilon, MaskKind};
use farfield_core::mixer::{convolve, mix_at_snr};
use farfield_core::pipeline::{
    enhance_clip, oracle_masks, ChainConfig, ChainOrder, GroundTruth, MaskSource, ReportReference,
};
use farfield_core::room::{sample_room, simulate_noise_rir, simulate_rir, RoomProfile};
use farfield_core::stft::{istft, StftConfig};
use farfield_core::synth::{pink_noise, speech_like};
use farfield_core::wpe::{wpe, WpeConfig};
use farfield_core::{Error, Waveform};

struct Scene {
    dry: Waveform,
    mixture: Waveform,
    speech_image: Waveform,
    noise_image: Waveform,
}

fn scene(seed: u64, snr: f64) -> Scene {
    let room = sample_room(300 + seed, RoomProfile::Eval).unwrap();
    let dry = Waveform::mono(speech_like(40_000, 16000, seed), 16000).unwrap();
    let noise = Waveform::mono(pink_noise(40_000, seed + 1), 16000).unwrap();
    let s = convolve(&dry, &simulate_rir(&room).unwrap()).unwrap();
    let n = convolve(&noise, &simulate_noise_rir(&room).unwrap()).unwrap();
    let b = mix_at_snr(&s, &n, snr).unwrap();
    Scene {
        dry,
        mixture: b.mixture,
        speech_image: b.speech_image,
        noise_image: b.noise_image,
    }
}

impl Scene {
    fn truth(&self) -> GroundTruth<'_> {
        GroundTruth {
            speech_image: &self.speech_image,
            noise_image: &self.noise_image,
            dry_speech: Some(&self.dry),
        }
    }
}

#[test]
fn stages_run_separately_give_the_same_signal() {
    let sc = scene(0, 5.0);
    let cfg = ChainConfig::default();
    let (out, report) = enhance_clip(&sc.mixture, Some(&sc.truth()), None, &cfg).unwrap();

    let stft = StftConfig::default();
    let y = stft.analyze(&sc.mixture).unwrap();
    let s = stft.analyze(&sc.speech_image).unwrap();
    let n = stft.analyze(&sc.noise_image).unwrap();
    let (s_hat, n_hat) = oracle_estimates(&y, &s, &n, 0).unwrap();
    let (ms, mn) = masks_from_estimates(&s_hat, &n_hat, MaskEpsilon::default()).unwrap();
    let w = sdw_mwf_weights(
        &estimate_covariance(&y, &ms).unwrap(),
        &estimate_covariance(&y, &mn).unwrap(),
        &BeamformerConfig::default(),
    )
    .unwrap();
    let z = wpe(&apply_weights(&y, &w).unwrap(), &WpeConfig::default()).unwrap();
    let manual = istft(&z).unwrap();
    assert_eq!(out, manual);
    assert_eq!(out.num_channels(), 1);
    assert_eq!(out.len(), sc.mixture.len());

    let names: Vec<&str> = report.stages.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["input", "mwf", "wpe"]);
    assert_eq!(report.si_snr_in, report.stages[0].si_snr);
    assert_eq!(report.si_snr_out, report.stages[2].si_snr);
}

#[test]
fn plain_mwf_configuration_equals_standalone_mwf() {
    let sc = scene(1, 10.0);
    let cfg = ChainConfig {
        beamformer: BeamformerConfig::mwf(),
        wpe: None,
        ..ChainConfig::default()
    };
    let (out, _) = enhance_clip(&sc.mixture, Some(&sc.truth()), None, &cfg).unwrap();
    let stft = StftConfig::default();
    let y = stft.analyze(&sc.mixture).unwrap();
    let (ms, mn) = oracle_masks(&y, &sc.truth(), &cfg).unwrap();
    let w = sdw_mwf_weights(
        &estimate_covariance(&y, &ms).unwrap(),
        &estimate_covariance(&y, &mn).unwrap(),
        &BeamformerConfig::mwf(),
    )
    .unwrap();
    assert_eq!(out, istft(&apply_weights(&y, &w).unwrap()).unwrap());
}

#[test]
fn wpe_first_order_is_supported() {
    let sc = scene(2, 5.0);
    let cfg = ChainConfig {
        order: ChainOrder::WpeThenMwf,
        ..ChainConfig::default()
    };
    let (_, report) = enhance_clip(&sc.mixture, Some(&sc.truth()), None, &cfg).unwrap();
    let names: Vec<&str> = report.stages.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["input", "wpe", "mwf"]);
}

#[test]
fn noiseless_clip_passes_through_a_full_rank_filter() {
    let sc = scene(3, 5.0);
    let zero = Waveform::zeros(4, sc.speech_image.len(), 16000);
    let truth = GroundTruth {
        speech_image: &sc.speech_image,
        noise_image: &zero,
        dry_speech: None,
    };
    let cfg = ChainConfig {
        beamformer: BeamformerConfig {
            rank1: false,
            ..BeamformerConfig::default()
        },
        wpe: None,
        ..ChainConfig::default()
    };
    let y = cfg.stft.analyze(&sc.speech_image).unwrap();
    let (ms, mn) = oracle_masks(&y, &truth, &cfg).unwrap();
    // M_n is zero everywhere; M_s is one except where |s| itself is near the epsilon
    assert!(mn.gains().iter().all(|n| *n == 0.0));
    let s_ref = y.select(0).unwrap();
    for (g, z) in ms.gains().iter().zip(s_ref.as_slice()) {
        if z.norm() >= 1e-10 {
            assert!(*g > 1.0 - 1e-6);
        }
    }
    let (_, report) = enhance_clip(&sc.speech_image, Some(&truth), None, &cfg).unwrap();
    // the input is the reference itself, so its SI-SNR is the sentinel; the
    // output can only approach it up to loading and round-off
    assert!(report.si_snr_out.unwrap() > 100.0, "{report:?}");
}

#[test]
fn oracle_chain_improves_a_noisy_clip() {
    let sc = scene(4, 0.0);
    let (_, report) = enhance_clip(&sc.mixture, Some(&sc.truth()), None, &ChainConfig::default()).unwrap();
    assert!(report.si_snr_improvement().unwrap() > 0.0, "{report:?}");
    let dry = ChainConfig {
        report_reference: ReportReference::Dry,
        ..ChainConfig::default()
    };
    let (_, against_dry) = enhance_clip(&sc.mixture, Some(&sc.truth()), None, &dry).unwrap();
    assert_ne!(against_dry.si_snr_out, report.si_snr_out);
}

#[test]
fn supplied_masks_are_used_and_checked() {
    let sc = scene(5, 5.0);
    let cfg = ChainConfig {
        mask_source: MaskSource::File,
        ..ChainConfig::default()
    };
    let y = cfg.stft.analyze(&sc.mixture).unwrap();
    let (ms, mn) = oracle_masks(&y, &sc.truth(), &ChainConfig::default()).unwrap();
    let (a, _) = enhance_clip(&sc.mixture, None, Some((&ms, &mn)), &cfg).unwrap();
    let (b, _) = enhance_clip(&sc.mixture, Some(&sc.truth()), None, &ChainConfig::default()).unwrap();
    assert_eq!(a, b);

    let bad = Mask::filled(3, 257, MaskKind::Speech, 0.5).unwrap();
    let err = enhance_clip(&sc.mixture, None, Some((&bad, &bad)), &cfg).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "masks", .. }), "{err:?}");
    let err = enhance_clip(&sc.mixture, None, None, &cfg).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "masks", .. }));
    let err = enhance_clip(&sc.mixture, None, None, &ChainConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "masks", .. }));
}

#[test]
fn stage_errors_name_the_stage() {
    let sc = scene(6, 5.0);
    let short = sc.mixture.resized(512 * 4);
    let zero = Waveform::zeros(4, short.len(), 16000);
    let s = sc.speech_image.resized(short.len());
    let truth = GroundTruth {
        speech_image: &s,
        noise_image: &zero,
        dry_speech: None,
    };
    let err = enhance_clip(&short, Some(&truth), None, &ChainConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "wpe", .. }), "{err:?}");

    let mono = sc.mixture.select(0).unwrap();
    assert!(enhance_clip(&mono, None, None, &ChainConfig::default()).is_err());
}

#[test]
fn deterministic() {
    let sc = scene(7, 5.0);
    let a = enhance_clip(&sc.mixture, Some(&sc.truth()), None, &ChainConfig::default()).unwrap();
    let b = enhance_clip(&sc.mixture, Some(&sc.truth()), None, &ChainConfig::default()).unwrap();
    assert_eq!(a, b);
}
