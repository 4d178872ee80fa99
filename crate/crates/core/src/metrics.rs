//! Signal metrics (SDR, SI-SNR) and verification metrics (EER with a
//! bootstrap confidence interval).

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::par::map_indices;
use crate::{Error, Result};

/// Value reported for an exactly zero error term (and its negation for an
/// exactly zero target term).
pub const SENTINEL_DB: f64 = 300.0;

pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 1000;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;
/// Redraws allowed per bootstrap resample before giving up.
pub const MAX_REDRAWS: usize = 1000;

fn check_pair(reference: &[f64], estimate: &[f64]) -> Result<()> {
    if reference.len() != estimate.len() {
        return Err(Error::shape(format!(
            "reference has {} samples, estimate {}",
            reference.len(),
            estimate.len()
        )));
    }
    if reference.is_empty() {
        return Err(Error::EmptySignal);
    }
    Ok(())
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn ratio_db(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        SENTINEL_DB
    } else if num == 0.0 {
        -SENTINEL_DB
    } else {
        (10.0 * libm::log10(num / den)).clamp(-SENTINEL_DB, SENTINEL_DB)
    }
}

/// `10 log10(|s|^2 / |s - s_hat|^2)`.
pub fn sdr(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    check_pair(reference, estimate)?;
    let num = energy(reference);
    if num == 0.0 {
        return Err(Error::SilentSignal("reference"));
    }
    let den: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(s, e)| (s - e) * (s - e))
        .sum();
    Ok(ratio_db(num, den))
}

/// Scale-invariant SNR after removing the mean of both signals.
pub fn si_snr(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    check_pair(reference, estimate)?;
    let n = reference.len() as f64;
    let ms = reference.iter().sum::<f64>() / n;
    let me = estimate.iter().sum::<f64>() / n;
    let s: Vec<f64> = reference.iter().map(|v| v - ms).collect();
    let e: Vec<f64> = estimate.iter().map(|v| v - me).collect();
    let ss = energy(&s);
    if ss == 0.0 {
        return Err(Error::SilentSignal("reference"));
    }
    let dot: f64 = s.iter().zip(&e).map(|(a, b)| a * b).sum();
    if dot == 0.0 {
        return Ok(-SENTINEL_DB);
    }
    let scale = dot / ss;
    let target = energy(&s) * scale * scale;
    let residual: f64 = s
        .iter()
        .zip(&e)
        .map(|(a, b)| {
            let r = b - scale * a;
            r * r
        })
        .sum();
    // rounding leaves a residual of order eps * |e|^2 when e is a scaled copy
    if residual <= 1e-24 * energy(&e) {
        return Ok(SENTINEL_DB);
    }
    Ok(ratio_db(target, residual))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Label {
    Target,
    Nontarget,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trial {
    pub label: Label,
    pub score: f64,
}

impl Trial {
    pub fn target(score: f64) -> Self {
        Trial {
            label: Label::Target,
            score,
        }
    }

    pub fn nontarget(score: f64) -> Self {
        Trial {
            label: Label::Nontarget,
            score,
        }
    }
}

/// Labeled verification scores.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialSet {
    trials: Vec<Trial>,
}

impl TrialSet {
    pub fn new(trials: Vec<Trial>) -> Result<Self> {
        if let Some(t) = trials.iter().find(|t| !t.score.is_finite()) {
            return Err(Error::invalid(format!("non-finite score {}", t.score)));
        }
        Ok(TrialSet { trials })
    }

    pub fn from_scores(targets: &[f64], nontargets: &[f64]) -> Result<Self> {
        let trials = targets
            .iter()
            .map(|&s| Trial::target(s))
            .chain(nontargets.iter().map(|&s| Trial::nontarget(s)))
            .collect();
        Self::new(trials)
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.trials.iter().filter(|t| t.label == label).count()
    }

    pub fn has_both_classes(&self) -> bool {
        self.count(Label::Target) > 0 && self.count(Label::Nontarget) > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EerPoint {
    pub eer: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EerResult {
    pub eer: f64,
    pub threshold: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    #[cfg_attr(feature = "serde", serde(rename = "b"))]
    pub bootstrap_b: usize,
    pub seed: u64,
    /// Resamples redrawn because they lacked one of the classes.
    pub skipped: usize,
}

/// Equal error rate.
///
/// Operating points are evaluated at every distinct score and above the
/// largest one. A trial is accepted when its score is `>= threshold`, so
/// `FRR(t) = #{targets < t} / N_tar` and `FAR(t) = #{nontargets >= t} / N_non`.
/// The EER is the crossing of the two curves, linearly interpolated between
/// the last operating point with `FRR < FAR` and the first with `FRR >= FAR`.
pub fn eer(trials: &TrialSet) -> Result<EerPoint> {
    let n_tar = trials.count(Label::Target);
    let n_non = trials.count(Label::Nontarget);
    if n_tar == 0 || n_non == 0 {
        return Err(Error::SingleClass);
    }
    let mut sorted: Vec<Trial> = trials.trials().to_vec();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));

    // walk thresholds upward; `below_*` counts trials with score < threshold
    let mut below_tar = 0usize;
    let mut below_non = 0usize;
    let mut prev: Option<(f64, f64, f64)> = None; // (threshold, frr, far)
    let mut i = 0;
    loop {
        let threshold = if i < sorted.len() {
            sorted[i].score
        } else {
            f64::INFINITY
        };
        let frr = below_tar as f64 / n_tar as f64;
        let far = (n_non - below_non) as f64 / n_non as f64;
        if frr >= far {
            return Ok(match prev {
                None => EerPoint { eer: frr, threshold },
                Some(p) => interpolate(p, (threshold, frr, far)),
            });
        }
        prev = Some((threshold, frr, far));
        if i >= sorted.len() {
            unreachable!("FRR reaches 1 and FAR 0 above the largest score");
        }
        while i < sorted.len() && sorted[i].score == threshold {
            match sorted[i].label {
                Label::Target => below_tar += 1,
                Label::Nontarget => below_non += 1,
            }
            i += 1;
        }
    }
}

/// Linear interpolation between the operating point `a` (FRR < FAR) and `b`
/// (FRR >= FAR).
fn interpolate(a: (f64, f64, f64), b: (f64, f64, f64)) -> EerPoint {
    let (ta, frr_a, far_a) = a;
    let (tb, frr_b, far_b) = b;
    let da = frr_a - far_a;
    let db = frr_b - far_b;
    let theta = -da / (db - da);
    let eer = frr_a + theta * (frr_b - frr_a);
    let threshold = if tb.is_finite() {
        ta + theta * (tb - ta)
    } else {
        ta
    };
    EerPoint { eer, threshold }
}

/// Linear-interpolation percentile (`q` in `[0, 1]`) of sorted values.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Median of unsorted values; the midpoint of the two central values when
/// their count is even.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => (v[n / 2 - 1] + v[n / 2]) / 2.0,
    }
}

/// Nonparametric bootstrap of `statistic` over resamples (with replacement)
/// of `items`.
///
/// Resample `i` draws from its own ChaCha stream derived from `seed` and `i`,
/// so the result does not depend on how resamples are scheduled. Resamples
/// for which `statistic` returns `None` are redrawn. Returns the sorted
/// statistics and the number of redraws.
pub fn bootstrap<T, F>(items: &[T], resamples: usize, seed: u64, statistic: F) -> Result<(Vec<f64>, usize)>
where
    T: Clone + Send + Sync,
    F: Fn(&[T]) -> Option<f64> + Sync + Send,
{
    if items.is_empty() {
        return Err(Error::EmptySignal);
    }
    let per_resample = map_indices(resamples, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut sample = Vec::with_capacity(items.len());
        for redraw in 0..=MAX_REDRAWS {
            sample.clear();
            sample.extend((0..items.len()).map(|_| items[rng.random_range(0..items.len())].clone()));
            if let Some(v) = statistic(&sample) {
                return Some((v, redraw));
            }
        }
        None
    });
    let mut values = Vec::with_capacity(resamples);
    let mut skipped = 0;
    for r in per_resample {
        let (v, redraws) = r.ok_or(Error::SingleClass)?;
        values.push(v);
        skipped += redraws;
    }
    values.sort_by(f64::total_cmp);
    Ok((values, skipped))
}

/// EER with a percentile bootstrap confidence interval at `confidence`.
///
/// The interval is widened if needed so that it always contains the point
/// estimate.
pub fn bootstrap_ci_with(
    trials: &TrialSet,
    resamples: usize,
    seed: u64,
    confidence: f64,
) -> Result<EerResult> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::invalid("confidence must be in (0, 1)"));
    }
    if resamples == 0 {
        return Err(Error::invalid("bootstrap needs at least one resample"));
    }
    let point = eer(trials)?;
    let (values, skipped) = bootstrap(trials.trials(), resamples, seed, |sample| {
        let set = TrialSet {
            trials: sample.to_vec(),
        };
        eer(&set).ok().map(|p| p.eer)
    })?;
    let tail = (1.0 - confidence) / 2.0;
    let lo = percentile_sorted(&values, tail);
    let hi = percentile_sorted(&values, 1.0 - tail);
    Ok(EerResult {
        eer: point.eer,
        threshold: point.threshold,
        ci_low: lo.min(point.eer),
        ci_high: hi.max(point.eer),
        bootstrap_b: resamples,
        seed,
        skipped,
    })
}

/// 95 % bootstrap interval of the EER.
pub fn bootstrap_ci(trials: &TrialSet, resamples: usize, seed: u64) -> Result<EerResult> {
    bootstrap_ci_with(trials, resamples, seed, DEFAULT_CONFIDENCE)
}

/// Percentile bootstrap interval of the mean of `values`.
pub fn mean_ci(values: &[f64], resamples: usize, seed: u64, confidence: f64) -> Result<(f64, f64)> {
    let (boot, _) = bootstrap(values, resamples, seed, |s| {
        Some(s.iter().sum::<f64>() / s.len() as f64)
    })?;
    let tail = (1.0 - confidence) / 2.0;
    Ok((
        percentile_sorted(&boot, tail),
        percentile_sorted(&boot, 1.0 - tail),
    ))
}
