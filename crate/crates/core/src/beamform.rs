//! Mask-based multichannel Wiener filtering.
//!
//! Spatial correlation matrices are estimated per frequency from the masked
//! mixture,
//!
//! ```text
//! R(f) = 1/T * sum_t (m(t,f) y(t,f)) (m(t,f) y(t,f))^H
//! ```
//!
//! once with the speech mask (`R_ss`) and once with the noise mask (`R_nn`).
//! The speech-distortion-weighted MWF is then
//!
//! ```text
//! w(f) = (R_ss(f) + mu R_nn(f))^{-1} R_ss(f) u
//! ```
//!
//! where `u` selects the reference channel. `mu = 1` is the plain MWF; larger
//! `mu` removes more noise at the cost of more speech distortion. With `rank1`
//! set, `R_ss` is first replaced by its best rank-1 approximation
//! `lambda_1 v_1 v_1^H`, matching the single-source model.
//!
//! The normalization is `1/T` regardless of how much mask weight a bin holds.
//! One filter is computed per clip and applied to every frame.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::linalg::{hermitian_solve, principal_eigpair, CMatrix, DEFAULT_LOADING};
use crate::mask::Mask;
use crate::par::map_indices;
use crate::stft::TfGrid;
use crate::{Error, Result};

/// Stack of `F` Hermitian `K x K` matrices, one per frequency bin.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianStack {
    dim: usize,
    matrices: Vec<CMatrix>,
}

/// Relative tolerance of the Hermitian check on construction.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

impl HermitianStack {
    pub fn new(matrices: Vec<CMatrix>) -> Result<Self> {
        let dim = matrices.first().map_or(0, CMatrix::rows);
        for (f, m) in matrices.iter().enumerate() {
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::shape(format!(
                    "bin {f}: {}x{} matrix in a {dim}x{dim} stack",
                    m.rows(),
                    m.cols()
                )));
            }
            let defect = m.hermitian_defect();
            if !(defect <= HERMITIAN_TOLERANCE) {
                return Err(Error::invalid(format!(
                    "bin {f}: matrix not Hermitian (relative defect {defect:e})"
                )));
            }
        }
        Ok(HermitianStack { dim, matrices })
    }

    /// Channel count `K`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Bin count `F`.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn get(&self, f: usize) -> &CMatrix {
        &self.matrices[f]
    }
}

/// Per-bin complex filter vectors `w(f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerWeights {
    channels: usize,
    weights: Vec<Vec<Complex64>>,
    silent_bins: usize,
}

impl BeamformerWeights {
    pub fn new(weights: Vec<Vec<Complex64>>) -> Result<Self> {
        let channels = weights.first().map_or(0, Vec::len);
        if weights.iter().any(|w| w.len() != channels) {
            return Err(Error::shape("weight vectors of different lengths"));
        }
        if weights
            .iter()
            .flatten()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::invalid("non-finite beamformer weight"));
        }
        Ok(BeamformerWeights {
            channels,
            weights,
            silent_bins: 0,
        })
    }

    /// Reference-channel selector `u` in every bin.
    pub fn selector(channels: usize, bins: usize, reference_channel: usize) -> Result<Self> {
        if reference_channel >= channels {
            return Err(Error::ChannelOutOfRange {
                index: reference_channel,
                channels,
            });
        }
        let mut u = vec![Complex64::new(0.0, 0.0); channels];
        u[reference_channel] = Complex64::new(1.0, 0.0);
        Self::new(vec![u; bins])
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn bins(&self) -> usize {
        self.weights.len()
    }

    pub fn get(&self, f: usize) -> &[Complex64] {
        &self.weights[f]
    }

    pub fn as_slices(&self) -> &[Vec<Complex64>] {
        &self.weights
    }

    /// Bins where both correlation matrices were zero and the filter was set
    /// to zero.
    pub fn silent_bins(&self) -> usize {
        self.silent_bins
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct BeamformerConfig {
    /// Speech distortion / noise reduction trade-off.
    pub mu: f64,
    /// Replace `R_ss` by its rank-1 approximation before solving.
    pub rank1: bool,
    pub reference_channel: usize,
    /// Relative diagonal loading of `R_ss + mu R_nn`.
    pub diagonal_loading: f64,
}

impl Default for BeamformerConfig {
    fn default() -> Self {
        BeamformerConfig {
            mu: 0.1,
            rank1: true,
            reference_channel: 0,
            diagonal_loading: DEFAULT_LOADING,
        }
    }
}

impl BeamformerConfig {
    /// Plain MWF: `mu = 1`, full-rank speech covariance.
    pub fn mwf() -> Self {
        BeamformerConfig {
            mu: 1.0,
            rank1: false,
            ..Self::default()
        }
    }

    pub fn validate(&self, channels: usize) -> Result<()> {
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::invalid(format!(
                "mu must be finite and >= 0, got {}",
                self.mu
            )));
        }
        if !(self.diagonal_loading >= 0.0) || !self.diagonal_loading.is_finite() {
            return Err(Error::invalid("diagonal loading must be finite and >= 0"));
        }
        if self.reference_channel >= channels {
            return Err(Error::ChannelOutOfRange {
                index: self.reference_channel,
                channels,
            });
        }
        Ok(())
    }
}

/// Mask-weighted spatial correlation of every bin. The mask is applied to all
/// channels of `y`.
pub fn estimate_covariance(y: &TfGrid, m: &Mask) -> Result<HermitianStack> {
    if !m.fits(y) {
        return Err(Error::shape(format!(
            "mask {}x{} vs grid {}x{}",
            m.frames(),
            m.bins(),
            y.frames(),
            y.bins()
        )));
    }
    let frames = y.frames();
    if frames == 0 {
        return Err(Error::ClipTooShort {
            frames: 0,
            required: 0,
        });
    }
    let k = y.num_channels();
    let norm = 1.0 / frames as f64;
    let matrices = map_indices(y.bins(), |f| {
        let mut r = CMatrix::zeros(k, k);
        let mut s = vec![Complex64::new(0.0, 0.0); k];
        for t in 0..frames {
            let g = m.get(t, f);
            if g == 0.0 {
                continue;
            }
            for (c, v) in s.iter_mut().enumerate() {
                *v = y.get(c, t, f) * g;
            }
            // upper triangle, mirrored below so the result is exactly Hermitian
            for i in 0..k {
                for j in i..k {
                    r[(i, j)] += s[i] * s[j].conj();
                }
            }
        }
        for i in 0..k {
            r[(i, i)] = Complex64::new(r[(i, i)].re * norm, 0.0);
            for j in i + 1..k {
                let v = r[(i, j)] * norm;
                r[(i, j)] = v;
                r[(j, i)] = v.conj();
            }
        }
        r
    });
    Ok(HermitianStack { dim: k, matrices })
}

/// Replaces every matrix by `lambda_1 v_1 v_1^H`.
pub fn rank1_project(r: &HermitianStack) -> Result<HermitianStack> {
    let projected: Vec<Result<CMatrix>> = map_indices(r.len(), |f| {
        let e = principal_eigpair(r.get(f))?;
        Ok(CMatrix::outer(&e.vector).scale(e.value))
    });
    let matrices = projected.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(HermitianStack {
        dim: r.dim(),
        matrices,
    })
}

/// `w(f) = (R_ss + mu R_nn)^{-1} R_ss u` for every bin.
///
/// Bins where both matrices are identically zero get a zero filter; the count
/// is available from [`BeamformerWeights::silent_bins`].
pub fn sdw_mwf_weights(
    r_ss: &HermitianStack,
    r_nn: &HermitianStack,
    cfg: &BeamformerConfig,
) -> Result<BeamformerWeights> {
    if r_ss.dim() != r_nn.dim() || r_ss.len() != r_nn.len() {
        return Err(Error::shape(format!(
            "speech stack {}x{}x{} vs noise stack {}x{}x{}",
            r_ss.len(),
            r_ss.dim(),
            r_ss.dim(),
            r_nn.len(),
            r_nn.dim(),
            r_nn.dim()
        )));
    }
    let k = r_ss.dim();
    cfg.validate(k)?;
    let projected;
    let r_ss = if cfg.rank1 {
        projected = rank1_project(r_ss)?;
        &projected
    } else {
        r_ss
    };
    let solved: Vec<Result<Option<Vec<Complex64>>>> = map_indices(r_ss.len(), |f| {
        let rs = r_ss.get(f);
        let rn = r_nn.get(f);
        if rs.max_abs() == 0.0 && rn.max_abs() == 0.0 {
            return Ok(None);
        }
        let a = rs.add(&rn.scale(cfg.mu));
        let rhs = CMatrix::column(&rs.col(cfg.reference_channel));
        let w = hermitian_solve(&a, &rhs, cfg.diagonal_loading)?;
        Ok(Some(w.col(0)))
    });
    let mut silent = 0;
    let mut weights = Vec::with_capacity(solved.len());
    for w in solved {
        match w? {
            Some(w) => weights.push(w),
            None => {
                silent += 1;
                weights.push(vec![Complex64::new(0.0, 0.0); k]);
            }
        }
    }
    let mut out = BeamformerWeights::new(weights)?;
    out.channels = k;
    out.silent_bins = silent;
    Ok(out)
}

/// Single-channel output `w(f)^H y(t, f)`.
pub fn apply_weights(y: &TfGrid, w: &BeamformerWeights) -> Result<TfGrid> {
    if w.channels() != y.num_channels() || w.bins() != y.bins() {
        return Err(Error::shape(format!(
            "weights {}x{} vs grid with {} channels and {} bins",
            w.bins(),
            w.channels(),
            y.num_channels(),
            y.bins()
        )));
    }
    let mut out = y.zeros_like(1);
    for t in 0..y.frames() {
        for f in 0..y.bins() {
            let v: Complex64 = w
                .get(f)
                .iter()
                .enumerate()
                .map(|(k, wk)| wk.conj() * y.get(k, t, f))
                .sum();
            out.set(0, t, f, v);
        }
    }
    Ok(out)
}
