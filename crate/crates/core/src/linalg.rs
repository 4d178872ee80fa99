//! Dense complex linear algebra for the small per-frequency systems.
//!
//! Matrices here are at most a few dozen rows (K microphones, or K*N for the
//! WPE normal equations), so everything is plain row-major `Vec` storage.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative diagonal loading applied to every Hermitian solve unless overridden.
pub const DEFAULT_LOADING: f64 = 1e-10;

/// Maximum number of power iterations in [`principal_eigpair`].
pub const EIG_MAX_ITERATIONS: usize = 500;

/// Relative change of the eigenvalue estimate regarded as converged.
pub const EIG_TOLERANCE: f64 = 1e-12;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(alloc::format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let data = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        CMatrix { rows, cols, data }
    }

    /// Column vector.
    pub fn column(values: &[Complex64]) -> Self {
        CMatrix {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    /// `a a^H`.
    pub fn outer(a: &[Complex64]) -> Self {
        Self::from_fn(a.len(), a.len(), |i, j| a[i] * a[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn col(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Largest deviation from Hermitian symmetry relative to the largest entry.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst / scale
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves `(A + loading * trace(A)/K * I) X = B` for Hermitian `A`.
///
/// Cholesky is tried first; if the loaded matrix is not numerically positive
/// definite the solve falls back to LU with partial pivoting.
pub fn hermitian_solve(a: &CMatrix, b: &CMatrix, loading: f64) -> Result<CMatrix> {
    let k = a.rows();
    if !a.is_square() || b.rows() != k {
        return Err(Error::shape(alloc::format!(
            "cannot solve {}x{} system with {}x{} right-hand side",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if !(loading >= 0.0) || !loading.is_finite() {
        return Err(Error::invalid("diagonal loading must be finite and >= 0"));
    }
    if k == 0 {
        return Ok(CMatrix::zeros(0, b.cols()));
    }
    let mut loaded = a.clone();
    let load = loading * a.trace().re / k as f64;
    for i in 0..k {
        // exact Hermitian diagonal
        loaded[(i, i)] = Complex64::new(loaded[(i, i)].re + load, 0.0);
    }
    if let Some(l) = cholesky(&loaded) {
        return Ok(cholesky_solve(&l, b));
    }
    lu_solve(loaded, b.clone())
}

/// Lower Cholesky factor, `None` when a pivot is not strictly positive.
fn cholesky(a: &CMatrix) -> Option<CMatrix> {
    let n = a.rows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for p in 0..j {
            d -= l[(j, p)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let d = libm::sqrt(d);
        l[(j, j)] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for p in 0..j {
                s -= l[(i, p)] * l[(j, p)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = l.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        // L y = b
        for i in 0..n {
            let mut s = x[(i, c)];
            for p in 0..i {
                s -= l[(i, p)] * x[(p, c)];
            }
            x[(i, c)] = s / l[(i, i)].re;
        }
        // L^H x = y
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for p in i + 1..n {
                s -= l[(p, i)].conj() * x[(p, c)];
            }
            x[(i, c)] = s / l[(i, i)].re;
        }
    }
    x
}

fn lu_solve(mut a: CMatrix, mut b: CMatrix) -> Result<CMatrix> {
    let n = a.rows();
    let m = b.cols();
    for col in 0..n {
        let (piv, mag) = (col..n)
            .map(|r| (r, a[(r, col)].norm()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if mag == 0.0 || !mag.is_finite() {
            return Err(Error::Singular);
        }
        if piv != col {
            for j in 0..n {
                a.data.swap(col * n + j, piv * n + j);
            }
            for j in 0..m {
                b.data.swap(col * m + j, piv * m + j);
            }
        }
        let p = a[(col, col)];
        for r in col + 1..n {
            let f = a[(r, col)] / p;
            if f == ZERO {
                continue;
            }
            for j in col..n {
                let v = a[(col, j)];
                a[(r, j)] -= f * v;
            }
            for j in 0..m {
                let v = b[(col, j)];
                b[(r, j)] -= f * v;
            }
        }
    }
    for c in 0..m {
        for i in (0..n).rev() {
            let mut s = b[(i, c)];
            for j in i + 1..n {
                s -= a[(i, j)] * b[(j, c)];
            }
            b[(i, c)] = s / a[(i, i)];
        }
    }
    if b.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(b)
}

/// Dominant eigenvalue and unit eigenvector of a Hermitian PSD matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EigPair {
    pub value: f64,
    pub vector: Vec<Complex64>,
}

// Power iteration runs on A^(2^SQUARINGS); the eigenvalue ratio that limits
// convergence is raised to the same power.
const SQUARINGS: usize = 4;

/// Principal eigenpair by power iteration.
///
/// The eigenvector is normalized to unit length and its first entry that is
/// not negligible (relative to the largest entry) is made real and positive.
/// Iteration stops once the Rayleigh quotient changes by less than
/// [`EIG_TOLERANCE`] relatively and the residual `|Av - lambda v|` is at the
/// rounding level of `A`.
pub fn principal_eigpair(a: &CMatrix) -> Result<EigPair> {
    let n = a.rows();
    if !a.is_square() || n == 0 {
        return Err(Error::shape(
            "principal eigenpair needs a non-empty square matrix",
        ));
    }
    let defect = a.hermitian_defect();
    if !(defect <= 1e-8) {
        return Err(Error::invalid(alloc::format!(
            "matrix is not Hermitian (relative defect {defect:e})"
        )));
    }
    let scale = a.max_abs();
    if scale == 0.0 {
        let mut vector = vec![ZERO; n];
        vector[0] = ONE;
        return Ok(EigPair { value: 0.0, vector });
    }
    let a = a.scale(1.0 / scale);
    let a_norm = a.frobenius_norm();

    let mut power = a.clone();
    for _ in 0..SQUARINGS {
        power = power.matmul(&power);
        let m = power.max_abs();
        if m == 0.0 {
            power = a.clone();
            break;
        }
        power = power.scale(1.0 / m);
    }

    // fixed, generic start vector pushed through A once
    let start: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.37 * i as f64, 0.21 - 0.13 * i as f64))
        .collect();
    let mut v = a.matvec(&start);
    if normalize(&mut v) == 0.0 {
        v = start;
        normalize(&mut v);
    }

    let residual_tol = 1e-13 * a_norm.max(f64::MIN_POSITIVE);
    let mut lambda_prev = f64::NAN;
    let mut best = (f64::INFINITY, 0.0, v.clone());
    for _ in 0..EIG_MAX_ITERATIONS {
        let mut w = power.matvec(&v);
        if normalize(&mut w) == 0.0 {
            // start vector in the null space of the power matrix
            break;
        }
        v = w;
        let av = a.matvec(&v);
        let lambda: f64 = v.iter().zip(&av).map(|(x, y)| (x.conj() * y).re).sum();
        let residual = libm::sqrt(av.iter().zip(&v).map(|(y, x)| (y - x * lambda).norm_sqr()).sum());
        if residual < best.0 {
            best = (residual, lambda, v.clone());
        }
        let settled = (lambda - lambda_prev).abs() <= EIG_TOLERANCE * lambda.abs();
        if settled && residual <= residual_tol {
            return Ok(finish(lambda * scale, v));
        }
        lambda_prev = lambda;
    }
    let (residual, lambda, v) = best;
    Err(Error::NotConverged {
        iterations: EIG_MAX_ITERATIONS,
        residual: residual * scale,
        best: Box::new(finish(lambda * scale, v)),
    })
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let norm = libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum());
    if norm > 0.0 && norm.is_finite() {
        for z in v.iter_mut() {
            *z /= norm;
        }
        norm
    } else {
        0.0
    }
}

fn finish(value: f64, mut vector: Vec<Complex64>) -> EigPair {
    fix_phase(&mut vector);
    EigPair {
        value: value.max(0.0),
        vector,
    }
}

/// Rotates `v` so its first non-negligible entry is real and positive.
pub fn fix_phase(v: &mut [Complex64]) {
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-10 * peak) {
        let rot = first.conj() / first.norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}
