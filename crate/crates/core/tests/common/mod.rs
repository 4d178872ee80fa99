//! Independent reference implementations used as test oracles. None of them
//! shares code with the library.
#![allow(dead_code, clippy::needless_range_loop)]

use farfield_core::linalg::CMatrix;
use farfield_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn cgauss(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(gauss(rng), gauss(rng))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    let data = (0..rows * cols).map(|_| cgauss(rng)).collect();
    CMatrix::from_vec(rows, cols, data).unwrap()
}

/// `B B^H` with `B` of size k x rank, plus nothing else: PSD, rank <= `rank`.
pub fn random_psd(rng: &mut ChaCha8Rng, k: usize, rank: usize) -> CMatrix {
    let b = random_matrix(rng, k, rank);
    let mut m = b.matmul(&b.conj_transpose());
    // exact Hermitian symmetry
    for i in 0..k {
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
        for j in i + 1..k {
            m[(j, i)] = m[(i, j)].conj();
        }
    }
    m
}

pub fn random_unit(rng: &mut ChaCha8Rng, k: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..k).map(|_| cgauss(rng)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Eigenvalues (descending) and eigenvectors of a Hermitian matrix by cyclic
/// Jacobi rotations on its real 2K x 2K embedding [[A, -B], [B, A]].
///
/// Every eigenvalue of the embedding appears twice; the pairs are merged and
/// the complex eigenvector is read back as `x + i y`.
pub fn jacobi_eigen(a: &CMatrix) -> (Vec<f64>, Vec<Vec<Complex64>>) {
    let k = a.rows();
    let n = 2 * k;
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..k {
        for j in 0..k {
            let z = a[(i, j)];
            m[i][j] = z.re;
            m[i + k][j + k] = z.re;
            m[i][j + k] = -z.im;
            m[i + k][j] = z.im;
        }
    }
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let (mrp, mrq) = (m[r][p], m[r][q]);
                    m[r][p] = c * mrp - s * mrq;
                    m[r][q] = s * mrp + c * mrq;
                }
                for r in 0..n {
                    let (mpr, mqr) = (m[p][r], m[q][r]);
                    m[p][r] = c * mpr - s * mqr;
                    m[q][r] = s * mpr + c * mqr;
                }
                for r in 0..n {
                    let (vrp, vrq) = (v[r][p], v[r][q]);
                    v[r][p] = c * vrp - s * vrq;
                    v[r][q] = s * vrp + c * vrq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[y][y].total_cmp(&m[x][x]));
    // each complex eigenpair shows up as two real ones; keep every other
    let mut values = Vec::new();
    let mut vectors = Vec::new();
    for idx in order.into_iter().step_by(2) {
        values.push(m[idx][idx]);
        let z: Vec<Complex64> = (0..k).map(|i| Complex64::new(v[i][idx], v[i + k][idx])).collect();
        let norm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        vectors.push(z.into_iter().map(|c| c / norm).collect());
    }
    (values, vectors)
}

/// Gaussian elimination with partial pivoting, written out directly.
pub fn gauss_solve(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.rows();
    let m = b.cols();
    let mut aug: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| a[(i, j)])
                .chain((0..m).map(|j| b[(i, j)]))
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| aug[x][col].norm().total_cmp(&aug[y][col].norm()))
            .unwrap();
        aug.swap(col, piv);
        for row in col + 1..n {
            let f = aug[row][col] / aug[col][col];
            for j in col..n + m {
                let v = aug[col][j];
                aug[row][j] -= f * v;
            }
        }
    }
    let mut x = CMatrix::zeros(n, m);
    for c in 0..m {
        for i in (0..n).rev() {
            let mut s = aug[i][n + c];
            for j in i + 1..n {
                s -= aug[i][j] * x[(j, c)];
            }
            x[(i, c)] = s / aug[i][i];
        }
    }
    x
}

/// Dense inverse by Gauss-Jordan.
pub fn inverse(a: &CMatrix) -> CMatrix {
    gauss_solve(a, &CMatrix::identity(a.rows()))
}

/// Direct O(n m) linear convolution.
pub fn naive_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn random_signal(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// `(R_ss + mu R_nn)^{-1} R_ss u` through an explicit inverse.
pub fn dense_oracle(rs: &CMatrix, rn: &CMatrix, mu: f64, reference: usize) -> Vec<Complex64> {
    let inv = inverse(&rs.add(&rn.scale(mu)));
    inv.matmul(rs).col(reference)
}

/// Every threshold is tried: each distinct score and +inf. Returns the EER at
/// the first threshold where FRR >= FAR, interpolated linearly from the
/// previous one.
pub fn brute_force_eer(targets: &[f64], nontargets: &[f64]) -> (f64, f64) {
    let mut thresholds: Vec<f64> = targets.iter().chain(nontargets).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.push(f64::INFINITY);
    let point = |t: f64| {
        let frr = targets.iter().filter(|&&s| s < t).count() as f64 / targets.len() as f64;
        let far = nontargets.iter().filter(|&&s| s >= t).count() as f64 / nontargets.len() as f64;
        (frr, far)
    };
    let mut prev: Option<(f64, f64, f64)> = None;
    for &t in &thresholds {
        let (frr, far) = point(t);
        if frr >= far {
            return match prev {
                None => (frr, t),
                Some((tp, frr_p, far_p)) => {
                    let d0 = frr_p - far_p;
                    let d1 = frr - far;
                    let theta = -d0 / (d1 - d0);
                    let e = frr_p + theta * (frr - frr_p);
                    let thr = if t.is_finite() { tp + theta * (t - tp) } else { tp };
                    (e, thr)
                }
            };
        }
        prev = Some((t, frr, far));
    }
    unreachable!()
}

pub fn random_trials(r: &mut rand_chacha::ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let n_tar = r.random_range(1..=25);
    let n_non = r.random_range(1..=25);
    // coarse scores so ties are common
    let coarse = r.random_bool(0.5);
    let mut draw = |shift: f64| {
        let v = gauss(r) + shift;
        if coarse {
            (v * 2.0).round() / 2.0
        } else {
            v
        }
    };
    let t: Vec<f64> = (0..n_tar).map(|_| draw(1.0)).collect();
    let n: Vec<f64> = (0..n_non).map(|_| draw(0.0)).collect();
    (t, n)
}
