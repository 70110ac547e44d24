//! Brute-force eigensolver for general complex matrices.
//!
//! Eigenvalues come from a Householder reduction to upper Hessenberg form
//! followed by single-shift complex QR sweeps with Wilkinson shifts.
//! Eigenvectors are recovered by inverse iteration on the original matrix,
//! with Gram-Schmidt against already accepted vectors inside a degenerate
//! cluster so that semisimple multiplets get independent vectors.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ring::{matvec_residual, normalize_with_phase, ComplexMatrix};

pub const MAX_DIMENSION: usize = 4096;

/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const CLUSTER_TOL: f64 = 1e-7;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub eigenvalues: Vec<Complex64>,
    /// Unit-norm eigenvectors, one per eigenvalue.
    pub eigenvectors: Vec<Vec<Complex64>>,
    /// `|| H v - lambda v ||` per pair.
    pub residuals: Vec<f64>,
}

impl OracleResult {
    pub fn worst_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Full eigendecomposition of a square complex matrix.
///
/// Eigenvalues are returned sorted by real part, then imaginary part.
pub fn dense_eig(matrix: &ComplexMatrix) -> Result<OracleResult> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::Precondition(format!(
            "matrix is {}x{}, not square",
            n,
            matrix.ncols()
        )));
    }
    if n == 0 || n > MAX_DIMENSION {
        return Err(Error::Precondition(format!(
            "dimension {n} outside 1..={MAX_DIMENSION}"
        )));
    }
    let scale = frobenius_norm(matrix).max(f64::MIN_POSITIVE);

    let mut hess = matrix.clone();
    reduce_to_hessenberg(&mut hess);
    let mut eigenvalues = hessenberg_qr(&mut hess)?;
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    let mut eigenvectors: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for (i, &lambda) in eigenvalues.iter().enumerate() {
        let cluster: Vec<&Vec<Complex64>> = (0..i)
            .filter(|&j| (eigenvalues[j] - lambda).norm() <= CLUSTER_TOL)
            .map(|j| &eigenvectors[j])
            .collect();
        let mut best = inverse_iteration(matrix, lambda, scale, &cluster);
        let mut best_res = matvec_residual(matrix, &best, lambda);
        if !cluster.is_empty() && best_res > 1e-10 * scale {
            // defective cluster: the eigenspace is smaller than the multiplicity
            let plain = inverse_iteration(matrix, lambda, scale, &[]);
            let plain_res = matvec_residual(matrix, &plain, lambda);
            if plain_res < best_res {
                best = plain;
                best_res = plain_res;
            }
        }
        eigenvectors.push(best);
        residuals.push(best_res);
    }

    // Rayleigh-quotient refinement: never increases the residual, and pulls
    // the sqrt(eps)-split images of a defective eigenvalue back together.
    for i in 0..n {
        let v = &eigenvectors[i];
        let hv = matrix * nalgebra::DVector::from_column_slice(v);
        let rq: Complex64 = v.iter().zip(hv.iter()).map(|(a, b)| a.conj() * b).sum();
        let res = matvec_residual(matrix, v, rq);
        if res < residuals[i] {
            eigenvalues[i] = rq;
            residuals[i] = res;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (eigenvalues[a], eigenvalues[b]);
        x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im))
    });
    let result = OracleResult {
        eigenvalues: order.iter().map(|&i| eigenvalues[i]).collect(),
        eigenvectors: order.iter().map(|&i| eigenvectors[i].clone()).collect(),
        residuals: order.iter().map(|&i| residuals[i]).collect(),
    };
    let worst = result.worst_residual();
    if worst.is_nan() || worst > 1e-8 * scale.max(1.0) {
        return Err(Error::NonConvergence {
            iterations: 0,
            worst_residual: worst,
        });
    }
    Ok(result)
}

fn reduce_to_hessenberg(h: &mut ComplexMatrix) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    for col in 0..n - 2 {
        let x: Vec<Complex64> = (col + 1..n).map(|r| h[(r, col)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 {
            ONE
        } else {
            x[0] / x[0].norm()
        };
        let mut v = x;
        v[0] += phase * xnorm;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= vnorm;
        }
        // H <- (I - 2 v v^H) H
        for c in 0..n {
            let dot: Complex64 = v
                .iter()
                .enumerate()
                .map(|(i, vi)| vi.conj() * h[(col + 1 + i, c)])
                .sum();
            for (i, vi) in v.iter().enumerate() {
                h[(col + 1 + i, c)] -= 2.0 * vi * dot;
            }
        }
        // H <- H (I - 2 v v^H)
        for r in 0..n {
            let dot: Complex64 = v
                .iter()
                .enumerate()
                .map(|(i, vi)| h[(r, col + 1 + i)] * vi)
                .sum();
            for (i, vi) in v.iter().enumerate() {
                h[(r, col + 1 + i)] -= 2.0 * dot * vi.conj();
            }
        }
        for r in col + 2..n {
            h[(r, col)] = ZERO;
        }
    }
}

/// Eigenvalues of an upper Hessenberg matrix; `h` is overwritten.
fn hessenberg_qr(h: &mut ComplexMatrix) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    let mut eig = vec![ZERO; n];
    let max_iter = 30 * n.max(1);
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        // deflation
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            if sub <= f64::EPSILON * diag || sub < f64::MIN_POSITIVE * 1e3 {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if iter > max_iter {
            let worst = (1..=hi).map(|i| h[(i, i - 1)].norm()).fold(0.0, f64::max);
            return Err(Error::NonConvergence {
                iterations: total,
                worst_residual: worst,
            });
        }

        let shift = if iter.is_multiple_of(11) {
            // exceptional shift
            h[(hi, hi)] + Complex64::new(0.75, 0.25) * h[(hi, hi - 1)].norm()
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        for i in lo..=hi {
            h[(i, i)] -= shift;
        }
        let mut rotations = Vec::with_capacity(hi - lo);
        for i in lo..hi {
            let x = h[(i, i)];
            let y = h[(i + 1, i)];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (ONE, ZERO)
            } else {
                (x / r, y / r)
            };
            for col in i..=hi {
                let top = h[(i, col)];
                let bottom = h[(i + 1, col)];
                h[(i, col)] = c.conj() * top + s.conj() * bottom;
                h[(i + 1, col)] = -s * top + c * bottom;
            }
            rotations.push((c, s));
        }
        for (offset, &(c, s)) in rotations.iter().enumerate() {
            let i = lo + offset;
            for row in lo..=(i + 1).min(hi) {
                let left = h[(row, i)];
                let right = h[(row, i + 1)];
                h[(row, i)] = left * c + right * s;
                h[(row, i + 1)] = -left * s.conj() + right * c.conj();
            }
        }
        for i in lo..=hi {
            h[(i, i)] += shift;
        }
    }
    Ok(eig)
}

/// Eigenvalue of the trailing 2x2 block closest to its bottom-right entry.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) / 2.0;
    let disc = (half * half + b * c).sqrt();
    let mean = (a + d) / 2.0;
    let r1 = mean + disc;
    let r2 = mean - disc;
    if (r1 - d).norm() <= (r2 - d).norm() {
        r1
    } else {
        r2
    }
}

/// LU factorization with partial pivoting of `a - shift I`; tiny pivots are
/// replaced by a floor so nearly singular systems still solve.
struct ShiftedLu {
    lu: ComplexMatrix,
    perm: Vec<usize>,
}

impl ShiftedLu {
    fn new(a: &ComplexMatrix, shift: Complex64, scale: f64) -> Self {
        let n = a.nrows();
        let mut lu = a.clone();
        for i in 0..n {
            lu[(i, i)] -= shift;
        }
        let floor = f64::EPSILON * scale.max(1.0);
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut piv = col;
            for row in col + 1..n {
                if lu[(row, col)].norm() > lu[(piv, col)].norm() {
                    piv = row;
                }
            }
            if piv != col {
                lu.swap_rows(piv, col);
                perm.swap(piv, col);
            }
            if lu[(col, col)].norm() < floor {
                lu[(col, col)] = Complex64::new(floor, 0.0);
            }
            let p = lu[(col, col)];
            for row in col + 1..n {
                let f = lu[(row, col)] / p;
                lu[(row, col)] = f;
                if f != ZERO {
                    for j in col + 1..n {
                        let v = lu[(col, j)];
                        lu[(row, j)] -= f * v;
                    }
                }
            }
        }
        Self { lu, perm }
    }

    fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = b.len();
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                x[i] = x[i] - l * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                x[i] = x[i] - u * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }
}

fn inverse_iteration(
    a: &ComplexMatrix,
    lambda: Complex64,
    scale: f64,
    orthogonal_to: &[&Vec<Complex64>],
) -> Vec<Complex64> {
    let n = a.nrows();
    // an exact eigenvalue as shift makes defective blocks cycle between
    // vectors, so the shift is nudged off the spectrum
    let nudge = Complex64::new(1.0, 0.5) * (64.0 * f64::EPSILON * scale.max(1.0));
    let lu = ShiftedLu::new(a, lambda + nudge, scale);
    // fixed, generic start vector
    let mut v: Vec<Complex64> = (0..n)
        .map(|j| {
            Complex64::from_polar(1.0 + 0.31 * ((j * 7 + 3) % 11) as f64, 2.399_963 * j as f64)
        })
        .collect();
    for _ in 0..4 {
        let mut x = lu.solve(&v);
        for w in orthogonal_to {
            let dot: Complex64 = w.iter().zip(&x).map(|(wi, xi)| wi.conj() * xi).sum();
            for (xi, wi) in x.iter_mut().zip(w.iter()) {
                *xi -= dot * wi;
            }
        }
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            break;
        }
        v = x.into_iter().map(|z| z / norm).collect();
    }
    normalize_with_phase(&mut v);
    v
}
