//! Full spectrum of a ring: oracle seeding, Newton polishing on the
//! quasi-momentum equation and closed-form eigenvectors.

use num_complex::Complex64;
use serde::Serialize;

use crate::config::RingConfig;
use crate::error::{Error, Result};
use crate::oracle::{dense_eig, frobenius_norm, OracleResult, CLUSTER_TOL};
use crate::ring::{
    build_hamiltonian, char_fn, char_poly, char_scale, eigvec_from_theta, energy_of,
    matvec_residual, normalize_with_phase, theta_of,
};

/// Largest admissible gap between a polished eigenvalue and its oracle seed.
pub const MAX_POLISH_SHIFT: f64 = 1e-6;

/// Seeds closer than this (relative) to another eigenvalue are not polished:
/// Newton on a near-double root is slow and may hop between the two roots.
const POLISH_ISOLATION: f64 = 1e-5;

const MAX_NEWTON: usize = 60;

/// Acceptable matvec residual for a closed-form eigenvector.
const ANALYTIC_RESIDUAL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorSource {
    Analytic,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenPair {
    pub theta: Complex64,
    /// Always `2 cos(theta)`.
    pub energy: Complex64,
    /// `u_1..u_N`, unit norm, first largest component real positive.
    pub vector: Vec<Complex64>,
    pub char_residual: f64,
    pub matvec_residual: f64,
    /// False when the oracle eigenvalue was kept without Newton polishing,
    /// either because it sits in a near-degenerate cluster or because Newton
    /// failed to converge.
    pub polished: bool,
    pub vector_source: VectorSource,
}

impl EigenPair {
    pub fn is_real(&self, tol: &crate::tolerance::Tolerances) -> bool {
        tol.is_real(self.energy)
    }
}

/// Solved spectrum together with the oracle decomposition that seeded it.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub pairs: Vec<EigenPair>,
    pub oracle: OracleResult,
}

impl Spectrum {
    pub fn energies(&self) -> Vec<Complex64> {
        self.pairs.iter().map(|p| p.energy).collect()
    }
}

pub fn solve_spectrum(cfg: &RingConfig) -> Result<Vec<EigenPair>> {
    Ok(solve_spectrum_with_oracle(cfg)?.pairs)
}

/// Eigenvalues only, from the oracle (conjugation-symmetrized in PT mode).
pub fn oracle_energies(cfg: &RingConfig) -> Result<Vec<Complex64>> {
    let mut e = dense_eig(&build_hamiltonian(cfg))?.eigenvalues;
    if cfg.is_pt() {
        conjugation_symmetrize(&mut e);
    }
    Ok(e)
}

/// Replaces each value by the mean of itself and the conjugate of its
/// partner, so that the multiset is exactly closed under conjugation.
///
/// The characteristic polynomial of a PT ring has real coefficients; this
/// removes the rounding asymmetry, which is largest (about `sqrt(eps)`) at
/// exceptional points.
pub fn conjugation_symmetrize(values: &mut [Complex64]) {
    let conj: Vec<Complex64> = values.iter().map(|z| z.conj()).collect();
    let perm = align_multisets(values, &conj, None);
    let snapshot = values.to_vec();
    for (i, &j) in perm.iter().enumerate() {
        let partner = conj[j];
        values[i] = (snapshot[i] + partner) / 2.0;
        if i == j {
            values[i].im = 0.0;
        }
    }
}

pub fn solve_spectrum_with_oracle(cfg: &RingConfig) -> Result<Spectrum> {
    let h = build_hamiltonian(cfg);
    let oracle = dense_eig(&h)?;
    let hnorm = frobenius_norm(&h).max(1.0);
    let mut seeds_buf = oracle.eigenvalues.clone();
    if cfg.is_pt() {
        conjugation_symmetrize(&mut seeds_buf);
    }
    let seeds = &seeds_buf;

    let mut pairs = Vec::with_capacity(seeds.len());
    for (i, &seed) in seeds.iter().enumerate() {
        let nearest_other = seeds
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, e)| (e - seed).norm())
            .fold(f64::INFINITY, f64::min);

        let mut energy = seed;
        let mut polished = false;
        if nearest_other > POLISH_ISOLATION * (1.0 + seed.norm()) {
            if let Some(root) = newton_polish(seed, cfg) {
                let gap = (root - seed).norm();
                if gap < 0.5 * nearest_other {
                    if gap > MAX_POLISH_SHIFT {
                        return Err(Error::FormulaMismatch {
                            polished: root,
                            oracle: seed,
                            gap,
                        });
                    }
                    energy = root;
                    polished = true;
                }
            }
        }

        let theta = theta_of(energy);
        let energy = energy_of(theta);
        let clustered = nearest_other <= CLUSTER_TOL;

        let oracle_vec = || {
            let mut v = oracle.eigenvectors[i].clone();
            normalize_with_phase(&mut v);
            let r = matvec_residual(&h, &v, energy);
            (v, r)
        };
        let (vector, residual, source) = if clustered {
            let (v, r) = oracle_vec();
            (v, r, VectorSource::Oracle)
        } else {
            match eigvec_from_theta(theta, cfg) {
                Ok(v) => {
                    let r = matvec_residual(&h, &v, energy);
                    if r.is_finite() && r <= ANALYTIC_RESIDUAL * hnorm {
                        (v, r, VectorSource::Analytic)
                    } else {
                        let (ov, or) = oracle_vec();
                        if or < r || !r.is_finite() {
                            (ov, or, VectorSource::Oracle)
                        } else {
                            (v, r, VectorSource::Analytic)
                        }
                    }
                }
                Err(Error::Degenerate(_)) => {
                    let (v, r) = oracle_vec();
                    (v, r, VectorSource::Oracle)
                }
                Err(e) => return Err(e),
            }
        };

        pairs.push(EigenPair {
            theta,
            energy,
            vector,
            char_residual: char_fn(theta, cfg).norm(),
            matvec_residual: residual,
            polished,
            vector_source: source,
        });
    }
    Ok(Spectrum { pairs, oracle })
}

/// Newton iteration on the energy form of the quasi-momentum equation.
/// Returns `None` on divergence.
fn newton_polish(seed: Complex64, cfg: &RingConfig) -> Option<Complex64> {
    let mut e = seed;
    for _ in 0..MAX_NEWTON {
        let (f, df, scale) = char_poly(e, cfg);
        if f.norm() <= 4.0 * f64::EPSILON * scale {
            return Some(e);
        }
        if df.norm() == 0.0 || !df.norm().is_finite() {
            return None;
        }
        let step = f / df;
        e -= step;
        if !(e.re.is_finite() && e.im.is_finite()) {
            return None;
        }
        if step.norm() <= 4.0 * f64::EPSILON * (1.0 + e.norm()) {
            return Some(e);
        }
    }
    None
}

/// Scaled residual of the quasi-momentum equation at a pair's `theta`.
pub fn scaled_char_residual(pair: &EigenPair, cfg: &RingConfig) -> f64 {
    pair.char_residual / char_scale(pair.theta, cfg)
}

/// Greedy nearest-neighbour matching of two multisets.
///
/// Returns `perm` with `b[perm[i]]` matched to `a[i]`. Candidate pairs are
/// taken in order of increasing distance; distances equal to within `1e-12`
/// are ordered by decreasing `overlap(i, j)` when one is supplied.
pub fn align_multisets(
    a: &[Complex64],
    b: &[Complex64],
    overlap: Option<&dyn Fn(usize, usize) -> f64>,
) -> Vec<usize> {
    assert_eq!(a.len(), b.len(), "multisets of different size");
    let n = a.len();
    let mut candidates: Vec<(i64, f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            let dist = (ai - bj).norm();
            let bucket = (dist / 1e-12).floor().min(i64::MAX as f64) as i64;
            let ov = overlap.map_or(0.0, |f| f(i, j));
            candidates.push((bucket, -ov, i, j));
        }
    }
    candidates.sort_by(|x, y| {
        x.0.cmp(&y.0)
            .then(x.1.total_cmp(&y.1))
            .then((x.2, x.3).cmp(&(y.2, y.3)))
    });
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for (_, _, i, j) in candidates {
        if perm[i] == usize::MAX && !used[j] {
            perm[i] = j;
            used[j] = true;
        }
    }
    perm
}

/// Largest elementwise gap after [`align_multisets`].
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let perm = align_multisets(a, b, None);
    perm.iter()
        .enumerate()
        .map(|(i, &j)| (a[i] - b[j]).norm())
        .fold(0.0, f64::max)
}

/// `|<u, v>|` for unit vectors.
pub fn overlap(u: &[Complex64], v: &[Complex64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        .norm()
}
