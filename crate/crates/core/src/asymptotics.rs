//! Perturbative and large-gain predictions for the quasi-momenta.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use serde::Serialize;

use crate::config::RingConfig;
use crate::error::{Error, Result};

/// Tolerance for recognising `theta0` as a rational multiple of pi.
const GRID_TOL: f64 = 1e-9;

/// `theta0 / pi` as a reduced fraction, if it lies on the grid `pi m / den`.
fn grid_index(theta0: f64, den: usize) -> Option<usize> {
    let m = theta0 * den as f64 / PI;
    let r = m.round();
    ((m - r).abs() <= GRID_TOL * den as f64 && r >= 0.0).then_some(r as usize)
}

/// Unperturbed free-ring quasi-momentum `2 pi m / N`, validated.
fn free_ring_index(theta0: f64, cfg: &RingConfig) -> Result<usize> {
    let n = cfg.n_sites();
    match grid_index(theta0, n) {
        Some(twice_m) if twice_m % 2 == 0 && twice_m / 2 < n => Ok(twice_m / 2),
        _ => Err(Error::Domain(format!(
            "theta0 = {theta0} is not of the form 2 pi m / {n}"
        ))),
    }
}

fn is_edge(theta0: f64) -> bool {
    theta0.sin().abs() < 1e-12
}

/// First-order shift `theta ~ theta0 + eta * delta` at `a = 0`.
///
/// `theta0 = 2 pi m / N` with `0 <= m < N`; values above pi select the
/// partner of a degenerate pair. At `theta0 = 0` or `pi` the returned shift is
/// the real coefficient `sqrt(d (N-d)) / N`.
pub fn delta_theta_eta(theta0: f64, cfg: &RingConfig) -> Result<Complex64> {
    free_ring_index(theta0, cfg)?;
    let n = cfg.n_sites() as f64;
    let d = cfg.d() as f64;
    if is_edge(theta0) {
        return Ok(Complex64::new((d * (n - d)).sqrt() / n, 0.0));
    }
    Ok(Complex64::new(0.0, (d * theta0).sin() / (n * theta0.sin())))
}

/// First-order shift `theta ~ theta0 + a * delta` at `eta = 0`.
///
/// Defined away from `theta0 = 0, pi`; see [`edge_theta_small_a`] there.
pub fn delta_theta_a(theta0: f64, cfg: &RingConfig) -> Result<f64> {
    free_ring_index(theta0, cfg)?;
    if is_edge(theta0) {
        return Err(Error::Domain(
            "theta0 = 0 or pi has a square-root shift in a; use edge_theta_small_a".into(),
        ));
    }
    let n = cfg.n_sites() as f64;
    let d = cfg.d() as f64;
    let s = theta0.sin();
    Ok((-1.0 / s + (d * theta0).cos() / s.abs()) / n)
}

/// Quasi-momentum of the band-edge state for small `a` at `eta = 0`:
/// `i sqrt(2a/N)` from `theta0 = 0`, `pi + sqrt(2a/N)` from `theta0 = pi`.
pub fn edge_theta_small_a(theta0: f64, a: f64, cfg: &RingConfig) -> Result<Complex64> {
    let root = Complex64::new(2.0 * a / cfg.n_sites() as f64, 0.0).sqrt();
    if theta0.abs() < 1e-12 {
        Ok(Complex64::i() * root)
    } else if (theta0 - PI).abs() < 1e-12 {
        Ok(Complex64::new(PI, 0.0) + root)
    } else {
        Err(Error::Domain(format!(
            "theta0 = {theta0} is not a band edge"
        )))
    }
}

/// Asymptotic energies `alpha + 1/alpha` of the pair localized on the gain
/// and loss sites, for `alpha = a + i eta` and its conjugate.
pub fn localized_pair_energy(a: f64, eta: f64) -> Result<(Complex64, Complex64)> {
    let alpha = Complex64::new(a, eta);
    if alpha.norm() <= 1.0 {
        return Err(Error::Domain(format!(
            "|a + i eta| = {} must exceed 1",
            alpha.norm()
        )));
    }
    let beta = alpha.conj();
    Ok((alpha + 1.0 / alpha, beta + 1.0 / beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LargeEtaKind {
    /// Simple root: `theta ~ theta0 + theta1 / |alpha|^2`.
    Regular,
    /// The full quasi-momentum equation vanishes at `theta0` for every `alpha`.
    SingularExact,
    /// Double root: `theta ~ theta0 +- theta1 / |alpha|`.
    HalfPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LargeEtaClass {
    pub theta0: f64,
    /// `theta0 / pi` in lowest terms.
    pub ratio: (usize, usize),
    pub kind: LargeEtaKind,
    pub first_correction: Complex64,
}

/// `g(theta) = sin(d theta) sin((N-d) theta)`, the coefficient of `|alpha|^2`.
fn g_prime(theta0: f64, cfg: &RingConfig) -> f64 {
    let d = cfg.d() as f64;
    let c = cfg.complementary_distance() as f64;
    d * (d * theta0).cos() * (c * theta0).sin() + c * (d * theta0).sin() * (c * theta0).cos()
}

/// Leading-order large-gain quasi-momenta and their first corrections.
pub fn classify_large_eta(cfg: &RingConfig) -> Result<Vec<LargeEtaClass>> {
    cfg.require_pt("large-eta classification")?;
    let n = cfg.n_sites();
    let d = cfg.d();
    let c = cfg.complementary_distance();
    let a = cfg.a();

    let mut ratios: Vec<(usize, usize)> = (1..d)
        .map(|m| (m, d))
        .chain((1..c).map(|m| (m, c)))
        .map(|(m, q)| {
            let g = m.gcd(&q);
            (m / g, q / g)
        })
        .collect();
    ratios.sort_by(|x, y| (x.0 * y.1).cmp(&(y.0 * x.1)));
    ratios.dedup();

    let out = ratios
        .into_iter()
        .map(|(m, q)| {
            let theta0 = PI * m as f64 / q as f64;
            let gp = g_prime(theta0, cfg);
            let shared = d.is_multiple_of(q) && c.is_multiple_of(q);
            let (kind, first_correction) = if !shared {
                let s = theta0.sin();
                let half = (n as f64 * theta0 / 2.0).sin();
                let ratio_n = (n as f64 * theta0).sin() / s;
                let theta1 = s * s * (4.0 * half * half + 2.0 * a * ratio_n) / gp;
                (LargeEtaKind::Regular, Complex64::new(theta1, 0.0))
            } else if (n * m / q).is_multiple_of(2) {
                (LargeEtaKind::SingularExact, Complex64::new(0.0, 0.0))
            } else {
                let theta1 = 2.0 * theta0.sin() / ((d * c) as f64).sqrt();
                (LargeEtaKind::HalfPower, Complex64::new(0.0, theta1))
            };
            LargeEtaClass {
                theta0,
                ratio: (m, q),
                kind,
                first_correction,
            }
        })
        .collect();
    Ok(out)
}

impl LargeEtaClass {
    /// Predicted quasi-momenta at defect strength `|alpha|`.
    pub fn predicted_theta(&self, alpha_norm: f64) -> Vec<Complex64> {
        let t0 = Complex64::new(self.theta0, 0.0);
        match self.kind {
            LargeEtaKind::Regular => vec![t0 + self.first_correction / (alpha_norm * alpha_norm)],
            LargeEtaKind::SingularExact => vec![t0],
            LargeEtaKind::HalfPower => vec![
                t0 + self.first_correction / alpha_norm,
                t0 - self.first_correction / alpha_norm,
            ],
        }
    }
}
