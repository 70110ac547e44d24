//! Eigenstates whose energy does not depend on the gain/loss strength.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use serde::Serialize;

use crate::config::RingConfig;
use crate::error::{Error, Result};
use crate::ring::{char_fn, char_scale};
use crate::spectrum::{oracle_energies, EigenPair};

/// Onsite tunings beyond this `|tan(N theta / 2)|` are treated as infinite.
pub const MAX_TAN: f64 = 1e8;

/// Lead amplitude below which a state counts as decoupled.
pub const OPAQUE_TOL: f64 = 1e-9;

const PROBE_ETAS: [f64; 2] = [0.37, 2.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularKind {
    StructuralOpaque,
    AccidentalTransparent,
}

/// Where a prediction comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// `theta = 2 pi r / M` with `M | N`.
    Divisor { m: usize, r: usize },
    /// `theta = pi m / denominator`, denominator `d` or `N - d`.
    Denominator { denominator: usize, m: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "SingularRecord")]
pub struct SingularPrediction {
    pub theta_s: f64,
    /// `theta_s / pi` in lowest terms.
    pub ratio: (usize, usize),
    pub energy: f64,
    pub kind: SingularKind,
    pub tuned_a: Option<f64>,
    pub provenance: Provenance,
}

#[derive(Serialize)]
struct SingularRecord {
    theta_over_pi: String,
    energy: f64,
    kind: SingularKind,
    tuned_a: Option<f64>,
}

impl From<SingularPrediction> for SingularRecord {
    fn from(p: SingularPrediction) -> Self {
        SingularRecord {
            theta_over_pi: format!("{}/{}", p.ratio.0, p.ratio.1),
            energy: p.energy,
            kind: p.kind,
            tuned_a: p.tuned_a,
        }
    }
}

fn reduced(num: usize, den: usize) -> (usize, usize) {
    let g = num.gcd(&den);
    (num / g, den / g)
}

fn check_geometry(n: usize, d: usize) -> Result<()> {
    if n < 3 || d < 1 || d >= n {
        return Err(Error::Config(format!(
            "need N >= 3 and 1 <= d <= N-1, got N={n}, d={d}"
        )));
    }
    Ok(())
}

/// Probe ring with the given geometry and defect.
fn probe(n: usize, d: usize, a: f64, eta: f64) -> RingConfig {
    RingConfig::pt(n, 1, 1 + d, a, eta).expect("geometry validated")
}

fn vanishes(theta: f64, cfg: &RingConfig) -> bool {
    let t = Complex64::new(theta, 0.0);
    char_fn(t, cfg).norm() <= 1e-10 * char_scale(t, cfg)
}

/// Structural singular states: `theta = 2 pi r / M` with `M | N`,
/// `0 < r < M/2` and `M | d` or `M | 2d`. These are roots of the
/// quasi-momentum equation for every defect strength.
pub fn structural_singular(n: usize, d: usize) -> Result<Vec<SingularPrediction>> {
    check_geometry(n, d)?;
    let mut out: Vec<SingularPrediction> = Vec::new();
    for m in (3..=n).filter(|m| n.is_multiple_of(*m)) {
        if !d.is_multiple_of(m) && !(2 * d).is_multiple_of(m) {
            continue;
        }
        for r in (1..).take_while(|r| 2 * r < m) {
            let ratio = reduced(2 * r, m);
            if out.iter().any(|p| p.ratio == ratio) {
                continue;
            }
            let theta_s = PI * ratio.0 as f64 / ratio.1 as f64;
            out.push(SingularPrediction {
                theta_s,
                ratio,
                energy: 2.0 * theta_s.cos(),
                kind: SingularKind::StructuralOpaque,
                tuned_a: None,
                provenance: Provenance::Divisor { m, r },
            });
        }
    }
    out.sort_by(|x, y| x.theta_s.total_cmp(&y.theta_s));
    for p in &out {
        for (a, eta) in [(0.3, PROBE_ETAS[0]), (-1.7, PROBE_ETAS[1])] {
            if !vanishes(p.theta_s, &probe(n, d, a, eta)) {
                return Err(Error::Inconsistent(format!(
                    "structural candidate theta/pi = {}/{} is not a root",
                    p.ratio.0, p.ratio.1
                )));
            }
        }
    }
    Ok(out)
}

/// Accidental singular states: `theta = pi m / D`, `D` in `{d, N-d}`, which
/// become gain-independent roots when `a = -sin(theta) tan(N theta / 2)`.
pub fn accidental_singular(n: usize, d: usize) -> Result<Vec<SingularPrediction>> {
    let structural = structural_singular(n, d)?;
    let mut out: Vec<SingularPrediction> = Vec::new();
    for den in [d, n - d] {
        for m in 1..den {
            let ratio = reduced(m, den);
            if structural
                .iter()
                .chain(out.iter())
                .any(|p| p.ratio == ratio)
            {
                continue;
            }
            let theta = PI * ratio.0 as f64 / ratio.1 as f64;
            let tan = (n as f64 * theta / 2.0).tan();
            if !tan.is_finite() || tan.abs() > MAX_TAN {
                continue;
            }
            let a = -theta.sin() * tan;
            if !PROBE_ETAS
                .iter()
                .all(|&eta| vanishes(theta, &probe(n, d, a, eta)))
            {
                continue;
            }
            out.push(SingularPrediction {
                theta_s: theta,
                ratio,
                energy: 2.0 * theta.cos(),
                kind: SingularKind::AccidentalTransparent,
                tuned_a: Some(a),
                provenance: Provenance::Denominator {
                    denominator: den,
                    m,
                },
            });
        }
    }
    out.sort_by(|x, y| x.theta_s.total_cmp(&y.theta_s));
    Ok(out)
}

/// Eigenvalues of a ring with `a = 0` and diametrically opposite leads that
/// are not structural singular states. Each satisfies `eta^2 + E^2 = 4`.
pub fn circle_law_check(cfg: &RingConfig) -> Result<Vec<Complex64>> {
    cfg.require_pt("circle law")?;
    let n = cfg.n_sites();
    if !n.is_multiple_of(2) || cfg.d() * 2 != n || cfg.a() != 0.0 {
        return Err(Error::Precondition(
            "circle law needs even N, d = N/2 and a = 0".into(),
        ));
    }
    let mut energies = oracle_energies(cfg)?;
    for s in structural_singular(n, cfg.d())? {
        for _ in 0..2 {
            let target = Complex64::new(s.energy, 0.0);
            if let Some(pos) = energies.iter().position(|e| (e - target).norm() <= 1e-7) {
                energies.remove(pos);
            }
        }
    }
    let eta = cfg.eta();
    for e in &energies {
        let gap = (eta * eta + e * e - 4.0).norm();
        if gap > 1e-8 {
            return Err(Error::Inconsistent(format!(
                "E = {e} misses the circle by {gap:.3e}"
            )));
        }
    }
    Ok(energies)
}

/// True when the state has (numerically) zero amplitude on both leads.
pub fn is_opaque(pair: &EigenPair, cfg: &RingConfig) -> bool {
    pair.vector[cfg.k() - 1].norm() <= OPAQUE_TOL
        && pair.vector[cfg.k_prime() - 1].norm() <= OPAQUE_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::solve_spectrum;
    use approx::assert_abs_diff_eq;

    fn ratios(preds: &[SingularPrediction]) -> Vec<(usize, usize)> {
        preds.iter().map(|p| p.ratio).collect()
    }

    #[test]
    fn structural_examples() {
        let s = structural_singular(6, 3).unwrap();
        assert_eq!(ratios(&s), vec![(1, 3), (2, 3)]);
        assert_abs_diff_eq!(s[0].energy, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s[1].energy, -1.0, epsilon = 1e-12);
        assert!(structural_singular(5, 2).unwrap().is_empty());
        assert_eq!(ratios(&structural_singular(12, 4).unwrap()), vec![(1, 2)]);
        for eta in [0.5, 5.0] {
            let e = oracle_energies(&RingConfig::pt(12, 1, 5, 0.5, eta).unwrap()).unwrap();
            assert!(e.iter().any(|e| e.norm() < 1e-10));
        }
    }

    #[test]
    fn accidental_examples() {
        let acc = accidental_singular(5, 2).unwrap();
        assert_eq!(ratios(&acc), vec![(1, 3), (1, 2), (2, 3)]);
        let tuned: Vec<f64> = acc.iter().map(|p| p.tuned_a.unwrap()).collect();
        assert_abs_diff_eq!(tuned[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(tuned[1], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tuned[2], 1.5, epsilon = 1e-12);
        assert!(accidental_singular(6, 3).unwrap().is_empty());
    }

    #[test]
    fn prediction_json() {
        let acc = accidental_singular(5, 2).unwrap();
        let text = serde_json::to_string(&acc[0]).unwrap();
        assert!(
            text.starts_with(r#"{"theta_over_pi":"1/3","energy":1.0"#),
            "{text}"
        );
        assert!(text.contains(r#""kind":"accidental_transparent""#));
    }

    #[test]
    fn circle_law_examples() {
        for (eta, expected) in [(1.0, 3f64.sqrt()), (0.0, 2.0)] {
            let e = circle_law_check(&RingConfig::pt(6, 1, 4, 0.0, eta).unwrap()).unwrap();
            assert_eq!(e.len(), 2);
            let mut re: Vec<f64> = e.iter().map(|z| z.re).collect();
            re.sort_by(f64::total_cmp);
            assert_abs_diff_eq!(re[0], -expected, epsilon = 1e-9);
            assert_abs_diff_eq!(re[1], expected, epsilon = 1e-9);
        }
        let e = circle_law_check(&RingConfig::pt(6, 1, 4, 0.0, 2.0).unwrap()).unwrap();
        assert!(e.iter().all(|z| z.norm() < 1e-6));
        assert!(circle_law_check(&RingConfig::pt(6, 1, 4, 0.5, 1.0).unwrap()).is_err());
        assert!(circle_law_check(&RingConfig::pt(6, 1, 3, 0.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn opacity() {
        let cfg = RingConfig::pt(6, 1, 4, 0.5, 0.8).unwrap();
        let pairs = solve_spectrum(&cfg).unwrap();
        let one = pairs
            .iter()
            .find(|p| (p.energy.re - 1.0).abs() < 1e-9)
            .unwrap();
        assert!(is_opaque(one, &cfg));
        assert!(pairs.iter().filter(|p| is_opaque(p, &cfg)).count() == 2);

        let cfg = RingConfig::pt(5, 1, 3, 0.5, 0.8).unwrap();
        let pairs = solve_spectrum(&cfg).unwrap();
        assert!(pairs.iter().all(|p| !is_opaque(p, &cfg)));
    }

    #[test]
    fn gain_independence_of_predictions() {
        for n in 3..=12 {
            for d in 1..n {
                let structural = structural_singular(n, d).unwrap();
                let accidental = accidental_singular(n, d).unwrap();
                for p in structural.iter().chain(&accidental) {
                    let a = p.tuned_a.unwrap_or(0.4);
                    for eta in [0.0, 0.7, 3.1, 10.0] {
                        let e = oracle_energies(&probe(n, d, a, eta)).unwrap();
                        assert!(
                            e.iter()
                                .any(|e| (e - Complex64::new(p.energy, 0.0)).norm() < 1e-9),
                            "N={n} d={d} {p:?} eta={eta}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn scan_finds_nothing_missed() {
        // A gain-independent root needs sin(d t) sin((N-d) t) = 0; scan for
        // those zeros and check each is either predicted or cannot be tuned.
        for n in 3..=12usize {
            for d in 1..n {
                let preds: Vec<_> = structural_singular(n, d)
                    .unwrap()
                    .into_iter()
                    .chain(accidental_singular(n, d).unwrap())
                    .collect();
                let g = |t: f64| ((d as f64 * t).sin() * ((n - d) as f64 * t).sin()).abs();
                let steps = 10_000;
                let grid: Vec<f64> = (1..steps).map(|i| PI * i as f64 / steps as f64).collect();
                for w in grid.windows(3) {
                    if !(g(w[1]) <= g(w[0]) && g(w[1]) <= g(w[2]) && g(w[1]) < 1e-2) {
                        continue;
                    }
                    let covered = preds
                        .iter()
                        .any(|p| (p.theta_s - w[1]).abs() < 2.0 * PI / steps as f64);
                    let untunable = (n as f64 * w[1] / 2.0).cos().abs() < 1e-3;
                    assert!(covered || untunable, "N={n} d={d} theta={}", w[1]);
                }
            }
        }
    }
}
