//! Stationary currents of real-energy eigenstates and branch localization.
//!
//! Bonds are labelled by their right site: bond `n` joins sites `n-1` and
//! `n`, with site 0 identified with site N. The inner branch holds the bonds
//! `k < n <= k'`, the outer branch all others.

use num_complex::Complex64;
use serde::Serialize;

use crate::config::RingConfig;
use crate::error::{Error, Result};
use crate::spectrum::EigenPair;
use crate::tolerance::Tolerances;

/// Fluxes below this magnitude are treated as zero.
pub const ZERO_FLUX: f64 = 1e-10;

/// Largest standard deviation of the bond fluxes along one branch.
pub const FLUX_CONSTANCY: f64 = 1e-9;

/// Closed-form denominators below this magnitude are not trusted.
pub const MIN_DENOMINATOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportClass {
    /// Density flows from source to drain along both branches.
    TwoWayForward,
    /// The outer branch carries density from drain to source.
    BackflowLeft,
    /// The inner branch carries density from drain to source.
    BackflowRight,
    Opaque,
    /// Complex energy; no stationary current exists.
    NonStationary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxProfile {
    /// `j[n-1]` is the flux on bond `n`; empty for non-stationary states.
    pub j: Vec<f64>,
    /// Flux on the inner branch, `k < n <= k'`.
    pub j_right: f64,
    /// Flux on the outer branch.
    pub j_left: f64,
    pub throughput: f64,
    pub transport_class: TransportClass,
}

fn bond_fluxes(u: &[Complex64]) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let prev = u[(i + n - 1) % n];
            -2.0 * (u[i] * prev.conj()).im
        })
        .collect()
}

fn mean_and_stdev(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let count = values.clone().count().max(1) as f64;
    let mean = values.clone().sum::<f64>() / count;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / count;
    (mean, var.sqrt())
}

fn is_inner_bond(n: usize, cfg: &RingConfig) -> bool {
    cfg.k() < n && n <= cfg.k_prime()
}

pub fn classify_flux(j_right: f64, j_left: f64) -> TransportClass {
    if j_right.abs() <= ZERO_FLUX && j_left.abs() <= ZERO_FLUX {
        TransportClass::Opaque
    } else if j_left > ZERO_FLUX {
        TransportClass::BackflowLeft
    } else if j_right < -ZERO_FLUX {
        TransportClass::BackflowRight
    } else {
        TransportClass::TwoWayForward
    }
}

/// Bond currents of an eigenstate, computed from its vector.
pub fn local_flux(pair: &EigenPair, cfg: &RingConfig, tol: &Tolerances) -> Result<FluxProfile> {
    if !tol.is_real(pair.energy) {
        return Ok(FluxProfile {
            j: Vec::new(),
            j_right: 0.0,
            j_left: 0.0,
            throughput: 0.0,
            transport_class: TransportClass::NonStationary,
        });
    }
    let j = bond_fluxes(&pair.vector);
    let inner = (1..=cfg.n_sites())
        .filter(|&n| is_inner_bond(n, cfg))
        .map(|n| j[n - 1]);
    let outer = (1..=cfg.n_sites())
        .filter(|&n| !is_inner_bond(n, cfg))
        .map(|n| j[n - 1]);
    let (j_right, sd_right) = mean_and_stdev(inner);
    let (j_left, sd_left) = mean_and_stdev(outer);
    if sd_right.max(sd_left) > FLUX_CONSTANCY {
        return Err(Error::Inconsistent(format!(
            "flux varies along a branch (stdev {:.3e}) for E = {}",
            sd_right.max(sd_left),
            pair.energy
        )));
    }
    Ok(FluxProfile {
        j,
        j_right,
        j_left,
        throughput: j_right - j_left,
        transport_class: classify_flux(j_right, j_left),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormFlux {
    pub j_right: f64,
    pub j_left: f64,
    /// True when the denominator vanished and the direct fluxes were used.
    pub fallback: bool,
}

/// Branch currents from the quasi-momentum and the lead amplitude:
/// `J_right = 2 eta sin((N-d) t) / D |u_k|^2`,
/// `J_left = -2 eta sin(d t) / D |u_k|^2`, `D = sin(d t) + sin((N-d) t)`.
pub fn branch_flux_closed_form(
    pair: &EigenPair,
    cfg: &RingConfig,
    tol: &Tolerances,
) -> Result<ClosedFormFlux> {
    cfg.require_pt("closed-form branch flux")?;
    if !tol.is_real(pair.energy) {
        return Err(Error::Precondition(format!(
            "E = {} is not real",
            pair.energy
        )));
    }
    let theta = pair.theta;
    let s_inner = (theta * cfg.d() as f64).sin();
    let s_outer = (theta * cfg.complementary_distance() as f64).sin();
    let denom = s_inner + s_outer;
    if denom.norm() <= MIN_DENOMINATOR {
        let direct = local_flux(pair, cfg, tol)?;
        return Ok(ClosedFormFlux {
            j_right: direct.j_right,
            j_left: direct.j_left,
            fallback: true,
        });
    }
    let weight = 2.0 * cfg.eta() * pair.vector[cfg.k() - 1].norm_sqr();
    Ok(ClosedFormFlux {
        j_right: weight * (s_outer / denom).re,
        j_left: -weight * (s_inner / denom).re,
        fallback: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchWeights {
    pub w_short: f64,
    pub w_long: f64,
    pub w_leads: f64,
    /// `w_short / (w_short + w_long)`, or 0.5 when both vanish.
    pub ratio: f64,
}

/// True when the inner branch (`k < j < k'`) is the short one; equal
/// branches count the inner one as short.
pub fn inner_is_short(cfg: &RingConfig) -> bool {
    cfg.d() <= cfg.complementary_distance()
}

pub fn branch_weights(pair: &EigenPair, cfg: &RingConfig) -> BranchWeights {
    let (k, kp) = (cfg.k(), cfg.k_prime());
    let mut inner = 0.0;
    let mut outer = 0.0;
    let mut leads = 0.0;
    for (idx, u) in pair.vector.iter().enumerate() {
        let site = idx + 1;
        let w = u.norm_sqr();
        if site == k || site == kp {
            leads += w;
        } else if k < site && site < kp {
            inner += w;
        } else {
            outer += w;
        }
    }
    let (w_short, w_long) = if inner_is_short(cfg) {
        (inner, outer)
    } else {
        (outer, inner)
    };
    let total = w_short + w_long;
    let ratio = if total > 0.0 { w_short / total } else { 0.5 };
    BranchWeights {
        w_short,
        w_long,
        w_leads: leads,
        ratio,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Directionality {
    /// Most of the weight sits on the gain/loss sites.
    LeadLocalized,
    DirectionalShort,
    DirectionalLong,
    Shared,
}

/// Branch-localization thresholds on [`BranchWeights::ratio`].
pub const DIRECTIONAL_LOW: f64 = 0.05;
pub const DIRECTIONAL_HIGH: f64 = 0.95;

/// Energies closer than this to a decoupled-branch level count as matching it.
pub const LEVEL_MATCH: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionalityTag {
    pub state: usize,
    pub energy: Complex64,
    pub weights: BranchWeights,
    pub tag: Directionality,
    /// Index `r` of the matching short-branch level `2 cos(pi r / L)`.
    pub short_level: Option<usize>,
    /// Index `s` of the matching long-branch level.
    pub long_level: Option<usize>,
}

fn nearest_level(energy: Complex64, denominator: usize) -> Option<usize> {
    (1..denominator)
        .map(|r| {
            (
                r,
                (energy - 2.0 * (std::f64::consts::PI * r as f64 / denominator as f64).cos())
                    .norm(),
            )
        })
        .filter(|&(_, dist)| dist <= LEVEL_MATCH)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(r, _)| r)
}

/// Levels `2 cos(pi r / d)` and `2 cos(pi s / (N-d))` of the two open chains
/// left when the leads decouple, as `(short, long)`.
pub fn decoupled_levels(cfg: &RingConfig) -> (Vec<f64>, Vec<f64>) {
    let levels = |den: usize| {
        (1..den)
            .map(|r| 2.0 * (std::f64::consts::PI * r as f64 / den as f64).cos())
            .collect::<Vec<_>>()
    };
    let (short, long) = short_long_denominators(cfg);
    (levels(short), levels(long))
}

fn short_long_denominators(cfg: &RingConfig) -> (usize, usize) {
    if inner_is_short(cfg) {
        (cfg.d(), cfg.complementary_distance())
    } else {
        (cfg.complementary_distance(), cfg.d())
    }
}

/// Branch localization of each state of a strongly driven ring.
pub fn classify_directionality(pairs: &[EigenPair], cfg: &RingConfig) -> Vec<DirectionalityTag> {
    let (short_den, long_den) = short_long_denominators(cfg);
    pairs
        .iter()
        .enumerate()
        .map(|(state, pair)| {
            let weights = branch_weights(pair, cfg);
            let tag = if weights.w_leads >= 0.5 {
                Directionality::LeadLocalized
            } else if weights.ratio >= DIRECTIONAL_HIGH {
                Directionality::DirectionalShort
            } else if weights.ratio <= DIRECTIONAL_LOW {
                Directionality::DirectionalLong
            } else {
                Directionality::Shared
            };
            DirectionalityTag {
                state,
                energy: pair.energy,
                weights,
                tag,
                short_level: nearest_level(pair.energy, short_den),
                long_level: nearest_level(pair.energy, long_den),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::solve_spectrum;
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn hermitian_states_carry_no_current() {
        let cfg = RingConfig::pt(6, 1, 3, 0.5, 0.0).unwrap();
        for pair in solve_spectrum(&cfg).unwrap() {
            let f = local_flux(&pair, &cfg, &tol()).unwrap();
            assert!(f.j.iter().all(|j| j.abs() < 1e-14));
            assert_eq!(f.transport_class, TransportClass::Opaque);
        }
    }

    #[test]
    fn backflow_pattern_at_weak_gain() {
        let cfg = RingConfig::pt(6, 1, 3, 0.5, 0.05).unwrap();
        let pairs = solve_spectrum(&cfg).unwrap();
        let mut forward = Vec::new();
        let mut backflow = 0;
        for pair in &pairs {
            let f = local_flux(pair, &cfg, &tol()).unwrap();
            let closed = branch_flux_closed_form(pair, &cfg, &tol()).unwrap();
            assert!(!closed.fallback);
            assert_abs_diff_eq!(closed.j_right, f.j_right, epsilon = 1e-8);
            assert_abs_diff_eq!(closed.j_left, f.j_left, epsilon = 1e-8);
            let uk = pair.vector[0].norm_sqr();
            assert_abs_diff_eq!(f.throughput, 2.0 * 0.05 * uk, epsilon = 1e-8);
            assert_abs_diff_eq!(uk, pair.vector[2].norm_sqr(), epsilon = 1e-8);
            match f.transport_class {
                TransportClass::TwoWayForward => forward.push(pair.energy.re),
                TransportClass::BackflowLeft | TransportClass::BackflowRight => backflow += 1,
                other => panic!("unexpected {other:?}"),
            }
        }
        assert_eq!(backflow, 4);
        forward.sort_by(f64::total_cmp);
        assert_eq!(forward.len(), 2);
        assert!((forward[0] + 1.85).abs() < 0.01, "{forward:?}");
        assert!((forward[1] - 2.19).abs() < 0.01, "{forward:?}");
    }

    #[test]
    fn singular_states_are_opaque() {
        let cfg = RingConfig::pt(6, 1, 4, 0.5, 1.3).unwrap();
        for pair in solve_spectrum(&cfg).unwrap() {
            if (pair.energy.re.abs() - 1.0).abs() < 1e-9 {
                let f = local_flux(&pair, &cfg, &tol()).unwrap();
                assert_eq!(f.transport_class, TransportClass::Opaque);
            }
        }
    }

    #[test]
    fn symmetric_leads_split_evenly() {
        let cfg = RingConfig::pt(8, 2, 6, 0.3, 0.4).unwrap();
        for pair in solve_spectrum(&cfg).unwrap() {
            if let Ok(c) = branch_flux_closed_form(&pair, &cfg, &tol()) {
                if c.fallback {
                    continue;
                }
                let uk = pair.vector[1].norm_sqr();
                assert_abs_diff_eq!(c.j_right, 0.4 * uk, epsilon = 1e-10);
                assert_abs_diff_eq!(c.j_left, -0.4 * uk, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn complex_states_are_not_stationary() {
        let cfg = RingConfig::pt(6, 1, 3, 0.0, 1.0).unwrap();
        let pairs = solve_spectrum(&cfg).unwrap();
        let complex = pairs.iter().find(|p| p.energy.im.abs() > 0.1).unwrap();
        let f = local_flux(complex, &cfg, &tol()).unwrap();
        assert_eq!(f.transport_class, TransportClass::NonStationary);
        assert!(f.j.is_empty());
    }

    #[test]
    fn uniform_state_weights() {
        let cfg = RingConfig::pt(9, 2, 5, 0.0, 0.0).unwrap();
        let pairs = solve_spectrum(&cfg).unwrap();
        let top = pairs
            .iter()
            .max_by(|a, b| a.energy.re.total_cmp(&b.energy.re))
            .unwrap();
        let w = branch_weights(top, &cfg);
        assert_abs_diff_eq!(w.ratio, 2.0 / 7.0, epsilon = 1e-10);
        assert_abs_diff_eq!(w.w_short + w.w_long + w.w_leads, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn directional_states_at_strong_gain() {
        let cfg = RingConfig::pt(10, 1, 5, 0.5, 10.0).unwrap();
        let tags = classify_directionality(&solve_spectrum(&cfg).unwrap(), &cfg);
        let count = |d: Directionality| tags.iter().filter(|t| t.tag == d).count();
        assert_eq!(count(Directionality::LeadLocalized), 2);
        assert_eq!(count(Directionality::DirectionalShort), 2);
        assert_eq!(count(Directionality::DirectionalLong), 4);
        for t in tags
            .iter()
            .filter(|t| t.tag == Directionality::DirectionalShort)
        {
            assert!(t.short_level.is_some());
        }

        let cfg = RingConfig::pt(12, 1, 5, 0.5, 20.0).unwrap();
        let tags = classify_directionality(&solve_spectrum(&cfg).unwrap(), &cfg);
        assert!(tags
            .iter()
            .all(|t| t.tag != Directionality::DirectionalShort));
        let (short, long) = decoupled_levels(&cfg);
        assert!(short
            .iter()
            .all(|s| long.iter().any(|l| (s - l).abs() < 1e-12)));
        // one partner of the reconverted pair stays spread over both branches
        let spread: Vec<_> = tags
            .iter()
            .filter(|t| t.energy.im.abs() < 1e-9 && t.weights.ratio > 0.1 && t.weights.ratio < 0.9)
            .filter(|t| t.weights.w_leads > 1e-6)
            .collect();
        assert_eq!(spread.len(), 1, "{spread:?}");
    }

    #[test]
    fn no_localization_without_gain() {
        let cfg = RingConfig::pt(10, 1, 5, 0.5, 0.0).unwrap();
        let tags = classify_directionality(&solve_spectrum(&cfg).unwrap(), &cfg);
        assert!(
            tags.iter().all(|t| t.tag == Directionality::Shared),
            "{tags:?}"
        );
    }
}
