//! Continuation of the spectrum in the gain/loss strength `eta`.
//!
//! Branches are tracked by nearest-neighbour matching between consecutive
//! grid points. Intervals where the matching is ambiguous are bisected up to
//! a fixed depth; intervals that stay ambiguous (typically those containing
//! an exceptional point) are reported as unresolved coalescences.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RingConfig;
use crate::error::{Error, Result};
use crate::spectrum::{align_multisets, solve_spectrum};
use crate::tolerance::Tolerances;

pub const MAX_REFINE_DEPTH: usize = 10;

/// Relative jump (against the distance to the nearest other eigenvalue)
/// above which a matching step is considered ambiguous.
const AMBIGUOUS_JUMP: f64 = 0.5;

/// Window `|eta - eta_c|` used to fit splitting exponents.
pub const FIT_WINDOW: (f64, f64) = (1e-4, 1e-3);
pub const FIT_SAMPLES: usize = 10;

pub const EP_BAND: (f64, f64) = (0.35, 0.65);
pub const DIABOLICAL_BAND: (f64, f64) = (0.85, 1.15);

/// Target width of the bracket around a located coalescence.
const LOCATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumBranch {
    pub eta_grid: Vec<f64>,
    pub energies: Vec<Complex64>,
    pub real_mask: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnresolvedInterval {
    pub eta_lo: f64,
    pub eta_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub branches: Vec<SpectrumBranch>,
    /// Grid intervals whose matching stayed ambiguous at maximum depth.
    pub unresolved: Vec<UnresolvedInterval>,
}

impl SweepResult {
    pub fn eta_grid(&self) -> &[f64] {
        self.branches.first().map_or(&[], |b| &b.eta_grid)
    }

    /// Number of real eigenvalues at each grid point.
    pub fn real_counts(&self) -> Vec<usize> {
        (0..self.eta_grid().len())
            .map(|i| self.branches.iter().filter(|b| b.real_mask[i]).count())
            .collect()
    }
}

fn energies_at(cfg: &RingConfig, eta: f64) -> Result<Vec<Complex64>> {
    Ok(solve_spectrum(&cfg.with_eta(eta))?
        .into_iter()
        .map(|p| p.energy)
        .collect())
}

struct Tracker<'a> {
    cfg: &'a RingConfig,
    tol: Tolerances,
    etas: Vec<f64>,
    rows: Vec<Vec<Complex64>>,
    unresolved: Vec<UnresolvedInterval>,
}

impl Tracker<'_> {
    fn ambiguous(&self, prev: &[Complex64], next: &[Complex64]) -> bool {
        let cluster = 10.0 * self.tol.cluster;
        prev.iter().enumerate().any(|(i, &e)| {
            let sep = prev
                .iter()
                .enumerate()
                .filter(|&(j, f)| j != i && (f - e).norm() > cluster)
                .map(|(_, f)| (f - e).norm())
                .fold(f64::INFINITY, f64::min);
            (next[i] - e).norm() > AMBIGUOUS_JUMP * sep
        })
    }

    /// Appends the point `(eta, raw)` after the last tracked point,
    /// inserting midpoints while the matching is ambiguous.
    fn push(&mut self, eta: f64, raw: Vec<Complex64>, depth: usize) -> Result<()> {
        let prev_eta = *self.etas.last().expect("tracker seeded");
        let prev = self.rows.last().expect("tracker seeded").clone();
        let perm = align_multisets(&prev, &raw, None);
        let ordered: Vec<Complex64> = perm.iter().map(|&j| raw[j]).collect();
        if self.ambiguous(&prev, &ordered) {
            if depth < MAX_REFINE_DEPTH {
                let mid = 0.5 * (prev_eta + eta);
                let mid_raw = energies_at(self.cfg, mid)?;
                self.push(mid, mid_raw, depth + 1)?;
                return self.push(eta, raw, depth + 1);
            }
            self.unresolved.push(UnresolvedInterval {
                eta_lo: prev_eta,
                eta_hi: eta,
            });
        }
        self.etas.push(eta);
        self.rows.push(ordered);
        Ok(())
    }
}

/// Tracks all `N` eigenvalues over `n_points` equally spaced values of `eta`
/// (plus any refinement points).
pub fn sweep_spectrum(
    cfg: &RingConfig,
    eta_min: f64,
    eta_max: f64,
    n_points: usize,
    tol: &Tolerances,
) -> Result<SweepResult> {
    if !eta_min.is_finite() || !eta_max.is_finite() || eta_min >= eta_max || n_points < 2 {
        return Err(Error::Precondition(format!(
            "need eta_min < eta_max and at least 2 points, got [{eta_min}, {eta_max}] with {n_points}"
        )));
    }
    let step = (eta_max - eta_min) / (n_points - 1) as f64;
    let grid: Vec<f64> = (0..n_points)
        .map(|i| {
            if i + 1 == n_points {
                eta_max
            } else {
                eta_min + step * i as f64
            }
        })
        .collect();
    let spectra: Vec<Vec<Complex64>> = grid
        .par_iter()
        .map(|&eta| energies_at(cfg, eta))
        .collect::<Result<_>>()?;

    let mut spectra = spectra.into_iter();
    let first = spectra.next().expect("at least two points");
    let mut tracker = Tracker {
        cfg,
        tol: *tol,
        etas: vec![grid[0]],
        rows: vec![first],
        unresolved: Vec::new(),
    };
    for (&eta, raw) in grid.iter().skip(1).zip(spectra) {
        tracker.push(eta, raw, 0)?;
    }

    let n = cfg.n_sites();
    let branches = (0..n)
        .map(|b| {
            let energies: Vec<Complex64> = tracker.rows.iter().map(|row| row[b]).collect();
            SpectrumBranch {
                eta_grid: tracker.etas.clone(),
                real_mask: energies.iter().map(|&e| tol.is_real(e)).collect(),
                energies,
            }
        })
        .collect();
    Ok(SweepResult {
        branches,
        unresolved: tracker.unresolved,
    })
}

/// Number of eigenvalues with `|Im E|` within the reality tolerance.
pub fn count_real(cfg: &RingConfig, eta: f64, tol: &Tolerances) -> Result<usize> {
    cfg.require_pt("count_real")?;
    Ok(energies_at(cfg, eta)?
        .into_iter()
        .filter(|&e| tol.is_real(e))
        .count())
}

/// Smallest `eta >= 0` at which the spectrum stops being entirely real;
/// 0 when it is complex for every `eta > 0`.
pub fn pt_threshold(cfg: &RingConfig, tol: &Tolerances) -> Result<f64> {
    cfg.require_pt("pt_threshold")?;
    let n = cfg.n_sites();
    let all_real = |eta: f64| -> Result<bool> { Ok(count_real(cfg, eta, tol)? == n) };
    const ETA_CAP: f64 = 1e4;

    let mut lo = 0.0;
    let mut hi = None;
    let mut eta = 0.0;
    while eta < ETA_CAP {
        let next = eta + 0.01 * eta.max(1.0);
        if !all_real(next)? {
            lo = eta;
            hi = Some(next);
            break;
        }
        eta = next;
    }
    let Some(mut hi) = hi else {
        return Err(Error::Inconsistent(format!(
            "spectrum stays real up to eta = {ETA_CAP}"
        )));
    };
    while hi - lo > 1e-10 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if all_real(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let threshold = 0.5 * (lo + hi);
    Ok(if threshold <= 1e-6 { 0.0 } else { threshold })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Ep,
    ReverseEp,
    Diabolical,
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularityEvent {
    pub eta_c: f64,
    pub kind: EventKind,
    pub branches: (usize, usize),
    /// Fitted exponent `p` of `|E_i - E_j| ~ |eta - eta_c|^p`.
    pub exponent: f64,
    pub energy_c: Complex64,
}

/// The two eigenvalues at `eta` closest to `target`.
fn nearest_two(cfg: &RingConfig, eta: f64, target: Complex64) -> Result<(Complex64, Complex64)> {
    let mut e = energies_at(cfg, eta)?;
    e.sort_by(|x, y| (x - target).norm().total_cmp(&(y - target).norm()));
    Ok((e[0], e[1]))
}

/// Log-log slope of the splitting of the pair near `energy_c`, sampled at
/// `eta_c + side * delta` for `delta` across [`FIT_WINDOW`].
/// `None` when the pair does not split.
pub fn fit_exponent(
    cfg: &RingConfig,
    eta_c: f64,
    energy_c: Complex64,
    side: f64,
) -> Result<Option<f64>> {
    let (lo, hi) = FIT_WINDOW;
    let mut xs = Vec::with_capacity(FIT_SAMPLES);
    let mut ys = Vec::with_capacity(FIT_SAMPLES);
    for i in 0..FIT_SAMPLES {
        let delta = lo * (hi / lo).powf(i as f64 / (FIT_SAMPLES - 1) as f64);
        let (a, b) = nearest_two(cfg, eta_c + side * delta, energy_c)?;
        let split = (a - b).norm();
        if split <= 1e-13 {
            return Ok(None);
        }
        xs.push(delta.ln());
        ys.push(split.ln());
    }
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(Some(sxy / sxx))
}

fn in_band(p: f64, band: (f64, f64)) -> bool {
    band.0 <= p && p <= band.1
}

/// Pairs up branches that change reality in the same interval, as
/// conjugate partners on the complex side.
fn transition_pairs(sweep: &SweepResult, idx: usize, to_complex: bool) -> Vec<(usize, usize)> {
    let complex_side = if to_complex { idx + 1 } else { idx };
    let switching: Vec<usize> = sweep
        .branches
        .iter()
        .enumerate()
        .filter(|(_, b)| {
            let (before, after) = (b.real_mask[idx], b.real_mask[idx + 1]);
            if to_complex {
                before && !after
            } else {
                !before && after
            }
        })
        .map(|(i, _)| i)
        .collect();
    let mut used = vec![false; switching.len()];
    let mut pairs = Vec::new();
    for a in 0..switching.len() {
        if used[a] {
            continue;
        }
        let ea = sweep.branches[switching[a]].energies[complex_side];
        let partner = (0..switching.len())
            .filter(|&b| b != a && !used[b])
            .min_by(|&x, &y| {
                let dx = (sweep.branches[switching[x]].energies[complex_side] - ea.conj()).norm();
                let dy = (sweep.branches[switching[y]].energies[complex_side] - ea.conj()).norm();
                dx.total_cmp(&dy)
            });
        if let Some(b) = partner {
            used[a] = true;
            used[b] = true;
            pairs.push((
                switching[a].min(switching[b]),
                switching[a].max(switching[b]),
            ));
        }
    }
    pairs
}

/// Bisects `[lo, hi]` on the reality of the pair that sits near `center`.
fn locate_transition(
    cfg: &RingConfig,
    tol: &Tolerances,
    mut lo: f64,
    mut hi: f64,
    mut center_lo: Complex64,
    mut center_hi: Complex64,
    real_at_lo: bool,
) -> Result<(f64, Complex64)> {
    while hi - lo > LOCATE_TOL * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        let guess = 0.5 * (center_lo + center_hi);
        let (a, b) = nearest_two(cfg, mid, guess)?;
        let center = 0.5 * (a + b);
        let real = tol.is_real(a) && tol.is_real(b);
        if real == real_at_lo {
            lo = mid;
            center_lo = center;
        } else {
            hi = mid;
            center_hi = center;
        }
    }
    Ok((0.5 * (lo + hi), 0.5 * (center_lo + center_hi)))
}

/// Exceptional points, reverse exceptional points and diabolical points
/// along a sweep.
pub fn detect_events(
    sweep: &SweepResult,
    cfg: &RingConfig,
    tol: &Tolerances,
) -> Result<Vec<SingularityEvent>> {
    let grid = sweep.eta_grid();
    let (eta_min, eta_max) = (grid[0], grid[grid.len() - 1]);
    let mut events = Vec::new();
    let probe_diabolical = cfg.is_pt() && cfg.a() == 0.0 && eta_min <= 0.0 && 0.0 <= eta_max;

    // reality transitions
    for idx in 0..grid.len() - 1 {
        for to_complex in [true, false] {
            for (i, j) in transition_pairs(sweep, idx, to_complex) {
                let bi = &sweep.branches[i];
                let bj = &sweep.branches[j];
                let center_lo = 0.5 * (bi.energies[idx] + bj.energies[idx]);
                let center_hi = 0.5 * (bi.energies[idx + 1] + bj.energies[idx + 1]);
                let (eta_c, energy_c) = locate_transition(
                    cfg,
                    tol,
                    grid[idx],
                    grid[idx + 1],
                    center_lo,
                    center_hi,
                    to_complex,
                )?;
                if probe_diabolical && eta_c.abs() < 1e-6 {
                    // splitting out of a degeneracy at eta = 0, handled below
                    continue;
                }
                let side = if eta_c - FIT_WINDOW.1 >= eta_min {
                    -1.0
                } else {
                    1.0
                };
                let exponent = fit_exponent(cfg, eta_c, energy_c, side)?.unwrap_or(f64::NAN);
                let kind = if !in_band(exponent, EP_BAND) {
                    EventKind::Unresolved
                } else if to_complex {
                    EventKind::Ep
                } else {
                    EventKind::ReverseEp
                };
                events.push(SingularityEvent {
                    eta_c,
                    kind,
                    branches: (i, j),
                    exponent,
                    energy_c,
                });
            }
        }
    }

    // diabolical points at eta = 0 for a = 0
    if probe_diabolical {
        let zero = grid.iter().position(|&e| e == 0.0);
        if let Some(z) = zero {
            let n = sweep.branches.len();
            let mut used = vec![false; n];
            for i in 0..n {
                for j in i + 1..n {
                    if used[i] || used[j] {
                        continue;
                    }
                    let (ei, ej) = (sweep.branches[i].energies[z], sweep.branches[j].energies[z]);
                    if (ei - ej).norm() > 10.0 * tol.cluster {
                        continue;
                    }
                    used[i] = true;
                    used[j] = true;
                    let energy_c = 0.5 * (ei + ej);
                    let side = if eta_max >= FIT_WINDOW.1 { 1.0 } else { -1.0 };
                    let Some(exponent) = fit_exponent(cfg, 0.0, energy_c, side)? else {
                        continue;
                    };
                    let kind = if in_band(exponent, DIABOLICAL_BAND) {
                        EventKind::Diabolical
                    } else {
                        EventKind::Unresolved
                    };
                    events.push(SingularityEvent {
                        eta_c: 0.0,
                        kind,
                        branches: (i, j),
                        exponent,
                        energy_c,
                    });
                }
            }
        }
    }

    // remaining interior near-coalescences
    let explained = |i: usize, j: usize, eta: f64, events: &[SingularityEvent]| {
        events.iter().any(|e| {
            (e.branches == (i, j) || e.branches == (j, i))
                && (e.eta_c - eta).abs() <= 2.0 * local_step(grid, eta)
        })
    };
    let n = sweep.branches.len();
    let mut extra = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let dist: Vec<f64> = (0..grid.len())
                .map(|t| (sweep.branches[i].energies[t] - sweep.branches[j].energies[t]).norm())
                .collect();
            for t in 1..grid.len() - 1 {
                let floor = 10.0 * tol.cluster;
                if !(dist[t] <= dist[t - 1] && dist[t] <= dist[t + 1]) {
                    continue;
                }
                // persistent degeneracies are not events
                if dist[t - 1].max(dist[t + 1]) <= floor {
                    continue;
                }
                if dist[t] > 1e-2 || explained(i, j, grid[t], &events) {
                    continue;
                }
                let (eta_c, gap, energy_c) =
                    golden_minimum(cfg, sweep, i, j, grid[t - 1], grid[t + 1])?;
                if gap > floor || explained(i, j, eta_c, &events) {
                    continue;
                }
                let exponent = fit_exponent(cfg, eta_c, energy_c, -1.0)?.unwrap_or(f64::NAN);
                extra.push(SingularityEvent {
                    eta_c,
                    kind: EventKind::Unresolved,
                    branches: (i, j),
                    exponent,
                    energy_c,
                });
            }
        }
    }
    events.extend(extra);
    events.sort_by(|a, b| {
        a.eta_c
            .total_cmp(&b.eta_c)
            .then(a.branches.cmp(&b.branches))
    });
    Ok(events)
}

fn local_step(grid: &[f64], eta: f64) -> f64 {
    let pos = grid.partition_point(|&g| g < eta).min(grid.len() - 1);
    let lo = pos.saturating_sub(1);
    let hi = (pos + 1).min(grid.len() - 1);
    (grid[hi] - grid[lo]).abs().max(1e-12)
}

/// Golden-section minimization of the distance between branches `i` and `j`
/// over `[lo, hi]`; the pair is re-identified at each probe as the
/// eigenvalues nearest the interpolated branch energies.
fn golden_minimum(
    cfg: &RingConfig,
    sweep: &SweepResult,
    i: usize,
    j: usize,
    mut lo: f64,
    mut hi: f64,
) -> Result<(f64, f64, Complex64)> {
    let grid = sweep.eta_grid();
    let interp = |b: usize, eta: f64| {
        let e = &sweep.branches[b].energies;
        let pos = grid.partition_point(|&g| g < eta).clamp(1, grid.len() - 1);
        let (g0, g1) = (grid[pos - 1], grid[pos]);
        let w = if g1 > g0 { (eta - g0) / (g1 - g0) } else { 0.0 };
        e[pos - 1] * (1.0 - w) + e[pos] * w
    };
    let gap_at = |eta: f64| -> Result<(f64, Complex64)> {
        let center = 0.5 * (interp(i, eta) + interp(j, eta));
        let (a, b) = nearest_two(cfg, eta, center)?;
        Ok(((a - b).norm(), 0.5 * (a + b)))
    };
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = gap_at(x1)?;
    let mut f2 = gap_at(x2)?;
    while hi - lo > LOCATE_TOL * hi.abs().max(1.0) {
        if f1.0 < f2.0 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = gap_at(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = gap_at(x2)?;
        }
    }
    let (x, f) = if f1.0 < f2.0 { (x1, f1) } else { (x2, f2) };
    Ok((x, f.0, f.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn rejects_bad_ranges() {
        let cfg = RingConfig::pt(6, 1, 3, 0.0, 0.0).unwrap();
        assert!(sweep_spectrum(&cfg, 1.0, 1.0, 10, &tol()).is_err());
        assert!(sweep_spectrum(&cfg, 0.0, 1.0, 1, &tol()).is_err());
    }

    #[test]
    fn sweep_points_match_spectra() {
        let cfg = RingConfig::pt(6, 1, 3, 1.5, 0.0).unwrap();
        let sweep = sweep_spectrum(&cfg, 0.0, 3.0, 61, &tol()).unwrap();
        let grid = sweep.eta_grid();
        for t in [0, 17, grid.len() - 1] {
            let row: Vec<Complex64> = sweep.branches.iter().map(|b| b.energies[t]).collect();
            let expected = energies_at(&cfg, grid[t]).unwrap();
            assert!(crate::spectrum::multiset_distance(&row, &expected) < 1e-12);
            let conj: Vec<Complex64> = row.iter().map(|z| z.conj()).collect();
            assert!(crate::spectrum::multiset_distance(&row, &conj) < 1e-9);
        }
    }

    #[test]
    fn thresholds() {
        let cfg = RingConfig::pt(6, 1, 4, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(pt_threshold(&cfg, &tol()).unwrap(), 2.0, epsilon = 1e-6);
        let cfg = RingConfig::pt(5, 1, 3, 0.0, 0.0).unwrap();
        assert_eq!(pt_threshold(&cfg, &tol()).unwrap(), 0.0);
        let cfg = RingConfig::pt(6, 1, 3, 1.5, 0.0).unwrap();
        let eta_pt = pt_threshold(&cfg, &tol()).unwrap();
        assert!(eta_pt > 0.1);
        assert_abs_diff_eq!(eta_pt, 0.5328, epsilon = 1e-4);
        let n = cfg.n_sites();
        assert_eq!(count_real(&cfg, 0.999 * eta_pt, &tol()).unwrap(), n);
        assert!(count_real(&cfg, 1.001 * eta_pt, &tol()).unwrap() < n);
        assert_eq!(count_real(&cfg, 0.0, &tol()).unwrap(), n);
    }

    #[test]
    fn diabolical_points_without_onsite_energy() {
        let cfg = RingConfig::pt(6, 1, 3, 0.0, 0.0).unwrap();
        let sweep = sweep_spectrum(&cfg, 0.0, 3.0, 301, &tol()).unwrap();
        let events = detect_events(&sweep, &cfg, &tol()).unwrap();
        let diabolical: Vec<_> = events
            .iter()
            .filter(|e| e.kind == EventKind::Diabolical)
            .collect();
        assert_eq!(diabolical.len(), 2, "{events:?}");
        for e in diabolical {
            assert!((e.exponent - 1.0).abs() < 0.1);
            assert_eq!(e.eta_c, 0.0);
        }
    }

    #[test]
    fn square_root_exceptional_points() {
        let cfg = RingConfig::pt(6, 1, 3, 0.5, 0.0).unwrap();
        let sweep = sweep_spectrum(&cfg, 0.0, 3.0, 301, &tol()).unwrap();
        let events = detect_events(&sweep, &cfg, &tol()).unwrap();
        let eps: Vec<_> = events.iter().filter(|e| e.kind == EventKind::Ep).collect();
        assert!(!eps.is_empty(), "{events:?}");
        let eta_pt = pt_threshold(&cfg, &tol()).unwrap();
        assert_abs_diff_eq!(eps[0].eta_c, eta_pt, epsilon = 1e-6);
        for e in &eps {
            assert!((e.exponent - 0.5).abs() < 0.1, "{e:?}");
            assert!(e.energy_c.im.abs() < 1e-6);
        }
    }

    #[test]
    fn reconversion_events() {
        let cfg = RingConfig::pt(10, 1, 5, 0.5, 0.0).unwrap();
        let sweep = sweep_spectrum(&cfg, 0.0, 12.0, 601, &tol()).unwrap();
        let events = detect_events(&sweep, &cfg, &tol()).unwrap();
        let reverse: Vec<_> = events
            .iter()
            .filter(|e| e.kind == EventKind::ReverseEp)
            .collect();
        assert_eq!(reverse.len(), 2, "{events:?}");
        assert_abs_diff_eq!(reverse[0].eta_c, 2.202, epsilon = 2e-3);
        assert_abs_diff_eq!(reverse[1].eta_c, 2.697, epsilon = 2e-3);
        let always_real = sweep
            .branches
            .iter()
            .filter(|b| b.real_mask.iter().all(|&r| r))
            .count();
        assert_eq!(always_real, 2);
    }
}
