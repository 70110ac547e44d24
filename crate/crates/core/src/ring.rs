//! Hamiltonian, quasi-momentum equation and closed-form eigenvectors.
//!
//! Energies are parametrized by a complex quasi-momentum `theta` with
//! `E = 2 cos(theta)`. Every ratio `sin(m theta) / sin(theta)` that appears in
//! the closed forms is the Chebyshev polynomial `U_{m-1}(cos theta)`, which is
//! how the removable singularities at `theta = 0, pi` are evaluated.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::config::RingConfig;
use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// `|sin(theta)|` below this switches the closed forms to their Chebyshev limits.
pub const GUARD_BAND: f64 = 1e-6;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense `N x N` Hamiltonian of the ring.
pub fn build_hamiltonian(cfg: &RingConfig) -> ComplexMatrix {
    let n = cfg.n_sites();
    let mut h = ComplexMatrix::zeros(n, n);
    for i in 0..n - 1 {
        h[(i, i + 1)] = ONE;
        h[(i + 1, i)] = ONE;
    }
    h[(0, n - 1)] = ONE;
    h[(n - 1, 0)] = ONE;
    h[(cfg.k() - 1, cfg.k() - 1)] = cfg.alpha();
    h[(cfg.k_prime() - 1, cfg.k_prime() - 1)] = cfg.beta();
    h
}

pub fn energy_of(theta: Complex64) -> Complex64 {
    2.0 * theta.cos()
}

/// Canonical quasi-momentum of an energy: `Re theta` in `[0, pi]`, and
/// `Im theta >= 0` on the edges `Re theta = 0` or `pi`.
pub fn theta_of(energy: Complex64) -> Complex64 {
    canonical_theta((energy / 2.0).acos())
}

/// Maps any quasi-momentum to the representative with the same energy.
pub fn canonical_theta(theta: Complex64) -> Complex64 {
    let (mut re, mut im) = if (-PI..0.0).contains(&theta.re) {
        (-theta.re, -theta.im)
    } else {
        (theta.re.rem_euclid(2.0 * PI), theta.im)
    };
    if re > PI {
        re = 2.0 * PI - re;
        im = -im;
    }
    let edge = 4.0 * f64::EPSILON;
    if re <= edge && im < 0.0 {
        re = 0.0;
        im = -im;
    } else if (PI - re) <= edge * PI && im < 0.0 {
        re = PI;
        im = -im;
    }
    Complex64::new(re, im)
}

fn in_guard_band(theta: Complex64) -> bool {
    theta.sin().norm() < GUARD_BAND
}

/// Chebyshev `U_n(x)` and its derivative, for `n >= -1`.
fn cheb_u(n: i64, x: Complex64) -> (Complex64, Complex64) {
    if n < 0 {
        return (ZERO, ZERO);
    }
    let (mut u_prev, mut du_prev) = (ZERO, ZERO);
    let (mut u, mut du) = (ONE, ZERO);
    for _ in 0..n {
        let u_next = 2.0 * x * u - u_prev;
        let du_next = 2.0 * u + 2.0 * x * du - du_prev;
        u_prev = u;
        du_prev = du;
        u = u_next;
        du = du_next;
    }
    (u, du)
}

/// Chebyshev `T_n(x)` for `n >= 0`.
fn cheb_t(n: usize, x: Complex64) -> Complex64 {
    let (mut t_prev, mut t) = (ONE, x);
    if n == 0 {
        return ONE;
    }
    for _ in 1..n {
        let t_next = 2.0 * x * t - t_prev;
        t_prev = t;
        t = t_next;
    }
    t
}

/// `sin(m theta) / sin(theta)`, continued analytically through `sin(theta) = 0`.
pub fn sin_ratio(m: i64, theta: Complex64) -> Complex64 {
    if m == 0 {
        return ZERO;
    }
    if m < 0 {
        return -sin_ratio(-m, theta);
    }
    if in_guard_band(theta) {
        cheb_u(m - 1, theta.cos()).0
    } else {
        (theta * m as f64).sin() / theta.sin()
    }
}

/// The three terms of the quasi-momentum equation, in order:
/// `4 sin^2(N theta/2)`, `(alpha+beta) sin(N theta)/sin(theta)`,
/// `-alpha beta sin(d theta) sin((N-d) theta)/sin^2(theta)`.
pub fn char_terms(theta: Complex64, cfg: &RingConfig) -> [Complex64; 3] {
    let n = cfg.n_sites() as i64;
    let d = cfg.d() as i64;
    let sum = cfg.alpha() + cfg.beta();
    let prod = cfg.alpha() * cfg.beta();
    if in_guard_band(theta) {
        let x = theta.cos();
        [
            2.0 - 2.0 * cheb_t(n as usize, x),
            sum * cheb_u(n - 1, x).0,
            -prod * cheb_u(d - 1, x).0 * cheb_u(n - d - 1, x).0,
        ]
    } else {
        let s = theta.sin();
        let half = (theta * (n as f64 / 2.0)).sin();
        [
            4.0 * half * half,
            sum * (theta * n as f64).sin() / s,
            -prod * (theta * d as f64).sin() * (theta * (n - d) as f64).sin() / (s * s),
        ]
    }
}

/// Quasi-momentum function; vanishes exactly on the eigen-quasi-momenta.
pub fn char_fn(theta: Complex64, cfg: &RingConfig) -> Complex64 {
    char_terms(theta, cfg).iter().sum()
}

/// Magnitude scale of [`char_fn`] at `theta`, used to judge residuals.
pub fn char_scale(theta: Complex64, cfg: &RingConfig) -> f64 {
    1.0 + char_terms(theta, cfg).iter().map(|t| t.norm()).sum::<f64>()
}

/// The quasi-momentum function written as a polynomial in the energy.
///
/// Returns `(F(E), dF/dE, scale)`. It coincides with [`char_fn`] at
/// `E = 2 cos(theta)` and equals `-det(E - H)`.
pub fn char_poly(energy: Complex64, cfg: &RingConfig) -> (Complex64, Complex64, f64) {
    let n = cfg.n_sites() as i64;
    let d = cfg.d() as i64;
    let sum = cfg.alpha() + cfg.beta();
    let prod = cfg.alpha() * cfg.beta();
    let x = energy / 2.0;

    let t_n = cheb_t(n as usize, x);
    let (u_n1, du_n1) = cheb_u(n - 1, x);
    let (u_d, du_d) = cheb_u(d - 1, x);
    let (u_c, du_c) = cheb_u(n - d - 1, x);

    let value = 2.0 - 2.0 * t_n + sum * u_n1 - prod * u_d * u_c;
    // T_N' = N U_{N-1}
    let dvalue_dx = -2.0 * (n as f64) * u_n1 + sum * du_n1 - prod * (du_d * u_c + u_d * du_c);
    let scale = 2.0 + 2.0 * t_n.norm() + (sum * u_n1).norm() + (prod * u_d * u_c).norm();
    (value, dvalue_dx / 2.0, scale)
}

/// Homogeneous 2x2 system acting on `(u_0, u_1)` that encodes the periodic
/// boundary conditions `u_N = u_0`, `u_{N+1} = u_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryMatrix {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    /// Sum of the magnitudes of all terms entering the entries.
    pub scale: f64,
}

impl BoundaryMatrix {
    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }
}

pub fn boundary_matrix(theta: Complex64, cfg: &RingConfig) -> BoundaryMatrix {
    let n = cfg.n_sites() as i64;
    let k = cfg.k() as i64;
    let kp = cfg.k_prime() as i64;
    let alpha = cfg.alpha();
    let beta = cfg.beta();
    let r = |m: i64| sin_ratio(m, theta);

    let a_terms = [
        ONE,
        r(n - 1),
        -alpha * r(n - k) * r(k - 1),
        -beta * r(n - kp) * r(kp - 1),
        alpha * beta * r(n - kp) * r(kp - k) * r(k - 1),
    ];
    let b_terms = [
        -r(n),
        alpha * r(n - k) * r(k),
        beta * r(n - kp) * r(kp),
        -alpha * beta * r(n - kp) * r(kp - k) * r(k),
    ];
    let c_terms = [
        r(n),
        -alpha * r(n - k + 1) * r(k - 1),
        -beta * r(n - kp + 1) * r(kp - 1),
        alpha * beta * r(n - kp + 1) * r(kp - k) * r(k - 1),
    ];
    let d_terms = [
        ONE,
        -r(n + 1),
        alpha * r(n - k + 1) * r(k),
        beta * r(n - kp + 1) * r(kp),
        -alpha * beta * r(n - kp + 1) * r(kp - k) * r(k),
    ];
    let scale = [&a_terms[..], &b_terms[..], &c_terms[..], &d_terms[..]]
        .iter()
        .flat_map(|terms| terms.iter())
        .map(|t| t.norm())
        .sum();
    BoundaryMatrix {
        a: a_terms.iter().sum(),
        b: b_terms.iter().sum(),
        c: c_terms.iter().sum(),
        d: d_terms.iter().sum(),
        scale,
    }
}

/// Relative row norm below which the boundary system is treated as null.
pub const NULL_ROW_TOL: f64 = 1e-9;

/// Eigenvector `u_1..u_N` rebuilt from an eigen-quasi-momentum.
///
/// `(u_0, u_1)` is taken from the null direction of the boundary-system row
/// with the larger norm. Fails with [`Error::Degenerate`] when both rows
/// vanish, which happens when the eigenvalue is geometrically degenerate.
pub fn eigvec_from_theta(theta: Complex64, cfg: &RingConfig) -> Result<Vec<Complex64>> {
    let bm = boundary_matrix(theta, cfg);
    let top = (bm.a.norm_sqr() + bm.b.norm_sqr()).sqrt();
    let bottom = (bm.c.norm_sqr() + bm.d.norm_sqr()).sqrt();
    let (p, q, row_norm) = if top >= bottom {
        (bm.a, bm.b, top)
    } else {
        (bm.c, bm.d, bottom)
    };
    if row_norm <= NULL_ROW_TOL * bm.scale {
        return Err(Error::Degenerate(format!(
            "both boundary rows vanish at theta = {theta} (row norm {row_norm:.3e})"
        )));
    }
    // p u0 + q u1 = 0
    let (u0, u1) = (q, -p);

    let n = cfg.n_sites() as i64;
    let k = cfg.k() as i64;
    let kp = cfg.k_prime() as i64;
    let alpha = cfg.alpha();
    let beta = cfg.beta();
    let r = |m: i64| sin_ratio(m, theta);

    let u_k = u0 * r(1 - k) + u1 * r(k);
    let u_kp = u0 * r(1 - kp) + u1 * r(kp) - alpha * u_k * r(kp - k);
    let mut u: Vec<Complex64> = (1..=n)
        .map(|j| {
            let mut v = u0 * r(1 - j) + u1 * r(j);
            if j > k {
                v -= alpha * u_k * r(j - k);
            }
            if j > kp {
                v -= beta * u_kp * r(j - kp);
            }
            v
        })
        .collect();
    normalize_with_phase(&mut u);
    Ok(u)
}

/// Scales `v` to unit norm and rotates its phase so that the first component
/// of largest modulus is real and positive.
pub fn normalize_with_phase(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return;
    }
    let largest = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = v
        .iter()
        .find(|z| z.norm() >= largest * (1.0 - 1e-10))
        .copied()
        .unwrap_or(ONE);
    let phase = pivot.conj() / pivot.norm();
    for z in v.iter_mut() {
        *z = *z * phase / norm;
    }
}

/// `|| H u - E u ||_2`.
pub fn matvec_residual(h: &ComplexMatrix, u: &[Complex64], energy: Complex64) -> f64 {
    let n = u.len();
    (0..n)
        .map(|i| {
            let row: Complex64 = (0..n).map(|j| h[(i, j)] * u[j]).sum();
            (row - energy * u[i]).norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Determinant by Gaussian elimination with partial pivoting; test-only oracle.
    fn det(mut m: ComplexMatrix) -> Complex64 {
        let n = m.nrows();
        let mut det = ONE;
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&a, &b| m[(a, col)].norm().total_cmp(&m[(b, col)].norm()))
                .unwrap();
            if m[(piv, col)].norm() == 0.0 {
                return ZERO;
            }
            if piv != col {
                m.swap_rows(piv, col);
                det = -det;
            }
            det *= m[(col, col)];
            for row in col + 1..n {
                let f = m[(row, col)] / m[(col, col)];
                for j in col..n {
                    let v = m[(col, j)];
                    m[(row, j)] -= f * v;
                }
            }
        }
        det
    }

    #[test]
    fn hamiltonian_layout_and_traces() {
        let cfg = RingConfig::pt(6, 1, 3, 0.5, 1.5).unwrap();
        let h = build_hamiltonian(&cfg);
        assert_eq!(h[(0, 5)], ONE);
        assert_eq!(h[(5, 0)], ONE);
        assert_eq!(h[(0, 0)], c(0.5, 1.5));
        assert_eq!(h[(2, 2)], c(0.5, -1.5));
        assert_eq!(h[(1, 1)], ZERO);
        assert_abs_diff_eq!(h.trace().re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(h.trace().im, 0.0, epsilon = 1e-15);
        let h2 = &h * &h;
        assert_abs_diff_eq!(h2.trace().re, 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h2.trace().im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn char_fn_examples() {
        let third = c(PI / 3.0, 0.0);
        // structural singular state of N=6, d=3 for any defect strength
        for (a, eta) in [(0.5, 1.5), (-2.0, 0.1), (0.0, 7.0)] {
            let cfg = RingConfig::pt(6, 1, 4, a, eta).unwrap();
            assert!(char_fn(third, &cfg).norm() < 1e-12 * char_scale(third, &cfg));
        }
        // free ring: theta = 2 pi m / N
        for n in 3..10 {
            let cfg = RingConfig::pt(n, 1, 2, 0.0, 0.0).unwrap();
            for m in 1..n {
                let theta = c(2.0 * PI * m as f64 / n as f64, 0.0);
                assert!(char_fn(theta, &cfg).norm() < 1e-12, "n={n} m={m}");
            }
        }
        // accidental state of N=5, d=2 at a=0.5: terms 1, -1, 0
        let cfg = RingConfig::pt(5, 1, 3, 0.5, 0.7).unwrap();
        let terms = char_terms(third, &cfg);
        assert_abs_diff_eq!(terms[0].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(terms[1].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(terms[2].norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn guard_band_matches_limit() {
        let cfg = RingConfig::new(7, 2, 5, c(0.3, 0.8), c(-0.2, 0.1)).unwrap();
        for edge in [0.0, PI] {
            let inside = char_fn(c(edge + 1e-8, 0.0), &cfg);
            let outside = char_fn(c(edge + 1e-3, 0.0), &cfg);
            let exact = char_poly(2.0 * c(edge, 0.0).cos(), &cfg).0;
            assert!((inside - exact).norm() < 1e-9);
            assert!((outside - exact).norm() < 1e-2);
        }
    }

    #[test]
    fn boundary_examples() {
        // free ring, theta = 2 pi / N: the system is null
        let cfg = RingConfig::pt(8, 2, 5, 0.0, 0.0).unwrap();
        let bm = boundary_matrix(c(2.0 * PI / 8.0, 0.0), &cfg);
        assert!(bm.det().norm() < 1e-12);
        // generic theta on a PT ring: nonzero determinant, equal to char_fn
        let cfg = RingConfig::pt(6, 1, 4, 0.5, 1.0).unwrap();
        let theta = c(0.4, 0.1);
        let bm = boundary_matrix(theta, &cfg);
        assert!(bm.det().norm() > 1e-3);
        assert!((bm.det() - char_fn(theta, &cfg)).norm() < 1e-12 * bm.scale);
    }

    #[test]
    fn uniform_state_at_zero_quasi_momentum() {
        let cfg = RingConfig::pt(7, 2, 4, 0.0, 0.0).unwrap();
        let u = eigvec_from_theta(c(0.0, 0.0), &cfg).unwrap();
        for z in &u {
            assert_abs_diff_eq!(z.re, 1.0 / 7f64.sqrt(), epsilon = 1e-12);
            assert_abs_diff_eq!(z.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn phase_convention() {
        let mut v = vec![c(0.0, 1.0), c(0.0, -2.0), c(2.0, 0.0)];
        normalize_with_phase(&mut v);
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-14);
        assert!(v[1].re > 0.0);
        assert_abs_diff_eq!(v[1].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn theta_edges() {
        assert_abs_diff_eq!(energy_of(c(PI / 3.0, 0.0)).re, 1.0, epsilon = 1e-15);
        let x: f64 = 0.8;
        let theta = theta_of(c(2.0 * x.cosh(), 0.0));
        assert_eq!(theta.re, 0.0);
        assert_abs_diff_eq!(theta.im, x, epsilon = 1e-12);
        let theta = theta_of(c(-2.0 * x.cosh(), 0.0));
        assert_eq!(theta.re, PI);
        assert_abs_diff_eq!(theta.im, x, epsilon = 1e-12);
        assert_eq!(canonical_theta(c(-0.3, 0.2)), c(0.3, -0.2));
    }

    fn arb_config() -> impl Strategy<Value = RingConfig> {
        (
            3usize..13,
            any::<u64>(),
            -2.0..2.0f64,
            -4.0..4.0f64,
            -2.0..2.0f64,
            -4.0..4.0f64,
        )
            .prop_map(|(n, seed, ar, ai, br, bi)| {
                let k = 1 + (seed % (n as u64 - 1)) as usize;
                let kp = k + 1 + ((seed / 97) % (n - k) as u64) as usize;
                RingConfig::new(n, k, kp, c(ar, ai), c(br, bi)).unwrap()
            })
    }

    proptest! {
        #[test]
        fn theta_round_trip(re in -50.0..50.0f64, im in -50.0..50.0f64) {
            let e = c(re, im);
            let theta = theta_of(e);
            prop_assert!(theta.re >= 0.0 && theta.re <= PI);
            prop_assert!((energy_of(theta) - e).norm() <= 1e-12 * (1.0 + e.norm()));
        }

        #[test]
        fn char_fn_is_minus_characteristic_polynomial(cfg in arb_config(), tr in 0.05..3.1f64, ti in -1.5..1.5f64) {
            let theta = c(tr, ti);
            let e = energy_of(theta);
            let n = cfg.n_sites();
            let shifted = ComplexMatrix::from_diagonal_element(n, n, e) - build_hamiltonian(&cfg);
            let oracle = -det(shifted);
            let f = char_fn(theta, &cfg);
            let scale = char_scale(theta, &cfg);
            prop_assert!((f - oracle).norm() <= 1e-10 * scale, "f={} det={}", f, oracle);
            let (p, _, _) = char_poly(e, &cfg);
            prop_assert!((p - f).norm() <= 1e-10 * scale);
            let bm = boundary_matrix(theta, &cfg);
            // the determinant cancels between two products of entries of size `bm.scale`
            prop_assert!((bm.det() - f).norm() <= 1e-10 * scale.max(bm.scale * bm.scale));
        }

        #[test]
        fn char_poly_derivative(cfg in arb_config(), er in -3.0..3.0f64, ei in -3.0..3.0f64) {
            let e = c(er, ei);
            let h = 1e-6;
            let (_, df, scale) = char_poly(e, &cfg);
            let fd = (char_poly(e + h, &cfg).0 - char_poly(e - h, &cfg).0) / (2.0 * h);
            prop_assert!((df - fd).norm() <= 1e-6 * scale);
        }
    }
}
