use ptring_core::export::{fmt_float, write_events_csv, write_real_count_csv, write_sweep_csv};
use ptring_core::spectrum::multiset_distance;
use ptring_core::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn general_defects_match_dense_solver() {
    let cases = [
        (7, 2, 5, c(0.3, 1.1), c(-0.4, 0.2)),
        (9, 1, 9, c(1.5, 0.0), c(0.0, -2.5)),
        (4, 1, 3, c(0.0, 0.7), c(0.0, 0.7)),
    ];
    for (n, k, kp, alpha, beta) in cases {
        let cfg = RingConfig::new(n, k, kp, alpha, beta).unwrap();
        assert!(!cfg.is_pt());
        let solved = solve_spectrum_with_oracle(&cfg).unwrap();
        assert!(multiset_distance(&solved.energies(), &solved.oracle.eigenvalues) <= 1e-8);
        let trace: Complex64 = solved.energies().iter().sum();
        assert!((trace - alpha - beta).norm() < 1e-10);
        for pair in &solved.pairs {
            assert!(pair.matvec_residual <= 1e-8);
            assert!((pair.energy - energy_of(pair.theta)).norm() < 1e-12);
        }
    }
}

#[test]
fn hermitian_point_is_fully_real() {
    for (n, kp) in [(3, 2), (8, 4), (11, 7)] {
        let cfg = RingConfig::pt(n, 1, kp, 0.8, 0.0).unwrap();
        assert_eq!(count_real(&cfg, 0.0, &Tolerances::default()).unwrap(), n);
    }
}

#[test]
fn sweep_exports_are_plot_ready() {
    let cfg = RingConfig::pt(6, 1, 3, 1.5, 0.0).unwrap();
    let tol = Tolerances::default();
    let sweep = sweep_spectrum(&cfg, 0.0, 1.0, 11, &tol).unwrap();
    let events = detect_events(&sweep, &cfg, &tol).unwrap();

    let mut rows = Vec::new();
    write_sweep_csv(&mut rows, &sweep).unwrap();
    let text = String::from_utf8(rows).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eta,branch_id,re_E,im_E,real_flag"));
    assert!(sweep.eta_grid().len() >= 11);
    assert_eq!(lines.count(), sweep.eta_grid().len() * 6);

    let mut counts = Vec::new();
    write_real_count_csv(&mut counts, &sweep).unwrap();
    let counts = String::from_utf8(counts).unwrap();
    assert!(counts.lines().nth(1).unwrap().ends_with(",6"));
    // eta_PT is about 0.53 for this ring
    let last: usize = counts
        .lines()
        .last()
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(last < 6);

    let mut ev = Vec::new();
    write_events_csv(&mut ev, &events).unwrap();
    let ev = String::from_utf8(ev).unwrap();
    assert!(ev.lines().nth(1).unwrap().contains(",ep,"));
}

#[test]
fn floats_keep_twelve_significant_digits() {
    assert_eq!(fmt_float(1.0 / 3.0), "3.33333333333e-1");
    assert_eq!(fmt_float(-0.0), fmt_float(0.0));
    let x = 2.0f64.sqrt();
    let back: f64 = fmt_float(x).parse().unwrap();
    assert!((back - x).abs() / x < 1e-11);
}
