//! Plot-ready CSV and JSON renderings of analysis results.
//!
//! Floats in CSV files carry 12 significant digits in scientific notation so
//! that output is byte-stable across runs.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;

use crate::spectrum::EigenPair;
use crate::sweep::{EventKind, SingularityEvent, SweepResult};
use crate::transport::{FluxProfile, TransportClass};

/// 12 significant digits, `-0` printed as `0`.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return format!("{:.11e}", 0.0);
    }
    format!("{x:.11e}")
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

/// Columns `eta, branch_id, re_E, im_E, real_flag`, one row per branch and grid point.
pub fn write_sweep_csv<W: Write>(w: W, sweep: &SweepResult) -> io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["eta", "branch_id", "re_E", "im_E", "real_flag"])?;
    for (t, &eta) in sweep.eta_grid().iter().enumerate() {
        for (b, branch) in sweep.branches.iter().enumerate() {
            let e = branch.energies[t];
            out.write_record([
                fmt_float(eta),
                b.to_string(),
                fmt_float(e.re),
                fmt_float(e.im),
                u8::from(branch.real_mask[t]).to_string(),
            ])?;
        }
    }
    out.flush()
}

/// Columns `eta, real_count`.
pub fn write_real_count_csv<W: Write>(w: W, sweep: &SweepResult) -> io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["eta", "real_count"])?;
    for (eta, count) in sweep.eta_grid().iter().zip(sweep.real_counts()) {
        out.write_record([fmt_float(*eta), count.to_string()])?;
    }
    out.flush()
}

#[derive(Debug, Clone, Serialize)]
pub struct EventRecord {
    pub eta_c: f64,
    pub kind: EventKind,
    pub exponent: f64,
    #[serde(rename = "re_E_c")]
    pub re_e_c: f64,
    #[serde(rename = "im_E_c")]
    pub im_e_c: f64,
    pub branch_i: usize,
    pub branch_j: usize,
}

impl From<&SingularityEvent> for EventRecord {
    fn from(e: &SingularityEvent) -> Self {
        EventRecord {
            eta_c: e.eta_c,
            kind: e.kind,
            exponent: e.exponent,
            re_e_c: e.energy_c.re,
            im_e_c: e.energy_c.im,
            branch_i: e.branches.0,
            branch_j: e.branches.1,
        }
    }
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)
}

pub fn write_events_json<W: Write>(w: W, events: &[SingularityEvent]) -> io::Result<()> {
    let records: Vec<EventRecord> = events.iter().map(EventRecord::from).collect();
    write_json(w, &records)
}

/// Columns `eta_c, kind, exponent, re_E_c, im_E_c, branch_i, branch_j`.
pub fn write_events_csv<W: Write>(w: W, events: &[SingularityEvent]) -> io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record([
        "eta_c", "kind", "exponent", "re_E_c", "im_E_c", "branch_i", "branch_j",
    ])?;
    for e in events {
        let kind = serde_json::to_value(e.kind)?;
        out.write_record([
            fmt_float(e.eta_c),
            kind.as_str().unwrap_or_default().to_string(),
            fmt_float(e.exponent),
            fmt_float(e.energy_c.re),
            fmt_float(e.energy_c.im),
            e.branches.0.to_string(),
            e.branches.1.to_string(),
        ])?;
    }
    out.flush()
}

/// Columns `state_id, re_theta, im_theta, re_E, im_E, matvec_residual,
/// char_residual, polished, vector_source`.
pub fn write_spectrum_csv<W: Write>(w: W, pairs: &[EigenPair]) -> io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record([
        "state_id",
        "re_theta",
        "im_theta",
        "re_E",
        "im_E",
        "matvec_residual",
        "char_residual",
        "polished",
        "vector_source",
    ])?;
    for (i, p) in pairs.iter().enumerate() {
        out.write_record([
            i.to_string(),
            fmt_float(p.theta.re),
            fmt_float(p.theta.im),
            fmt_float(p.energy.re),
            fmt_float(p.energy.im),
            fmt_float(p.matvec_residual),
            fmt_float(p.char_residual),
            u8::from(p.polished).to_string(),
            match p.vector_source {
                crate::spectrum::VectorSource::Analytic => "analytic".to_string(),
                crate::spectrum::VectorSource::Oracle => "oracle".to_string(),
            },
        ])?;
    }
    out.flush()
}

/// Columns `state_id, re_E, im_E, n, re_u, im_u, abs2_u`.
pub fn write_vectors_csv<W: Write>(w: W, pairs: &[EigenPair]) -> io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["state_id", "re_E", "im_E", "n", "re_u", "im_u", "abs2_u"])?;
    for (i, p) in pairs.iter().enumerate() {
        for (site, u) in p.vector.iter().enumerate() {
            out.write_record([
                i.to_string(),
                fmt_float(p.energy.re),
                fmt_float(p.energy.im),
                (site + 1).to_string(),
                fmt_float(u.re),
                fmt_float(u.im),
                fmt_float(u.norm_sqr()),
            ])?;
        }
    }
    out.flush()
}

/// Columns `state_id, re_E, n, j_n`; non-stationary states contribute no rows.
pub fn write_flux_csv<W: Write>(w: W, states: &[(Complex64, FluxProfile)]) -> io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["state_id", "re_E", "n", "j_n"])?;
    for (i, (energy, flux)) in states.iter().enumerate() {
        for (bond, j) in flux.j.iter().enumerate() {
            out.write_record([
                i.to_string(),
                fmt_float(energy.re),
                (bond + 1).to_string(),
                fmt_float(*j),
            ])?;
        }
    }
    out.flush()
}

#[derive(Debug, Clone, Serialize)]
pub struct FluxRecord {
    pub state_id: usize,
    #[serde(rename = "re_E")]
    pub re_e: f64,
    #[serde(rename = "im_E")]
    pub im_e: f64,
    pub transport_class: TransportClass,
    pub j_right: f64,
    pub j_left: f64,
    pub throughput: f64,
}

pub fn flux_records(states: &[(Complex64, FluxProfile)]) -> Vec<FluxRecord> {
    states
        .iter()
        .enumerate()
        .map(|(i, (e, f))| FluxRecord {
            state_id: i,
            re_e: e.re,
            im_e: e.im,
            transport_class: f.transport_class,
            j_right: f.j_right,
            j_left: f.j_left,
            throughput: f.throughput,
        })
        .collect()
}
