//! Artifact writers. Floats in CSV files carry 17 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use steadyfront::eulerian_bridge::EulerianField;
use steadyfront::front_tracking::{Event, EventKind, PiecewiseSolution};
use steadyfront::functionals::FunctionalSnapshot;
use steadyfront::GasConstants;

use crate::error::{CliError, CliResult};

pub const SOLUTION_COLUMNS: &[&str] = &["xi", "eta", "u", "v", "p", "rho", "b"];
pub const FUNCTIONAL_COLUMNS: &[&str] = &["xi", "V", "Q_A", "Q_b", "G", "Phi", "L1"];
pub const SWEEP_COLUMNS: &[&str] = &["delta_coarse", "delta_fine", "L1"];
pub const BOUNDARY_COLUMNS: &[&str] = &["x", "g"];
pub const REGION_COLUMNS: &[&str] = &[
    "region", "kind", "x0", "y0", "x1", "y1", "x2", "y2", "x3", "y3", "u", "v", "p", "rho", "b",
];

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub struct CsvOut {
    writer: csv::Writer<BufWriter<File>>,
    path: String,
}

impl CsvOut {
    pub fn create(path: &Path, header: &[&str]) -> CliResult<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut out = Self {
            writer: csv::Writer::from_writer(BufWriter::new(file)),
            path: path.display().to_string(),
        };
        out.row(header.iter().map(|s| s.to_string()))?;
        Ok(out)
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) -> CliResult<()> {
        self.writer
            .write_record(fields)
            .map_err(|e| CliError::io(&self.path, std::io::Error::other(e)))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

/// One row per constant region: its lower edge `eta` and its state.
pub fn write_solution(path: &Path, gas: &GasConstants, sol: &PiecewiseSolution) -> CliResult<()> {
    let mut out = CsvOut::create(path, SOLUTION_COLUMNS)?;
    let edges = std::iter::once(0.0).chain(sol.positions());
    for (eta, s) in edges.zip(&sol.states) {
        let rho = gas.density(s)?;
        out.row([sol.xi, eta, s.u, s.v, s.p, rho, s.b].map(num))?;
    }
    out.finish()
}

pub fn write_functionals(path: &Path, rows: &[FunctionalSnapshot]) -> CliResult<()> {
    let mut out = CsvOut::create(path, FUNCTIONAL_COLUMNS)?;
    for r in rows {
        out.row([
            num(r.xi),
            num(r.v_total),
            num(r.q_approach),
            num(r.q_boundary),
            num(r.g),
            opt(r.phi),
            opt(r.l1),
        ])?;
    }
    out.finish()
}

#[derive(Serialize)]
struct EventRecord<'a> {
    xi: f64,
    eta: f64,
    kind: EventKind,
    in_ids: &'a [u64],
    out_ids: &'a [u64],
    #[serde(rename = "G_before")]
    g_before: f64,
    #[serde(rename = "G_after")]
    g_after: f64,
}

pub fn write_events(path: &Path, events: &[Event]) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for e in events {
        let rec = EventRecord {
            xi: e.xi,
            eta: e.eta,
            kind: e.kind,
            in_ids: &e.in_ids,
            out_ids: &e.out_ids,
            g_before: e.g_before,
            g_after: e.g_after,
        };
        let line = serde_json::to_string(&rec).expect("event records serialize");
        writeln!(w, "{line}").map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

pub fn write_eulerian(dir: &Path, field: &EulerianField, y_top: f64) -> CliResult<()> {
    let mut out = CsvOut::create(&dir.join("free_boundary.csv"), BOUNDARY_COLUMNS)?;
    for (x, g) in &field.boundary.points {
        out.row([num(*x), num(*g)])?;
    }
    out.finish()?;

    let mut out = CsvOut::create(&dir.join("regions.csv"), REGION_COLUMNS)?;
    let gas = &field.gas;
    let mut k = 0usize;
    let mut emit = |out: &mut CsvOut, kind: &str, s: &steadyfront::FlowState, c: &[(f64, f64); 4]| -> CliResult<()> {
        let rho = gas.density(s)?;
        let mut row = vec![k.to_string(), kind.to_string()];
        for (x, y) in c {
            row.push(num(*x));
            row.push(num(*y));
        }
        row.extend([s.u, s.v, s.p, rho, s.b].map(num));
        k += 1;
        out.row(row)
    };
    for (s, c) in field.polygons(y_top) {
        emit(&mut out, "flow", &s, &c)?;
    }
    if let Some(st) = field.static_gas {
        let depth = 0.25 * y_top.abs().max(1.0);
        for w in field.boundary.points.windows(2) {
            let c = [
                (w[0].0, w[0].1 - depth),
                (w[1].0, w[1].1 - depth),
                (w[1].0, w[1].1),
                (w[0].0, w[0].1),
            ];
            emit(&mut out, "static", &st, &c)?;
        }
    }
    out.finish()
}
