//! Artifact writers. Numbers are printed in the shortest form that round-trips,
//! so identical runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ymcal_core::estimates::EstimateReport;
use ymcal_core::lattice::snapshot::write_snapshot;
use ymcal_core::lattice::LatticeField;

use crate::CliError;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn target(out: &Path, rel: &str) -> Result<PathBuf, CliError> {
    let path = out.join(rel);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(path)
}

/// Writes `contents` to `out/rel` and returns `rel`.
pub fn write_text(out: &Path, rel: &str, contents: &str) -> Result<String, CliError> {
    let path = target(out, rel)?;
    fs::write(&path, contents).map_err(io_err(&path))?;
    Ok(rel.to_string())
}

pub fn write_json(out: &Path, rel: &str, value: &serde_json::Value) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    write_text(out, rel, &text)
}

pub fn write_field(out: &Path, rel: &str, f: &LatticeField) -> Result<String, CliError> {
    let path = target(out, rel)?;
    let file = fs::File::create(&path).map_err(io_err(&path))?;
    write_snapshot(std::io::BufWriter::new(file), f).map_err(|source| CliError::Stage {
        stage: "output",
        source,
    })?;
    Ok(rel.to_string())
}

pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// One row of the slab diagnostics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub energy: f64,
    pub gauss_residual: f64,
    pub tension_norm: f64,
    pub i_norm: Option<f64>,
    pub e_script_norm: Option<f64>,
    pub a0_norm_partial: Option<f64>,
}

pub const DIAGNOSTICS_HEADER: &str =
    "t,energy,gauss_residual,tension_norm,i_norm,e_script_norm,a0_norm_partial";

pub fn write_diagnostics(out: &Path, rows: &[DiagnosticsRow]) -> Result<String, CliError> {
    let mut s = String::from(DIAGNOSTICS_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            num(r.t),
            num(r.energy),
            num(r.gauss_residual),
            num(r.tension_norm),
            opt(r.i_norm),
            opt(r.e_script_norm),
            opt(r.a0_norm_partial)
        );
    }
    write_text(out, "diagnostics.csv", &s)
}

pub const REPORT_HEADER: &str = "name,measured_constant,pass,refinement_order";

/// Quotes a CSV field when it contains a separator or a quote.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn report_line(r: &EstimateReport) -> String {
    format!(
        "{},{},{},{}",
        csv_field(&r.name),
        num(r.measured_constant),
        r.pass,
        opt(r.refinement_order)
    )
}

pub fn write_reports_csv(
    out: &Path,
    rel: &str,
    reports: &[EstimateReport],
) -> Result<String, CliError> {
    let mut s = String::from(REPORT_HEADER);
    s.push('\n');
    for r in reports {
        s.push_str(&report_line(r));
        s.push('\n');
    }
    write_text(out, rel, &s)
}
