//! CSV and JSON writers for result rows.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::runner::ResultRow;

pub const CSV_HEADER: [&str; 25] = [
    "sweep", "strategy", "nmse_d1", "nmse_r1", "nmse_dk", "nmse_rk", "se_d1", "se_r1", "se_dk", "se_rk", "pred_d1",
    "pred_r1", "pred_dk", "pred_mu", "mse_d1", "mse_r1", "mse_dk", "mse_mu", "nmse_d", "nmse_r", "se_d", "se_r",
    "regime", "trials", "excluded",
];

/// Nine significant digits in scientific notation; missing values are empty.
fn sci(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.8e}")).unwrap_or_default()
}

fn record(r: &ResultRow) -> Vec<String> {
    let mut out = vec![sci(Some(r.sweep)), r.strategy.label().to_string()];
    out.extend([r.nmse.d1, r.nmse.r1, r.nmse.dk, r.nmse.rk].map(sci));
    out.extend([r.se.d1, r.se.r1, r.se.dk, r.se.rk].map(sci));
    out.extend([r.pred.d1, r.pred.r1, r.pred.dk, r.pred.mu].map(sci));
    out.extend([r.mse.d1, r.mse.r1, r.mse.dk, r.mse.mu].map(sci));
    out.extend([r.nmse.d, r.nmse.r, r.se.d, r.se.r].map(sci));
    out.extend([r.regime.label().to_string(), r.trials.to_string(), r.excluded.to_string()]);
    out
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Empty("result rows"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(record(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    write_csv(rows, BufWriter::new(File::create(path)?))
}

pub fn write_json<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Empty("result rows"));
    }
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out)?;
    Ok(())
}

pub fn emit_json(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    write_json(rows, &mut f)?;
    f.flush()?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<Vec<ResultRow>> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}

/// Writes JSON for a `.json` path and CSV otherwise.
pub fn emit(rows: &[ResultRow], path: &Path) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => emit_json(rows, path),
        _ => emit_csv(rows, path),
    }
}
