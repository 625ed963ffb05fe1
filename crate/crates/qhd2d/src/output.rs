//! CSV emission for the record series. Values are printed with 17
//! significant digits so files round-trip bit-exactly through a decimal
//! parse.

use crate::diagnostics::DiagnosticsRecord;
use crate::error::Result;
use crate::fields::VectorField;
use crate::polar::HydroMoments;
use crate::scheme::{StripRecord, TauStudyRow};
use crate::snapshot;
use std::path::Path;

pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut s = String::from(DiagnosticsRecord::CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

pub fn strips_csv(strips: &[StripRecord]) -> String {
    let mut s = String::from(StripRecord::CSV_HEADER);
    s.push('\n');
    for r in strips {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

pub fn tau_table_csv(rows: &[TauStudyRow]) -> String {
    let mut s = String::from(TauStudyRow::CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

pub fn write_diagnostics_csv(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    std::fs::write(path, diagnostics_csv(records))?;
    Ok(())
}

pub fn write_strips_csv(path: &Path, strips: &[StripRecord]) -> Result<()> {
    std::fs::write(path, strips_csv(strips))?;
    Ok(())
}

pub fn write_tau_table_csv(path: &Path, rows: &[TauStudyRow]) -> Result<()> {
    std::fs::write(path, tau_table_csv(rows))?;
    Ok(())
}

/// Write the moment bundle as a set of snapshot files with a common prefix:
/// `<prefix>_sqrt_rho.qhd`, `_jx`, `_jy`, `_lambda_x`, `_lambda_y`.
pub fn write_moments(prefix: &Path, m: &HydroMoments, t: f64) -> Result<()> {
    let base = prefix.to_string_lossy();
    let component = |v: &VectorField, pick_x: bool| crate::fields::RealField {
        grid: v.grid.clone(),
        values: if pick_x { v.x.clone() } else { v.y.clone() },
    };
    snapshot::write_real(Path::new(&format!("{base}_sqrt_rho.qhd")), &m.sqrt_rho, t)?;
    snapshot::write_real(Path::new(&format!("{base}_jx.qhd")), &component(&m.j, true), t)?;
    snapshot::write_real(Path::new(&format!("{base}_jy.qhd")), &component(&m.j, false), t)?;
    snapshot::write_real(
        Path::new(&format!("{base}_lambda_x.qhd")),
        &component(&m.lambda, true),
        t,
    )?;
    snapshot::write_real(
        Path::new(&format!("{base}_lambda_y.qhd")),
        &component(&m.lambda, false),
        t,
    )?;
    Ok(())
}
