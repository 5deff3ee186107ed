//! Field CSV files and JSON headers.
//!
//! Numbers are written with 12 significant digits in exponent form, which keeps
//! repeated runs byte-identical.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::domain::Grid;
use crate::error::{Error, Result};

/// `x` with 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

/// Writes `node,x,y,value` rows for a grid function.
pub fn write_field<W: Write>(out: W, grid: &Grid, values: &[f64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "field has {} values, grid has {} nodes",
            values.len(),
            grid.len()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "x", "y", "value"])?;
    for (k, v) in values.iter().enumerate() {
        let pos = grid.pos(k);
        w.write_record([k.to_string(), fmt_num(pos[0]), fmt_num(pos[1]), fmt_num(*v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_field_file(path: &Path, grid: &Grid, values: &[f64]) -> Result<()> {
    write_field(fs::File::create(path)?, grid, values)
}

/// Writes a CSV with the given header and numeric rows.
pub fn write_rows<W: Write, const N: usize>(out: W, header: [&str; N], rows: &[[f64; N]]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_num(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}
