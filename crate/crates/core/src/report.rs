//! CSV tables with fixed column orders and locale-free number formatting.

use std::path::Path;

use crate::error::{Error, Result};

pub const ENTROPY_COLUMNS: [&str; 6] = ["state_id", "quantity", "conditioning", "value_bits", "method", "gap"];
pub const CONVERGENCE_COLUMNS: [&str; 5] = ["n", "eps", "value_bits_per_copy", "target_bits", "gap"];
pub const DECOUPLING_COLUMNS: [&str; 10] = [
    "d_A", "L", "N", "state_id", "samples", "mean", "stderr", "bound_h2", "bound_hmin", "margin",
];
pub const MERGE_COLUMNS: [&str; 11] = [
    "state_id",
    "seed",
    "K",
    "L",
    "cost_bits",
    "design_eps",
    "condition_value",
    "error",
    "guarantee",
    "lower_bound_at_error",
    "slack",
];

/// Decimal rendering with 12 significant digits. Very large or very small
/// magnitudes fall back to exponent notation.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-6..15).contains(&mag) {
        return format!("{x:.11e}");
    }
    let prec = (11 - mag).max(0) as usize;
    let s = format!("{x:.prec$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Argument(format!(
                "row has {} fields, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }
}
