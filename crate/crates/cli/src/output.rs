//! CSV rendering: header row, 17 significant digits, `\n` line endings.

use crate::failure::Failure;

/// Scientific notation with 16 digits after the point.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_table(header: &[String], rows: &[Vec<String>]) -> Result<String, Failure> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Domain(format!("cannot render CSV: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Domain(format!("cannot render CSV: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Failure::Domain(e.to_string()))
}
