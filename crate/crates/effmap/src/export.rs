//! CSV and JSON artifact writers.

use std::io::Write;
use std::path::Path;

use effmap_core::qoi::{OperatingSet, OperatingSetKind};
use serde::Serialize;

use crate::error::{CliError, Result};

/// 17 significant digits in scientific notation; `NaN` for missing values.
pub fn fmt(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.16e}")
    }
}

/// Long-format table: the operating-point coordinates followed by one
/// column per named field.
pub fn write_fields(path: &Path, opset: &OperatingSet, fields: &[(&str, &[f64])]) -> Result<()> {
    let io = |e: csv::Error| CliError::io(path, e.into());
    if let Some((name, _)) = fields.iter().find(|(_, v)| v.len() != opset.len()) {
        return Err(CliError::Core(effmap_core::Error::Contract(format!(
            "field `{name}` does not match the {} operating points",
            opset.len()
        ))));
    }
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let cycle = opset.kind == OperatingSetKind::CycleProfile;
    let mut header: Vec<&str> = Vec::new();
    if cycle {
        header.push("time_s");
    }
    header.extend(["torque_Nm", "omega_rad_s"]);
    header.extend(fields.iter().map(|(name, _)| *name));
    w.write_record(&header).map_err(io)?;
    for (k, p) in opset.points.iter().enumerate() {
        let mut row = Vec::with_capacity(header.len());
        if let Some(times) = opset.times.as_ref().filter(|_| cycle) {
            row.push(fmt(times[k]));
        }
        row.push(fmt(p.torque));
        row.push(fmt(p.omega_m));
        row.extend(fields.iter().map(|(_, v)| fmt(v[k])));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Two-column table with a header.
pub fn write_columns(path: &Path, names: [&str; 2], a: &[f64], b: &[f64]) -> Result<()> {
    let io = |e: csv::Error| CliError::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(names).map_err(io)?;
    for (x, y) in a.iter().zip(b) {
        w.write_record([fmt(*x), fmt(*y)]).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Pretty-printed JSON; non-finite numbers become `null`.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?;
    text.push('\n');
    let mut f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}
