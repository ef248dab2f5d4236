//! Driving-cycle CSV files: `time_s,torque_Nm,omega_rad_s` or `time_s,speed_mps`.

use std::path::Path;

use effmap_core::cycle::{profile_from_speed, Vehicle};
use effmap_core::ecm::OperatingPoint;
use effmap_core::qoi::OperatingSet;

use crate::error::{CliError, Result};
use crate::export::fmt;

const DIRECT: [&str; 3] = ["time_s", "torque_Nm", "omega_rad_s"];
const SPEED: [&str; 2] = ["time_s", "speed_mps"];

/// Load a cycle, converting vehicle speed through `vehicle` when needed.
pub fn load_cycle(path: &Path, vehicle: &Vehicle) -> Result<OperatingSet> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let parse_err = |line: u64, msg: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let width = if header == DIRECT {
        3
    } else if header == SPEED {
        2
    } else {
        return Err(parse_err(
            1,
            format!(
                "header must be `{}` or `{}`, got `{}`",
                DIRECT.join(","),
                SPEED.join(","),
                header.join(",")
            ),
        ));
    };

    let mut columns = vec![Vec::new(); width];
    let mut prev_time = f64::NEG_INFINITY;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(parse_err(
                line,
                format!("expected {width} fields, got {}", record.len()),
            ));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("`{}`: `{field}` is not a finite number", header[j])))?;
            columns[j].push(v);
        }
        let t = columns[0][columns[0].len() - 1];
        if !(t > prev_time) {
            return Err(parse_err(
                line,
                format!("time {t} does not increase (previous {prev_time})"),
            ));
        }
        prev_time = t;
    }
    if columns[0].is_empty() {
        return Err(parse_err(1, "cycle has no rows".into()));
    }

    let times = columns[0].clone();
    let set = if width == 3 {
        if let Some(k) = columns[2].iter().position(|&w| w < 0.0) {
            return Err(parse_err(k as u64 + 2, "`omega_rad_s` must be nonnegative".into()));
        }
        let points = columns[1]
            .iter()
            .zip(&columns[2])
            .map(|(&t, &w)| OperatingPoint::new(t, w))
            .collect();
        OperatingSet::profile(times, points)?
    } else {
        if let Some(k) = columns[1].iter().position(|&v| v < 0.0) {
            return Err(parse_err(k as u64 + 2, "`speed_mps` must be nonnegative".into()));
        }
        profile_from_speed(&times, &columns[1], vehicle)?
    };
    Ok(set)
}

/// Write a speed trace in the `time_s,speed_mps` schema.
pub fn write_speed_cycle(path: &Path, times: &[f64], speeds: &[f64]) -> Result<()> {
    let io = |e: csv::Error| CliError::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(SPEED).map_err(io)?;
    for (t, v) in times.iter().zip(speeds) {
        w.write_record([fmt(*t), fmt(*v)]).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
