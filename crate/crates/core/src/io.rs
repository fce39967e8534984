//! Scenario files, trajectory CSVs and result/summary JSON.
//!
//! A scenario file only needs `scheme` and `controller`; every other key
//! falls back to the defaults of [`ScenarioConfig::new`]. Nested tables are
//! merged key by key, so `{"mppi": {"samples": 500}}` keeps the remaining
//! sampler settings.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::harness::{ControllerKind, ScenarioConfig, StepLog, SuiteSummary, TaskResult};
use crate::vscost::VsScheme;

/// Parses a scenario from JSON text.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let user: Value = serde_json::from_str(text).map_err(|e| Error::config("<file>", e.to_string()))?;
    let Value::Object(map) = &user else {
        return Err(Error::config("<file>", "a scenario must be a JSON object"));
    };
    let scheme: VsScheme = required(map, "scheme")?;
    let controller: ControllerKind = required(map, "controller")?;
    let mut merged = serde_json::to_value(ScenarioConfig::new(scheme, controller))?;
    merge(&mut merged, user);
    let cfg: ScenarioConfig = serde_path_to_error::deserialize(merged).map_err(|e| {
        let key = e.path().to_string();
        Error::config(key, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn required<T: for<'de> Deserialize<'de>>(map: &serde_json::Map<String, Value>, key: &str) -> Result<T> {
    let v = map.get(key).ok_or_else(|| Error::config(key, "missing"))?;
    serde_json::from_value(v.clone()).map_err(|e| Error::config(key, e.to_string()))
}

/// Overlays `patch` on `base`, recursing into objects only.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

pub fn scenario_to_json(cfg: &ScenarioConfig) -> Result<String> {
    Ok(serde_json::to_string_pretty(cfg)?)
}

/// Column names for a trajectory with `n` features.
pub fn trajectory_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=n).map(|i| format!("u{i}")));
    h.extend((1..=n).map(|i| format!("v{i}")));
    h.extend((1..=n).map(|i| format!("Z{i}")));
    for k in ["tx", "ty", "tz", "rux", "ruy", "ruz", "vx", "vy", "vz", "wx", "wy", "wz", "err_norm", "jl_flag"] {
        h.push(k.to_string());
    }
    h
}

/// One parsed CSV row. The orientation is θu in degrees, as in scenario files.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub z: Vec<f64>,
    pub position: [f64; 3],
    pub theta_u_deg: [f64; 3],
    pub twist: [f64; 6],
    pub err_norm: f64,
    pub jl_flag: bool,
}

/// Writes one row per control period. Floats use the shortest repr that
/// round-trips, so equal logs give equal bytes.
pub fn write_trajectory<W: Write>(out: W, log: &[StepLog]) -> Result<()> {
    let n = log.first().map_or(0, |r| r.pixels.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(n))?;
    let mut rec: Vec<String> = Vec::new();
    for row in log {
        if row.pixels.len() != n || row.depths.len() != n {
            return Err(Error::Shape(format!("trajectory row at t={} has a different feature count", row.t)));
        }
        rec.clear();
        rec.push(row.t.to_string());
        rec.extend(row.pixels.iter().map(|p| p.u.to_string()));
        rec.extend(row.pixels.iter().map(|p| p.v.to_string()));
        rec.extend(row.depths.iter().map(f64::to_string));
        rec.extend(row.pose.t.iter().map(f64::to_string));
        rec.extend(row.pose.theta_u_deg.iter().map(f64::to_string));
        rec.extend(row.twist.iter().map(f64::to_string));
        rec.push(row.err_norm.to_string());
        rec.push(u8::from(row.jl_flag).to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory<R: Read>(input: R) -> Result<Vec<TrajectoryRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let cols = header.len();
    if cols < 15 || (cols - 15) % 3 != 0 {
        return Err(Error::Shape(format!("unexpected trajectory column count {cols}")));
    }
    let n = (cols - 15) / 3;
    let expected = trajectory_header(n);
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Shape("trajectory header does not match the schema".into()));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| Error::Io(format!("column {}: {e}", expected[i])))
        };
        let block = |start: usize, len: usize| (start..start + len).map(f).collect::<Result<Vec<f64>>>();
        let base = 1 + 3 * n;
        let tail = block(base, 13)?;
        rows.push(TrajectoryRow {
            t: f(0)?,
            u: block(1, n)?,
            v: block(1 + n, n)?,
            z: block(1 + 2 * n, n)?,
            position: [tail[0], tail[1], tail[2]],
            theta_u_deg: [tail[3], tail[4], tail[5]],
            twist: [tail[6], tail[7], tail[8], tail[9], tail[10], tail[11]],
            err_norm: tail[12],
            jl_flag: match &rec[base + 13] {
                "0" => false,
                "1" => true,
                other => return Err(Error::Io(format!("jl_flag must be 0 or 1, got {other:?}"))),
            },
        });
    }
    Ok(rows)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_result(path: &Path, result: &TaskResult) -> Result<()> {
    write_json(path, result)
}

/// The trajectory is not part of the JSON; the returned log is empty.
pub fn read_result(path: &Path) -> Result<TaskResult> {
    read_json(path)
}

pub fn write_summary(path: &Path, summary: &SuiteSummary) -> Result<()> {
    write_json(path, summary)
}

pub fn read_summary(path: &Path) -> Result<SuiteSummary> {
    read_json(path)
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn write_task_outputs(dir: &Path, stem: &str, result: &TaskResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let file = fs::File::create(&csv_path).map_err(|e| Error::Io(format!("{}: {e}", csv_path.display())))?;
    write_trajectory(std::io::BufWriter::new(file), &result.log)?;
    write_result(&dir.join(format!("{stem}.json")), result)
}
