//! Snapshot CSV files and JSON-lines diagnostics.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use worldsheet::solver::Snapshot;

#[derive(Serialize)]
struct SnapshotRow<'a> {
    chart: &'a str,
    t: f64,
    theta: f64,
    x0: f64,
    x1: f64,
    x2: f64,
    x3: f64,
    v0: f64,
    v1: f64,
    v2: f64,
    v3: f64,
    w0: f64,
    w1: f64,
    w2: f64,
    w3: f64,
    lambda_minus: f64,
    lambda_plus: f64,
    delta: f64,
    horizon_gap: f64,
}

/// One row per node and snapshot. Coordinates are chart-native.
pub fn write_snapshots(path: &Path, chart: &str, snapshots: &[Snapshot]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for s in snapshots {
        for j in 0..s.len() {
            let (u, v, tw) = (s.jets[j].u, s.jets[j].v, s.jets[j].w);
            w.serialize(SnapshotRow {
                chart,
                t: s.t,
                theta: s.theta[j],
                x0: u[0],
                x1: u[1],
                x2: u[2],
                x3: u[3],
                v0: v[0],
                v1: v[1],
                v2: v[2],
                v3: v[3],
                w0: tw[0],
                w1: tw[1],
                w2: tw[2],
                w3: tw[3],
                lambda_minus: s.speeds[j].minus,
                lambda_plus: s.speeds[j].plus,
                delta: s.delta[j],
                horizon_gap: s.horizon_gap[j],
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Appends tagged records, one JSON object per line.
pub struct Records {
    out: BufWriter<File>,
    pub path: PathBuf,
}

impl Records {
    pub fn create(path: &Path) -> Result<Self> {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Records { out: BufWriter::new(f), path: path.to_path_buf() })
    }

    pub fn emit<T: Serialize>(&mut self, record: &str, body: &T) -> Result<()> {
        let mut v = serde_json::to_value(body)?;
        match v {
            serde_json::Value::Object(ref mut map) => {
                map.insert("record".into(), record.into());
            }
            other => {
                v = serde_json::json!({ "record": record, "value": other });
            }
        }
        serde_json::to_writer(&mut self.out, &v)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_are_tagged() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        let mut r = Records::create(&p).unwrap();
        r.emit("a", &serde_json::json!({"x": 1})).unwrap();
        r.emit("b", &3.5).unwrap();
        r.finish().unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines[0]["record"], "a");
        assert_eq!(lines[0]["x"], 1);
        assert_eq!(lines[1]["value"], 3.5);
    }
}
