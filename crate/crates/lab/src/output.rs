//! File formats and atomic persistence.

use std::fs;
use std::path::{Path, PathBuf};

use crate::engine::{Row, Summary};
use crate::error::{LabError, Result};

pub const ROUNDS_FILE: &str = "rounds.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.json";
pub const PLOTDATA_FILE: &str = "plotdata.csv";
pub const SWEEP_FILE: &str = "sweep.json";

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| LabError::Config(format!("bad output path {}", path.display())))?;
    let tmp: PathBuf = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| LabError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| LabError::io(path, e))
}

pub fn rounds_header(dim: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((0..dim).map(|i| format!("x_{i}")));
    h.extend(["f", "g", "gplus", "Q", "grad_norm_surrogate"].map(String::from));
    h
}

/// Shortest round-trip decimal representation, so reading the CSV back is exact.
fn fmt(v: f64) -> String {
    format!("{v:?}")
}

pub fn rounds_csv(rows: &[Row], dim: usize) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(rounds_header(dim))?;
    for r in rows {
        let mut rec = vec![r.t.to_string()];
        rec.extend(r.x.iter().map(|v| fmt(*v)));
        rec.extend([r.f, r.g, r.gplus, r.q, r.grad_norm].map(fmt));
        w.write_record(&rec)?;
    }
    w.into_inner()
        .map_err(|e| LabError::Config(format!("csv buffer: {e}")))
}

pub fn read_rounds(path: &Path, dim: usize) -> Result<Vec<Row>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header != rounds_header(dim) {
        return Err(LabError::Verify(format!(
            "unexpected header in {}: {}",
            path.display(),
            header.join(",")
        )));
    }
    let parse = |s: &str, line: usize| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| LabError::Verify(format!("line {line}: cannot parse '{s}'")))
    };
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let t = rec[0]
            .parse::<usize>()
            .map_err(|_| LabError::Verify(format!("line {line}: bad round index '{}'", &rec[0])))?;
        let x = (1..=dim)
            .map(|j| parse(&rec[j], line))
            .collect::<Result<Vec<_>>>()?;
        let tail = (dim + 1..dim + 6)
            .map(|j| parse(&rec[j], line))
            .collect::<Result<Vec<_>>>()?;
        rows.push(Row {
            t,
            x,
            f: tail[0],
            g: tail[1],
            gplus: tail[2],
            q: tail[3],
            grad_norm: tail[4],
        });
    }
    Ok(rows)
}

pub fn plotdata_csv(series: &[(String, usize, f64)]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["series", "t", "value"])?;
    for (name, t, v) in series {
        w.write_record([name.clone(), t.to_string(), fmt(*v)])?;
    }
    w.into_inner()
        .map_err(|e| LabError::Config(format!("csv buffer: {e}")))
}

pub fn json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
