use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{RunMeta, StepRecord, Trace};
use crate::{Error, Result};

pub const TRACE_HEADER: [&str; 8] = [
    "t",
    "loss",
    "grad_norm_sq",
    "lr",
    "eff_lr_min",
    "eff_lr_max",
    "vhat_min",
    "vhat_max",
];

/// Write `bytes` to a sibling temporary file, then rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trace_csv(records: &[StepRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::with_capacity(records.len() * 200));
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.t.to_string(),
            fmt_f64(r.loss),
            fmt_f64(r.grad_norm_sq),
            fmt_f64(r.lr),
            fmt_f64(r.eff_lr_min),
            fmt_f64(r.eff_lr_max),
            fmt_f64(r.vhat_min),
            fmt_f64(r.vhat_max),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    write_atomic(path, &bytes)
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<StepRecord>> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| parse_err(0, e.to_string()))?;
    let mut records = Vec::new();
    let mut row = csv::StringRecord::new();
    let mut first = true;
    loop {
        let more = reader
            .read_record(&mut row)
            .map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        if !more {
            break;
        }
        let line = row.position().map_or(0, |p| p.line());
        if first {
            first = false;
            if row.iter().ne(TRACE_HEADER.iter().copied()) {
                return Err(parse_err(line, format!("expected header `{}`", TRACE_HEADER.join(","))));
            }
            continue;
        }
        if row.len() != TRACE_HEADER.len() {
            return Err(parse_err(line, format!("expected {} fields, got {}", TRACE_HEADER.len(), row.len())));
        }
        let t = row[0]
            .parse::<u64>()
            .map_err(|e| parse_err(line, format!("column t: {e}")))?;
        let mut vals = [0.0; 7];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = row[k + 1]
                .parse::<f64>()
                .map_err(|e| parse_err(line, format!("column {}: {e}", TRACE_HEADER[k + 1])))?;
        }
        let expected_t = records.len() as u64 + 1;
        if t != expected_t {
            return Err(parse_err(line, format!("expected t = {expected_t}, got {t}")));
        }
        records.push(StepRecord {
            t,
            loss: vals[0],
            grad_norm_sq: vals[1],
            lr: vals[2],
            eff_lr_min: vals[3],
            eff_lr_max: vals[4],
            vhat_min: vals[5],
            vhat_max: vals[6],
        });
    }
    if first {
        return Err(parse_err(1, "empty file".to_string()));
    }
    Ok(records)
}

/// `trace.csv` -> `trace.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn write_metadata(meta: &RunMeta, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(meta)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_metadata(path: &Path) -> Result<RunMeta> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

/// Write the scalar channels as CSV and the metadata as a JSON sidecar.
pub fn write_trace(trace: &Trace, csv_path: &Path) -> Result<()> {
    write_trace_csv(&trace.records, csv_path)?;
    write_metadata(&trace.meta, &sidecar_path(csv_path))
}

/// Read a trace written by [`write_trace`]. Dense channels are not persisted.
pub fn read_trace(csv_path: &Path) -> Result<Trace> {
    Ok(Trace {
        records: read_trace_csv(csv_path)?,
        dense: None,
        meta: read_metadata(&sidecar_path(csv_path))?,
    })
}
