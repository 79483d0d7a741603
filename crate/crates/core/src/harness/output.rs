//! Metrics CSV files and per-run JSON summaries.
//!
//! The summary is a pure function of the rows, so it can be recomputed from
//! a CSV file alone.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::MetricsRecord;

use super::oracles::loglog_slope;

pub fn write_metrics<W: Write>(out: W, records: &[MetricsRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(out);
    if records.is_empty() {
        w.write_record(crate::metrics::CSV_COLUMNS)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn metrics_csv_bytes(records: &[MetricsRecord]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_metrics(&mut buf, records)?;
    Ok(buf)
}

pub fn write_metrics_file(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    write_metrics(BufWriter::new(File::create(path)?), records)
}

pub fn read_metrics<R: Read>(input: R) -> Result<Vec<MetricsRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn read_metrics_file(path: &Path) -> Result<Vec<MetricsRecord>> {
    read_metrics(File::open(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub mean: f64,
    pub last: f64,
    /// Log-log slope against `t + 1` over rows with `t >= 100` and a
    /// positive value; `None` with fewer than two such rows.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub rows: usize,
    pub sync_rows: usize,
    pub final_t: Option<u64>,
    pub final_f: Option<f64>,
    pub f_val: Option<SeriesStats>,
    pub grad_norm_sq: Option<SeriesStats>,
    pub g_norm_sq: Option<SeriesStats>,
    pub z_norm_sq: Option<SeriesStats>,
    pub phi: Option<SeriesStats>,
}

fn series(records: &[MetricsRecord], get: impl Fn(&MetricsRecord) -> f64) -> Option<SeriesStats> {
    let last = records.last()?;
    let mean = records.iter().map(&get).sum::<f64>() / records.len() as f64;
    let (ts, vs): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.t >= 100 && get(r) > 0.0)
        .map(|r| ((r.t + 1) as f64, get(r)))
        .unzip();
    let slope = if ts.len() >= 2 && ts.first() != ts.last() {
        Some(loglog_slope(&ts, &vs))
    } else {
        None
    };
    Some(SeriesStats {
        mean,
        last: get(last),
        slope,
    })
}

impl RunSummary {
    /// Statistics over the center stream: rows with `worker_id = -1`, or all
    /// rows when there are none.
    pub fn from_records(label: &str, records: &[MetricsRecord]) -> Self {
        let center: Vec<MetricsRecord> = records.iter().filter(|r| r.worker_id < 0).copied().collect();
        let rows = if center.is_empty() { records.to_vec() } else { center };
        RunSummary {
            label: label.to_string(),
            rows: records.len(),
            sync_rows: records.iter().filter(|r| r.sync_flag).count(),
            final_t: rows.last().map(|r| r.t),
            final_f: rows.last().map(|r| r.f_val),
            f_val: series(&rows, |r| r.f_val),
            grad_norm_sq: series(&rows, |r| r.grad_norm_sq),
            g_norm_sq: series(&rows, |r| r.g_norm_sq),
            z_norm_sq: series(&rows, |r| r.z_norm_sq),
            phi: series(&rows, |r| r.phi),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: u64, v: f64) -> MetricsRecord {
        MetricsRecord {
            t,
            wall_ns: 0,
            f_val: v,
            grad_norm_sq: v,
            g_norm_sq: v,
            z_norm_sq: v,
            phi: v,
            sync_flag: false,
            worker_id: -1,
        }
    }

    #[test]
    fn csv_round_trip() {
        let rows: Vec<_> = (0..5).map(|t| rec(t, 0.1 * t as f64)).collect();
        let bytes = metrics_csv_bytes(&rows).unwrap();
        assert_eq!(read_metrics(&bytes[..]).unwrap(), rows);
    }

    #[test]
    fn empty_file_has_header() {
        let bytes = metrics_csv_bytes(&[]).unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap().trim_end(),
            crate::metrics::CSV_COLUMNS.join(",")
        );
    }

    #[test]
    fn slope_of_power_law() {
        let rows: Vec<_> = (100..1000).map(|t| rec(t, 1.0 / (t + 1) as f64)).collect();
        let s = RunSummary::from_records("x", &rows);
        assert!((s.f_val.unwrap().slope.unwrap() + 1.0).abs() < 1e-9);
    }
}
