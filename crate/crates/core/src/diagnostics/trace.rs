//! Per-iteration trace rows and their CSV form.
//!
//! Column order is the field order of [`TraceRecord`], also listed in
//! [`COLUMNS`].  Absent values are empty cells.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sbci1,
    Sbci2,
    Davidson,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Sbci1 => "sbci1",
            Method::Sbci2 => "sbci2",
            Method::Davidson => "davidson",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sbci1" => Ok(Method::Sbci1),
            "sbci2" => Ok(Method::Sbci2),
            "davidson" => Ok(Method::Davidson),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RestartReason {
    StallSmallB,
    NormOutOfRange,
    ResidualBlowup,
    MaxCycle,
}

/// One solver iteration.
///
/// For the SBCI methods a row with `t = s` describes the step from `x_s`
/// to `x_{s+1}`: `energy` is `E_{s+1}`, `b`/`c` are the coefficients of
/// step `s`, and `kinetic` is `y_{s+1}ᵀ(D − E⁰)y_{s+1}` at the shift used
/// in that step.  SBCI2 rows describe the lower state, with the partner in
/// the `*_partner` columns and the full coefficient matrices in `b01`…`a10`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub method: Method,
    pub state: usize,
    pub pair_partner: Option<usize>,
    /// Restart segment index within the state.
    pub segment: usize,
    pub t: usize,
    pub energy: f64,
    pub d_e: f64,
    pub res_norm: f64,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub b01: Option<f64>,
    pub b10: Option<f64>,
    pub b11: Option<f64>,
    pub c01: Option<f64>,
    pub c10: Option<f64>,
    pub c11: Option<f64>,
    pub a01: Option<f64>,
    pub a10: Option<f64>,
    pub x_norm: Option<f64>,
    pub energy_partner: Option<f64>,
    pub res_norm_partner: Option<f64>,
    pub x_norm_partner: Option<f64>,
    pub kinetic: Option<f64>,
    pub matvecs_cumulative: u64,
    /// Applications in this row that are not part of the iteration proper
    /// (image refreshes after restarts).
    pub matvecs_overhead: u64,
    pub converged: bool,
    pub restart_reason: Option<RestartReason>,
}

pub const COLUMNS: [&str; 27] = [
    "method",
    "state",
    "pair_partner",
    "segment",
    "t",
    "energy",
    "d_e",
    "res_norm",
    "b",
    "c",
    "b01",
    "b10",
    "b11",
    "c01",
    "c10",
    "c11",
    "a01",
    "a10",
    "x_norm",
    "energy_partner",
    "res_norm_partner",
    "x_norm_partner",
    "kinetic",
    "matvecs_cumulative",
    "matvecs_overhead",
    "converged",
    "restart_reason",
];

impl TraceRecord {
    pub fn new(method: Method, state: usize, segment: usize, t: usize) -> Self {
        Self {
            method,
            state,
            pair_partner: None,
            segment,
            t,
            energy: 0.0,
            d_e: 0.0,
            res_norm: 0.0,
            b: None,
            c: None,
            b01: None,
            b10: None,
            b11: None,
            c01: None,
            c10: None,
            c11: None,
            a01: None,
            a10: None,
            x_norm: None,
            energy_partner: None,
            res_norm_partner: None,
            x_norm_partner: None,
            kinetic: None,
            matvecs_cumulative: 0,
            matvecs_overhead: 0,
            converged: false,
            restart_reason: None,
        }
    }
}

/// Appends trace rows to a CSV file.
pub struct TraceWriter<W: Write> {
    inner: csv::Writer<W>,
    path: PathBuf,
}

impl TraceWriter<File> {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Self::from_writer(file, path)
    }
}

impl<W: Write> TraceWriter<W> {
    pub fn from_writer(w: W, path: impl Into<PathBuf>) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        inner.write_record(COLUMNS)?;
        Ok(Self {
            inner,
            path: path.into(),
        })
    }

    pub fn record(&mut self, rec: &TraceRecord) -> Result<()> {
        self.inner.serialize(rec)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }

    pub fn into_inner(self) -> Result<W> {
        let path = self.path;
        self.inner
            .into_inner()
            .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))
    }
}

pub fn write_trace(path: impl AsRef<Path>, rows: &[TraceRecord]) -> Result<()> {
    let mut w = TraceWriter::create(path)?;
    rows.iter().try_for_each(|r| w.record(r))?;
    w.flush()
}

pub fn read_trace_str(text: &str) -> Result<Vec<TraceRecord>> {
    read_trace_from(text.as_bytes())
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace_from(file)
}

fn read_trace_from(r: impl std::io::Read) -> Result<Vec<TraceRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != COLUMNS {
        return Err(Error::parse(1, "trace header does not match the expected columns"));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn to_string(rows: &[TraceRecord]) -> String {
        let mut w = TraceWriter::from_writer(Vec::new(), "<memory>").unwrap();
        for r in rows {
            w.record(r).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    fn sample(t: usize) -> TraceRecord {
        let mut r = TraceRecord::new(Method::Sbci1, 0, 0, t);
        r.energy = -1.234_567_890_123_456_7 + t as f64 * 1e-13;
        r.d_e = -3.0e-17 * (t as f64 + 1.0);
        r.res_norm = std::f64::consts::PI * 1e-7;
        r.b = Some(0.1 + 1e-16);
        r.c = Some(-2.0 / 3.0);
        r.kinetic = Some(1e-300);
        r.matvecs_cumulative = 4 + t as u64;
        r
    }

    #[test]
    fn empty_run_is_header_only() {
        let s = to_string(&[]);
        assert_eq!(s.lines().count(), 1);
        assert_eq!(s.trim_end(), COLUMNS.join(","));
    }

    #[test]
    fn rows_in_order_and_round_trip() {
        let mut rows = vec![sample(0), sample(1)];
        rows[1].restart_reason = Some(RestartReason::NormOutOfRange);
        rows[1].pair_partner = Some(1);
        let s = to_string(&rows);
        assert_eq!(s.lines().count(), 3);
        let back = read_trace_str(&s).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn header_mismatch_rejected() {
        assert!(read_trace_str("a,b\n1,2\n").is_err());
    }
}
