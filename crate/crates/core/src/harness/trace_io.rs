//! CSV trace files.
//!
//! Header `global_iter,epoch,grad_norm,objective,residual,restarted,psnr`;
//! continuous runs put `time` in the first column and the speed `‖ẋ‖` in the
//! residual column. Floats use 17 significant digits; an absent PSNR is an
//! empty field.

use std::path::Path;

use crate::continuous::ContTrace;
use crate::error::{Error, Result};
use crate::solvers::RunTrace;

pub const TRACE_COLUMNS: [&str; 7] =
    ["global_iter", "epoch", "grad_norm", "objective", "residual", "restarted", "psnr"];

pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

fn parse_float(s: &str) -> std::result::Result<f64, std::num::ParseFloatError> {
    s.parse::<f64>()
}

/// One row of a trace file, the first column read as a float.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub epoch: usize,
    pub grad_norm: f64,
    pub objective: f64,
    pub residual: f64,
    pub restarted: bool,
    pub psnr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceTable {
    /// `true` when the first column is `time`.
    pub continuous: bool,
    pub rows: Vec<TraceRow>,
}

impl TraceTable {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn grad_norms(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.grad_norm).collect()
    }
}

fn write_rows<W: std::io::Write>(out: W, first: &str, rows: impl Iterator<Item = [String; 7]>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = TRACE_COLUMNS;
    header[0] = first;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::TraceFormat(format!("{other:?}")),
    }
}

pub fn write_trace<W: std::io::Write>(trace: &RunTrace, out: W) -> Result<()> {
    write_rows(
        out,
        "global_iter",
        trace.records.iter().map(|r| {
            [
                r.global_iter.to_string(),
                r.epoch.to_string(),
                format_float(r.grad_norm),
                format_float(r.objective),
                format_float(r.residual),
                u8::from(r.restarted).to_string(),
                r.psnr.map(format_float).unwrap_or_default(),
            ]
        }),
    )
}

pub fn write_cont_trace<W: std::io::Write>(trace: &ContTrace, out: W) -> Result<()> {
    write_rows(
        out,
        "time",
        trace.records.iter().map(|r| {
            [
                format_float(r.time),
                r.epoch.to_string(),
                format_float(r.grad_norm),
                format_float(r.objective),
                format_float(r.speed),
                u8::from(r.restarted).to_string(),
                String::new(),
            ]
        }),
    )
}

pub fn save_trace(trace: &RunTrace, path: impl AsRef<Path>) -> Result<()> {
    write_trace(trace, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<TraceTable> {
    parse_trace(std::fs::File::open(path)?)
}

pub fn parse_trace<R: std::io::Read>(input: R) -> Result<TraceTable> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    let continuous = match header.get(0) {
        Some("time") => true,
        Some("global_iter") => false,
        other => return Err(Error::TraceFormat(format!("unexpected first column {other:?}"))),
    };
    if header.len() != TRACE_COLUMNS.len() || header.iter().skip(1).zip(&TRACE_COLUMNS[1..]).any(|(a, b)| a != *b) {
        return Err(Error::TraceFormat(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    let mut rows: Vec<TraceRow> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 2;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let float = |k: usize| {
            parse_float(field(k))
                .map_err(|_| Error::TraceFormat(format!("line {line}: column {} is not a number", TRACE_COLUMNS[k])))
        };
        let restarted = match field(5) {
            "0" => false,
            "1" => true,
            other => return Err(Error::TraceFormat(format!("line {line}: restarted must be 0 or 1, got `{other}`"))),
        };
        let row = TraceRow {
            t: float(0)?,
            epoch: field(1).parse().map_err(|_| Error::TraceFormat(format!("line {line}: bad epoch")))?,
            grad_norm: float(2)?,
            objective: float(3)?,
            residual: float(4)?,
            restarted,
            psnr: if field(6).is_empty() { None } else { Some(float(6)?) },
        };
        if rows.last().is_some_and(|p| !(row.t > p.t)) {
            return Err(Error::TraceFormat(format!("line {line}: first column must increase strictly")));
        }
        rows.push(row);
    }
    Ok(TraceTable { continuous, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(format_float(f64::INFINITY), "inf");
    }

    #[test]
    fn rejects_non_monotone() {
        let src = "global_iter,epoch,grad_norm,objective,residual,restarted,psnr\n0,0,1,1,0,0,\n0,0,1,1,0,0,\n";
        assert!(parse_trace(src.as_bytes()).is_err());
    }

    #[test]
    fn rejects_bad_flag() {
        let src = "global_iter,epoch,grad_norm,objective,residual,restarted,psnr\n0,0,1,1,0,2,\n";
        assert!(parse_trace(src.as_bytes()).is_err());
    }

    #[test]
    fn reads_optional_psnr() {
        let src = "time,epoch,grad_norm,objective,residual,restarted,psnr\n0,0,1,1,0,0,\n0.5,0,0.5,1,0,1,20\n";
        let t = parse_trace(src.as_bytes()).unwrap();
        assert!(t.continuous);
        assert_eq!(t.rows[1].psnr, Some(20.0));
        assert!(t.rows[1].restarted);
    }
}
