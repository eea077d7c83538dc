// SPDX-License-Identifier: Apache-2.0

//! CSV and JSON artifacts. Reals are written with 17 significant digits so
//! they round-trip exactly and diff cleanly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::characterization::SweepReport;
use crate::error::{DfcError, Result};
use crate::interpolation::CorrectedFrame;
use crate::mdc_sim::PeriodRecord;
use crate::signal_model::{MeasuredFrame, PdParams, TlSignalParams, SAMPLES_PER_FRAME};
use crate::weight_matrix::WeightMatrix;

pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Sidecar describing how a frame was generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub delay_ns: i64,
    pub params: TlSignalParams,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub pd: Option<PdParams>,
}

fn csv_err(e: csv::Error) -> DfcError {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => DfcError::Io(io),
        kind => DfcError::Format {
            row,
            msg: format!("{kind:?}"),
        },
    }
}

fn writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    Ok(w)
}

fn finish<W: Write>(w: csv::Writer<W>) -> Result<()> {
    w.into_inner()
        .map_err(|e| DfcError::Io(e.into_error()))?
        .flush()?;
    Ok(())
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize, row: usize, name: &str) -> Result<&'a str> {
    rec.get(i).map(str::trim).ok_or_else(|| DfcError::Format {
        row,
        msg: format!("missing column {name}"),
    })
}

fn parse<T: std::str::FromStr>(s: &str, row: usize, name: &str) -> Result<T> {
    s.parse().map_err(|_| DfcError::Format {
        row,
        msg: format!("cannot parse {name} from {s:?}"),
    })
}

/// `index,time_ns,value`, one row per step tag.
pub fn write_frame_csv<W: Write>(out: W, frame: &MeasuredFrame) -> Result<()> {
    let mut w = writer(out, &["index", "time_ns", "value"])?;
    for (k, &y) in frame.samples().iter().enumerate() {
        w.write_record([
            k.to_string(),
            MeasuredFrame::time_ns(k).to_string(),
            fmt_real(y),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// Reads a frame CSV. Rows must be complete and in index order; errors name
/// the offending line, counting the header as line 1.
pub fn read_frame_csv<R: Read>(input: R, delay_ns: i64) -> Result<MeasuredFrame> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    if cols.len() < 3 || cols[..3] != ["index", "time_ns", "value"] {
        return Err(DfcError::Format {
            row: 1,
            msg: "expected header index,time_ns,value".into(),
        });
    }
    let mut samples = Vec::with_capacity(SAMPLES_PER_FRAME);
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .position()
            .map_or(samples.len() + 2, |p| p.line() as usize);
        let index: usize = parse(field(&rec, 0, row, "index")?, row, "index")?;
        let time: i64 = parse(field(&rec, 1, row, "time_ns")?, row, "time_ns")?;
        let value: f64 = parse(field(&rec, 2, row, "value")?, row, "value")?;
        if index != samples.len() || index >= SAMPLES_PER_FRAME {
            return Err(DfcError::Format {
                row,
                msg: format!("expected index {}, found {index}", samples.len()),
            });
        }
        if time != MeasuredFrame::time_ns(index) {
            return Err(DfcError::Format {
                row,
                msg: format!("time_ns {time} does not match index {index}"),
            });
        }
        if !value.is_finite() {
            return Err(DfcError::Format {
                row,
                msg: "value is not finite".into(),
            });
        }
        samples.push(value);
    }
    if samples.len() != SAMPLES_PER_FRAME {
        return Err(DfcError::Format {
            row: samples.len() + 2,
            msg: format!(
                "frame has {} rows, expected {SAMPLES_PER_FRAME}",
                samples.len()
            ),
        });
    }
    MeasuredFrame::from_samples(samples, delay_ns)
}

/// `index,time_ns,value,boundary`.
pub fn write_corrected_csv<W: Write>(out: W, frame: &CorrectedFrame) -> Result<()> {
    let mut w = writer(out, &["index", "time_ns", "value", "boundary"])?;
    for (k, (&y, &b)) in frame.samples.iter().zip(&frame.boundary_flags).enumerate() {
        w.write_record([
            k.to_string(),
            MeasuredFrame::time_ns(k).to_string(),
            fmt_real(y),
            u8::from(b).to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// `i,m,raw,real` for every off-diagonal entry.
pub fn write_weights_csv<W: Write>(out: W, wm: &WeightMatrix) -> Result<()> {
    let mut w = writer(out, &["i", "m", "raw", "real"])?;
    for (i, m, v) in wm.entries() {
        w.write_record([
            i.to_string(),
            m.to_string(),
            v.raw().to_string(),
            fmt_real(v.to_f64()),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// `period,delay_ticks,data_lost,sync_ok`; the delay is empty for a lost period.
pub fn write_mdc_csv<W: Write>(out: W, records: &[PeriodRecord]) -> Result<()> {
    let mut w = writer(out, &["period", "delay_ticks", "data_lost", "sync_ok"])?;
    for r in records {
        w.write_record([
            r.period.to_string(),
            r.delay_ticks.map(|d| d.to_string()).unwrap_or_default(),
            r.data_lost.to_string(),
            r.sync_ok.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// `axis_value,max_abs_error`.
pub fn write_sweep_csv<W: Write>(out: W, report: &SweepReport) -> Result<()> {
    let mut w = writer(out, &["axis_value", "max_abs_error"])?;
    for p in &report.points {
        w.write_record([p.value.to_string(), fmt_real(p.max_abs_error)])
            .map_err(csv_err)?;
    }
    finish(w)
}

/// `corner_step,abs_error`.
pub fn write_corners_csv<W: Write>(
    out: W,
    corner_steps: &[usize],
    abs_errors: &[f64],
) -> Result<()> {
    let mut w = writer(out, &["corner_step", "abs_error"])?;
    for (k, e) in corner_steps.iter().zip(abs_errors) {
        w.write_record([k.to_string(), fmt_real(*e)])
            .map_err(csv_err)?;
    }
    finish(w)
}
