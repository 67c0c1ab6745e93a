//! Series files: header `t_s,value,stderr`, LF line endings, every number
//! with 17 significant digits so that reading back is exact.

use std::io::{Read, Write};

use crate::series::SignalSeries;

use super::{DeviationReport, HarnessError};

fn csv_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Csv(e.to_string())
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub(crate) fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_series<W: Write>(out: W, series: &SignalSeries) -> Result<(), HarnessError> {
    let mut w = writer(out);
    w.write_record(["t_s", "value", "stderr"]).map_err(csv_err)?;
    for i in 0..series.len() {
        let se = series.stderr.get(i).map(|&s| fmt17(s)).unwrap_or_default();
        w.write_record([fmt17(series.times[i]), fmt17(series.values[i]), se])
            .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// Reads a series written by [`write_series`]. A file whose stderr column
/// is empty on every row gives a series without standard errors.
pub fn read_series<R: Read>(input: R) -> Result<SignalSeries, HarnessError> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    let header = r.headers().map_err(csv_err)?;
    if header != vec!["t_s", "value", "stderr"] {
        return Err(HarnessError::Csv(format!("unexpected header {header:?}")));
    }
    let (mut times, mut values, mut stderr) = (Vec::new(), Vec::new(), Vec::new());
    let mut blanks = 0;
    for (row, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let field = |i: usize| -> Result<f64, HarnessError> {
            record[i]
                .parse()
                .map_err(|_| HarnessError::Csv(format!("row {}: bad number {:?}", row + 2, &record[i])))
        };
        times.push(field(0)?);
        values.push(field(1)?);
        if record[2].is_empty() {
            blanks += 1;
        } else {
            stderr.push(field(2)?);
        }
    }
    if blanks > 0 && !stderr.is_empty() {
        return Err(HarnessError::Csv("stderr column is only partly filled".into()));
    }
    Ok(SignalSeries::with_stderr(times, values, stderr)?)
}

/// Deviation file of a comparison: `t_s,deviation,se_units`, the latter
/// empty where the standard error is zero.
pub fn write_deviation<W: Write>(out: W, report: &DeviationReport) -> Result<(), HarnessError> {
    let mut w = writer(out);
    w.write_record(["t_s", "deviation", "se_units"]).map_err(csv_err)?;
    for i in 0..report.times.len() {
        let se = report.se_units[i].map(fmt17).unwrap_or_default();
        w.write_record([fmt17(report.times[i]), fmt17(report.deviation[i]), se])
            .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}
