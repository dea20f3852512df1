//! CSV output. Every file starts with a header line; floats carry 12
//! significant digits.

use std::io::Write;

use crate::coverage::{CoverageResult, Crossover, SweepResult};
use crate::oracle::ValidationReport;

/// Rounds to 12 significant digits and prints the shortest decimal that
/// round-trips the rounded value.
pub fn fmt_float(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("valid float literal");
    format!("{rounded}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_trace_csv<W: Write>(result: &CoverageResult, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["step", "start_mass", "gamma", "C_k"])?;
    let t = &result.trace;
    for k in 0..t.cumulative.len() {
        out.write_record([
            k.to_string(),
            fmt_float(t.start_mass[k]),
            fmt_float(t.gamma[k]),
            fmt_float(t.cumulative[k]),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(sweep: &SweepResult, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["p", "coverage_time", "baseline", "r"])?;
    for point in &sweep.points {
        out.write_record([
            fmt_float(point.bias),
            opt(point.coverage_time),
            opt(sweep.baseline),
            fmt_float(sweep.r),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_crossover_csv<W: Write>(c: &Crossover, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["iteration", "p", "coverage_time", "baseline", "side"])?;
    for (i, it) in c.iterates.iter().enumerate() {
        out.write_record([
            i.to_string(),
            fmt_float(it.bias),
            it.coverage_time.to_string(),
            c.baseline.to_string(),
            it.side.label().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One line of the size sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeRow {
    pub rows: usize,
    pub cols: usize,
    pub baseline: Option<usize>,
    pub crossover: Option<f64>,
    pub status: String,
}

pub fn write_size_csv<W: Write>(rows: &[SizeRow], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["rows", "cols", "nodes", "baseline", "crossover", "status"])?;
    for r in rows {
        out.write_record([
            r.rows.to_string(),
            r.cols.to_string(),
            (r.rows * r.cols).to_string(),
            opt(r.baseline),
            r.crossover.map(fmt_float).unwrap_or_default(),
            r.status.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_validation_csv<W: Write>(report: &ValidationReport, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "step",
        "macro_start_mass",
        "empirical_returned",
        "return_z",
        "macro_C_k",
        "empirical_distinct",
        "distinct_z",
    ])?;
    for r in &report.rows {
        out.write_record([
            r.step.to_string(),
            fmt_float(r.macro_start_mass),
            fmt_float(r.empirical_returned),
            fmt_float(r.return_z),
            fmt_float(r.macro_covered),
            fmt_float(r.empirical_distinct),
            fmt_float(r.distinct_z),
        ])?;
    }
    out.flush()?;
    Ok(())
}
