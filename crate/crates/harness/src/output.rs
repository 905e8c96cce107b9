//! CSV schemas.
//!
//! Trace: `t,branch,f_val,grad_norm_sq,est_err_sq,lyapunov,oracle_calls,paper_calls`
//! with empty fields where diagnostics were not recorded.
//!
//! Summary: `seed,final_grad_norm,final_f,chosen_index,T,oracle_calls,paper_calls,theory_T,theory_grad_complexity`.
//! `final_grad_norm` and `final_f` are the trace values at row `chosen_index`
//! (square root of `grad_norm_sq`, and `f_val`).
//!
//! Floats are written in shortest round-trip form.

use std::fs::File;
use std::path::Path;

use page_core::{CheckReport, TelemetryRecord};

use crate::error::{HarnessError, Result};

pub const TRACE_HEADER: [&str; 8] =
    ["t", "branch", "f_val", "grad_norm_sq", "est_err_sq", "lyapunov", "oracle_calls", "paper_calls"];

pub const SUMMARY_HEADER: [&str; 9] = [
    "seed",
    "final_grad_norm",
    "final_f",
    "chosen_index",
    "T",
    "oracle_calls",
    "paper_calls",
    "theory_T",
    "theory_grad_complexity",
];

pub const REPORT_HEADER: [&str; 8] =
    ["name", "lhs", "rhs", "margin", "passed", "replicates", "standard_error", "tolerance"];

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub seed: u64,
    pub final_grad_norm: f64,
    pub final_f: f64,
    pub chosen_index: usize,
    pub iters: usize,
    pub oracle_calls: u64,
    pub paper_calls: u64,
    pub theory_iters: Option<u64>,
    pub theory_grad_complexity: Option<f64>,
}

impl SummaryRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            fmt_f64(self.final_grad_norm),
            fmt_f64(self.final_f),
            self.chosen_index.to_string(),
            self.iters.to_string(),
            self.oracle_calls.to_string(),
            self.paper_calls.to_string(),
            self.theory_iters.map(|t| t.to_string()).unwrap_or_default(),
            fmt_opt(self.theory_grad_complexity),
        ]
    }
}

pub fn trace_record(r: &TelemetryRecord) -> Vec<String> {
    vec![
        r.t.to_string(),
        r.branch.as_str().to_string(),
        fmt_opt(r.f_val),
        fmt_opt(r.grad_norm_sq),
        fmt_opt(r.est_err_sq),
        fmt_opt(r.lyapunov),
        r.oracle_calls.to_string(),
        r.paper_calls.to_string(),
    ]
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|source| HarnessError::Csv { path: path.into(), source })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv { path: path.into(), source }
}

/// Writes rows under a header, flushing before returning.
pub fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn write_trace(path: &Path, trace: &[TelemetryRecord]) -> Result<()> {
    write_rows(path, &TRACE_HEADER, trace.iter().map(trace_record))
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_rows(path, &SUMMARY_HEADER, rows.iter().map(SummaryRow::record))
}

pub fn report_record(r: &CheckReport) -> Vec<String> {
    vec![
        r.name.clone(),
        fmt_f64(r.lhs),
        fmt_f64(r.rhs),
        fmt_f64(r.margin),
        r.passed.to_string(),
        r.replicates.to_string(),
        fmt_opt(r.standard_error),
        fmt_f64(r.tolerance),
    ]
}

pub fn write_reports(path: &Path, reports: &[CheckReport]) -> Result<()> {
    write_rows(path, &REPORT_HEADER, reports.iter().map(report_record))
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0, 1e-300, 123456.789, -2.5e17, f64::MIN_POSITIVE, 1.0 / 3.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn trace_file_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rec = TelemetryRecord {
            t: 3,
            branch: page_core::Branch::Small,
            f_val: Some(0.5),
            grad_norm_sq: None,
            est_err_sq: None,
            est_norm_sq: None,
            lyapunov: None,
            oracle_calls: 10,
            paper_calls: 7,
        };
        write_trace(&path, &[rec]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "t,branch,f_val,grad_norm_sq,est_err_sq,lyapunov,oracle_calls,paper_calls\n3,small,0.5,,,,10,7\n"
        );
    }
}
