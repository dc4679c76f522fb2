use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::{AggregateMetrics, ImageMetrics, Summary};

pub const REPORT_COLUMNS: [&str; 8] = ["image_id", "aji", "dice", "f1", "pq", "dq", "sq", "sbd"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// Per-image rows, in output order.
    pub rows: Vec<(String, ImageMetrics)>,
    pub aggregate: AggregateMetrics,
    /// Images whose SBD was skipped because a map had no instances.
    /// `None` when SBD was not requested.
    pub sbd_skipped: Option<usize>,
}

fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

fn image_cells(m: &ImageMetrics) -> [String; 7] {
    [
        fixed(m.aji),
        fixed(m.dice),
        fixed(m.f1),
        fixed(m.pq.pq),
        fixed(m.pq.dq),
        fixed(m.pq.sq),
        m.sbd.map(fixed).unwrap_or_default(),
    ]
}

fn summary_cells(a: &AggregateMetrics, pick: fn(&Summary) -> f64) -> [String; 7] {
    [
        fixed(pick(&a.aji)),
        fixed(pick(&a.dice)),
        fixed(pick(&a.f1)),
        fixed(pick(&a.pq)),
        fixed(pick(&a.dq)),
        fixed(pick(&a.sq)),
        a.sbd.as_ref().map(|s| fixed(pick(s))).unwrap_or_default(),
    ]
}

fn table(report: &Report) -> Vec<(String, [String; 7])> {
    let mut rows: Vec<(String, [String; 7])> = report
        .rows
        .iter()
        .map(|(id, m)| (id.clone(), image_cells(m)))
        .collect();
    rows.push(("mean".into(), summary_cells(&report.aggregate, |s| s.mean)));
    rows.push(("std".into(), summary_cells(&report.aggregate, |s| s.std)));
    rows
}

fn footer(report: &Report) -> Option<String> {
    match report.sbd_skipped {
        Some(n) if n > 0 => Some(format!("sbd skipped for {n} image(s) with an empty map")),
        _ => None,
    }
}

/// Renders the report to a string. Identical input gives identical bytes.
pub fn render_report(report: &Report, format: ReportFormat) -> Result<String> {
    if report.rows.is_empty() {
        return Err(Error::Report("no per-image rows".into()));
    }
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let err = |e: csv::Error| Error::Report(e.to_string());
            w.write_record(REPORT_COLUMNS).map_err(err)?;
            for (id, cells) in table(report) {
                w.write_record(std::iter::once(id.as_str()).chain(cells.iter().map(String::as_str)))
                    .map_err(err)?;
            }
            let mut out = String::from_utf8(w.into_inner().map_err(|e| Error::Report(e.to_string()))?)
                .map_err(|e| Error::Report(e.to_string()))?;
            if let Some(note) = footer(report) {
                let _ = writeln!(out, "# {note}");
            }
            Ok(out)
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            let _ = writeln!(out, "| {} |", REPORT_COLUMNS.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(REPORT_COLUMNS.len()));
            for (id, cells) in table(report) {
                let id = id.replace('|', "\\|");
                let _ = writeln!(out, "| {id} | {} |", cells.join(" | "));
            }
            if let Some(note) = footer(report) {
                let _ = writeln!(out, "\n_{note}_");
            }
            Ok(out)
        }
    }
}

pub fn write_report(report: &Report, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    let text = render_report(report, format)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
