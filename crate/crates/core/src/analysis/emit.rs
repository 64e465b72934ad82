//! Report rendering: JSON, CSV, and plot-data directories.
//!
//! A plot-data directory holds one tab-separated two-column file per series
//! (header row = axis labels) and a `manifest.json` describing each series.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{IsoError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
    PlotData,
}

impl std::str::FromStr for OutputFormat {
    type Err = IsoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "plotdata" => Ok(Self::PlotData),
            other => Err(IsoError::UnsupportedFormat(format!(
                "unknown output format {other:?} (json, csv, plotdata)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    Line,
    Bar,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSeries {
    pub name: String,
    pub kind: PlotKind,
    pub x_label: String,
    pub y_label: String,
    /// Plot the y axis on a log scale.
    pub semilog_y: bool,
    #[serde(skip)]
    pub points: Vec<(String, f64)>,
}

/// Anything that renders as a table and as plot series.
pub trait Tabular: Serialize {
    /// File name stem for JSON and CSV outputs.
    fn stem(&self) -> &'static str;
    fn is_empty(&self) -> bool;
    fn csv_header(&self) -> Vec<&'static str>;
    fn csv_rows(&self) -> Vec<Vec<String>>;
    fn plot_series(&self) -> Vec<PlotSeries>;
}

#[derive(Serialize)]
struct PlotManifestEntry<'a> {
    file: String,
    points: usize,
    #[serde(flatten)]
    series: &'a PlotSeries,
}

#[derive(Serialize)]
struct PlotManifest<'a> {
    schema_version: u32,
    report: &'static str,
    series: Vec<PlotManifestEntry<'a>>,
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn render_json<R: Tabular>(report: &R) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| IsoError::Io(e.into()))?;
    s.push('\n');
    Ok(s)
}

pub fn render_csv<R: Tabular>(report: &R) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| IsoError::Io(std::io::Error::other(e));
    w.write_record(report.csv_header()).map_err(err)?;
    for row in report.csv_rows() {
        w.write_record(row).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| IsoError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields"))
}

/// Writes `report` under `dest` and returns the files created. Output bytes
/// depend only on the report contents.
pub fn emit_report<R: Tabular>(report: &R, format: OutputFormat, dest: &Path) -> Result<Vec<PathBuf>> {
    if report.is_empty() {
        return Err(IsoError::EmptyReport);
    }
    fs::create_dir_all(dest)?;
    match format {
        OutputFormat::Json => {
            let path = dest.join(format!("{}.json", report.stem()));
            fs::write(&path, render_json(report)?)?;
            Ok(vec![path])
        }
        OutputFormat::Csv => {
            let path = dest.join(format!("{}.csv", report.stem()));
            fs::write(&path, render_csv(report)?)?;
            Ok(vec![path])
        }
        OutputFormat::PlotData => {
            let series = report.plot_series();
            let mut written = Vec::new();
            let mut entries = Vec::new();
            for s in &series {
                let file = format!("{}.tsv", sanitize(&s.name));
                let mut body = format!("{}\t{}\n", s.x_label, s.y_label);
                for (x, y) in &s.points {
                    body.push_str(&format!("{x}\t{y}\n"));
                }
                let path = dest.join(&file);
                fs::write(&path, body)?;
                written.push(path);
                entries.push(PlotManifestEntry {
                    file,
                    points: s.points.len(),
                    series: s,
                });
            }
            let manifest = PlotManifest {
                schema_version: super::REPORT_SCHEMA_VERSION,
                report: report.stem(),
                series: entries,
            };
            let path = dest.join("manifest.json");
            let text = serde_json::to_string_pretty(&manifest).map_err(|e| IsoError::Io(e.into()))?;
            fs::write(&path, text + "\n")?;
            written.push(path);
            Ok(written)
        }
    }
}
