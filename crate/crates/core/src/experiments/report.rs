use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How one accuracy cell was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellInfo {
    pub feature: String,
    pub kernel: String,
    pub c: f64,
    pub val_accuracy: f64,
    pub converged: bool,
    pub split_seed: u64,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
}

/// A grid of accuracies with labels and per-cell provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub title: String,
    /// Header of the row-label column.
    pub row_header: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// `None` marks a deliberately omitted cell.
    pub cells: Vec<Vec<Option<f64>>>,
    pub info: Vec<Vec<Option<CellInfo>>>,
}

impl AccuracyTable {
    pub fn new(
        title: impl Into<String>,
        row_header: impl Into<String>,
        row_labels: Vec<String>,
        col_labels: Vec<String>,
    ) -> Self {
        let (r, c) = (row_labels.len(), col_labels.len());
        Self {
            title: title.into(),
            row_header: row_header.into(),
            row_labels,
            col_labels,
            cells: vec![vec![None; c]; r],
            info: vec![vec![None; c]; r],
        }
    }

    pub fn set(&mut self, row: usize, col: usize, acc: f64, info: Option<CellInfo>) {
        self.cells[row][col] = Some(acc);
        self.info[row][col] = info;
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row][col]
    }

    /// Column `col` as a vector, omitted cells skipped.
    pub fn column(&self, col: usize) -> Vec<f64> {
        self.cells.iter().filter_map(|r| r[col]).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| {
            Err(Error::InvalidArgument(format!(
                "table {:?}: {m}",
                self.title
            )))
        };
        if self.cells.len() != self.row_labels.len() || self.info.len() != self.row_labels.len() {
            return bad("row count does not match labels".into());
        }
        for (row, info) in self.cells.iter().zip(&self.info) {
            if row.len() != self.col_labels.len() || info.len() != self.col_labels.len() {
                return bad("column count does not match labels".into());
            }
            if let Some(v) = row.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
                return bad(format!("accuracy {v} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Output of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub seed: u64,
    pub dataset_seed: u64,
    pub config_hash: String,
    pub tables: Vec<AccuracyTable>,
    /// Free-form facts recorded alongside the tables (protocol choices,
    /// schedule statistics).
    pub notes: Vec<(String, String)>,
}

impl Report {
    pub fn table(&self, title: &str) -> Option<&AccuracyTable> {
        self.tables.iter().find(|t| t.title == title)
    }

    pub fn note(&self, key: &str) -> Option<&str> {
        self.notes
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// Report file formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

fn fmt_acc(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.4}")).unwrap_or_default()
}

/// One CSV for all tables of the report; the first column names the table.
pub fn render_csv(report: &Report) -> Result<String> {
    let mut out = String::new();
    let first = match report.tables.first() {
        Some(t) => t,
        None => return Ok(out),
    };
    for t in &report.tables {
        t.validate()?;
        if t.col_labels != first.col_labels || t.row_header != first.row_header {
            return Err(Error::InvalidArgument(
                "report tables must share column layout".into(),
            ));
        }
    }
    let _ = writeln!(
        out,
        "table,{},{}",
        first.row_header,
        first.col_labels.join(",")
    );
    for t in &report.tables {
        for (label, row) in t.row_labels.iter().zip(&t.cells) {
            let cells: Vec<String> = row.iter().map(|v| fmt_acc(*v)).collect();
            let _ = writeln!(out, "{},{},{}", t.title, label, cells.join(","));
        }
    }
    Ok(out)
}

pub fn render_markdown(report: &Report) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "# {} report\n", report.experiment);
    let _ = writeln!(
        out,
        "Seed {}, dataset seed {}, config {}.",
        report.seed,
        report.dataset_seed,
        &report.config_hash[..12.min(report.config_hash.len())]
    );
    let _ = writeln!(out, "All times are simulated-schedule hours.\n");
    for (k, v) in &report.notes {
        let _ = writeln!(out, "- {k}: {v}");
    }
    if !report.notes.is_empty() {
        out.push('\n');
    }
    for t in &report.tables {
        t.validate()?;
        let _ = writeln!(out, "## {}\n", t.title);
        let _ = writeln!(out, "| {} | {} |", t.row_header, t.col_labels.join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(t.col_labels.len() + 1));
        for (label, row) in t.row_labels.iter().zip(&t.cells) {
            let cells: Vec<String> = row.iter().map(|v| fmt_acc(*v)).collect();
            let _ = writeln!(out, "| {} | {} |", label, cells.join(" | "));
        }
        out.push('\n');
    }
    Ok(out)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    experiment: &'a str,
    seed: u64,
    dataset_seed: u64,
    config_hash: &'a str,
    notes: &'a [(String, String)],
    tables: Vec<SidecarTable<'a>>,
}

#[derive(Serialize)]
struct SidecarTable<'a> {
    title: &'a str,
    row_labels: &'a [String],
    col_labels: &'a [String],
    cells: &'a [Vec<Option<CellInfo>>],
}

pub fn render_metadata(report: &Report) -> Result<String> {
    let side = Sidecar {
        experiment: &report.experiment,
        seed: report.seed,
        dataset_seed: report.dataset_seed,
        config_hash: &report.config_hash,
        notes: &report.notes,
        tables: report
            .tables
            .iter()
            .map(|t| SidecarTable {
                title: &t.title,
                row_labels: &t.row_labels,
                col_labels: &t.col_labels,
                cells: &t.info,
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&side)?;
    s.push('\n');
    Ok(s)
}

/// Writes the requested formats plus the metadata sidecar into `dir`.
/// Returns the written paths.
pub fn emit_report(report: &Report, formats: &[ReportFormat], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut write = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    for f in formats {
        match f {
            ReportFormat::Csv => write(format!("{}.csv", report.experiment), render_csv(report)?)?,
            ReportFormat::Markdown => write(
                format!("{}.md", report.experiment),
                render_markdown(report)?,
            )?,
        }
    }
    write(
        format!("{}.meta.json", report.experiment),
        render_metadata(report)?,
    )?;
    Ok(written)
}
