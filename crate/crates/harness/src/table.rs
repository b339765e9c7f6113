//! Results tables: one row per (experiment, method).

use std::path::{Path, PathBuf};

use crate::io::write_atomic;
use crate::record::{RunRecord, RunStatus};
use crate::HarnessError;

/// Published cost of the single-bounce collocation solution, shown for
/// comparison only.
pub const DIRECT_REFERENCE_COST: f64 = 114.0;

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub optimal: Option<usize>,
    pub seed: Option<usize>,
    pub method: String,
    pub actual: Option<usize>,
    pub cost: Option<f64>,
    pub converged: Option<bool>,
}

pub const COLUMNS: [&str; 6] = ["optimal #", "seed #", "method", "actual #", "cost", "converged"];

fn method_rank(method: &str) -> usize {
    match method {
        "Ξ" => 0,
        "D_xR" => 1,
        "Direct" => 2,
        "No Ext." => 3,
        _ => 4,
    }
}

impl TableRow {
    pub fn from_record(r: &RunRecord) -> Self {
        let ok = r.status == RunStatus::Completed;
        Self {
            optimal: r.config.labels.optimal,
            seed: r.config.labels.seed,
            method: r.method().to_string(),
            actual: ok.then_some(r.impact_count),
            cost: if ok { r.final_cost } else { None },
            converged: ok.then_some(r.converged),
        }
    }

    fn cells(&self, precise: bool) -> [String; 6] {
        let dash = || "-".to_string();
        let num = |v: Option<usize>| v.map_or_else(dash, |v| v.to_string());
        [
            num(self.optimal),
            num(self.seed),
            self.method.clone(),
            num(self.actual),
            self.cost.map_or_else(dash, |c| {
                if precise {
                    c.to_string()
                } else {
                    format!("{c:.3}")
                }
            }),
            self.converged
                .map_or_else(dash, |c| if c { "Yes" } else { "No" }.to_string()),
        ]
    }
}

/// Rows in display order. With `reference`, the published collocation row
/// is added after the single-bounce-seeded, zero-bounce-optimal rows.
pub fn rows(records: &[RunRecord], reference: bool) -> Vec<TableRow> {
    let mut rows: Vec<TableRow> = records.iter().map(TableRow::from_record).collect();
    if reference && rows.iter().any(|r| r.optimal == Some(0) && r.seed == Some(1)) {
        rows.push(TableRow {
            optimal: Some(0),
            seed: Some(1),
            method: "Direct".into(),
            actual: Some(1),
            cost: Some(DIRECT_REFERENCE_COST),
            converged: Some(true),
        });
    }
    rows.sort_by_key(|r| {
        (
            r.optimal.unwrap_or(usize::MAX),
            r.seed.unwrap_or(usize::MAX),
            method_rank(&r.method),
        )
    });
    rows
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_csv(rows: &[TableRow]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let cells = r.cells(true);
        out.push_str(&cells.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

pub fn render_text(rows: &[TableRow]) -> String {
    let body: Vec<[String; 6]> = rows.iter().map(|r| r.cells(false)).collect();
    let mut width = COLUMNS.map(|c| c.chars().count());
    for cells in &body {
        for (w, c) in width.iter_mut().zip(cells) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(width)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(&COLUMNS.map(String::from));
    out.push('\n');
    out.push_str(&"-".repeat(width.iter().sum::<usize>() + 2 * (width.len() - 1)));
    out.push('\n');
    for cells in &body {
        out.push_str(&line(cells));
        out.push('\n');
    }
    out
}

/// Writes `<stem>.csv` and `<stem>.txt`.
pub fn emit_table(
    records: &[RunRecord],
    stem: &Path,
    reference: bool,
) -> Result<(PathBuf, PathBuf), HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::Config("no run records to tabulate".into()));
    }
    let rows = rows(records, reference);
    let csv = stem.with_extension("csv");
    let txt = stem.with_extension("txt");
    write_atomic(&csv, render_csv(&rows).as_bytes())?;
    write_atomic(&txt, render_text(&rows).as_bytes())?;
    Ok((csv, txt))
}
