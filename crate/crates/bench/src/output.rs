//! Report tables as CSV or markdown.

use std::collections::BTreeMap;
use std::path::Path;

use mcd_core::metrics::{EvaluationReport, Metric};

use crate::error::{BenchError, Result};

pub const CSV_HEADER: [&str; 11] = [
    "method",
    "model",
    "metric",
    "value",
    "N",
    "r",
    "seed",
    "wall_time",
    "n_test",
    "grid_size",
    "setting",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(BenchError::Setting(format!(
                "unknown format `{other}`; expected csv or markdown"
            ))),
        }
    }
}

/// 17 significant digits, enough to reload the exact `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render_csv(reports: &[EvaluationReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record([
            r.method.clone(),
            r.model.clone(),
            r.metric.name().to_string(),
            format_float(r.value),
            r.contrast_size.to_string(),
            format_float(r.ratio),
            r.seed.to_string(),
            format_float(r.wall_time_seconds),
            r.n_test.to_string(),
            r.grid_size.to_string(),
            r.setting.clone(),
        ])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| BenchError::Setting(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn column_label(r: &EvaluationReport) -> String {
    if r.setting.is_empty() {
        r.method.clone()
    } else {
        format!("{} ({})", r.method, r.setting)
    }
}

/// Long table of every report followed by a model-by-method table of medians.
pub fn render_markdown(reports: &[EvaluationReport]) -> String {
    let mut out =
        String::from("| method | model | metric | value | N | r | seed | wall_time | setting |\n");
    out.push_str("|---|---|---|---:|---:|---:|---:|---:|---|\n");
    for r in reports {
        out.push_str(&format!(
            "| {} | {} | {} | {:.4} | {} | {} | {} | {:.3} | {} |\n",
            r.method,
            r.model,
            r.metric.name(),
            r.value,
            r.contrast_size,
            r.ratio,
            r.seed,
            r.wall_time_seconds,
            r.setting
        ));
    }
    let mut cells: BTreeMap<(&str, &str), BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    let mut columns: Vec<String> = Vec::new();
    for r in reports {
        let col = column_label(r);
        if !columns.contains(&col) {
            columns.push(col.clone());
        }
        cells
            .entry((r.metric.name(), r.model.as_str()))
            .or_default()
            .entry(col)
            .or_default()
            .push(r.value);
    }
    out.push_str("\nMedians over seeds\n\n| metric | model |");
    for c in &columns {
        out.push_str(&format!(" {c} |"));
    }
    out.push_str("\n|---|---|");
    out.push_str(&"---:|".repeat(columns.len()));
    out.push('\n');
    for ((metric, model), by_method) in &mut cells {
        out.push_str(&format!("| {metric} | {model} |"));
        for c in &columns {
            match by_method.get_mut(c) {
                Some(v) => out.push_str(&format!(" {:.4} |", median(v))),
                None => out.push_str(" |"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn render(reports: &[EvaluationReport], format: Format) -> Result<String> {
    if reports.is_empty() {
        return Err(BenchError::Setting("no reports to emit".into()));
    }
    match format {
        Format::Csv => render_csv(reports),
        Format::Markdown => Ok(render_markdown(reports)),
    }
}

pub fn emit_tables(
    reports: &[EvaluationReport],
    path: impl AsRef<Path>,
    format: Format,
) -> Result<()> {
    let text = render(reports, format)?;
    std::fs::write(path.as_ref(), text).map_err(|e| BenchError::io(path.as_ref(), e))
}

pub fn parse_csv_reports(text: &str) -> Result<Vec<EvaluationReport>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(BenchError::Setting(format!(
            "unexpected report header: {}",
            header.join(",")
        )));
    }
    let bad = |row: usize, col: &str| BenchError::Setting(format!("report row {row}: bad `{col}`"));
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let row = i + 1;
            let num =
                |c: usize| -> Result<f64> { rec[c].parse().map_err(|_| bad(row, CSV_HEADER[c])) };
            let int =
                |c: usize| -> Result<u64> { rec[c].parse().map_err(|_| bad(row, CSV_HEADER[c])) };
            Ok(EvaluationReport {
                method: rec[0].to_string(),
                model: rec[1].to_string(),
                metric: rec[2].parse::<Metric>()?,
                value: num(3)?,
                contrast_size: int(4)? as usize,
                ratio: num(5)?,
                seed: int(6)?,
                wall_time_seconds: num(7)?,
                n_test: int(8)? as usize,
                grid_size: int(9)? as usize,
                setting: rec[10].to_string(),
            })
        })
        .collect()
}
