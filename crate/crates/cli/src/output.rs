//! Rendering of command results as JSON, CSV or a plain table. Every format
//! starts from the resolved config.

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

use mecdyn::gallery::Report;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// A command result: the config echo, the full JSON result and flat rows for CSV and tables.
pub struct Output {
    config: Value,
    result: Value,
    rows: Vec<Value>,
    csv: Option<String>,
    /// Printed before the row table.
    table: Option<String>,
    rows_in_table: bool,
}

impl Output {
    pub fn rows(config: Value, rows: Vec<Value>) -> Self {
        let result = json!({ "rows": rows });
        Output::rows_with_result(config, rows, result)
    }

    pub fn rows_with_result(config: Value, rows: Vec<Value>, result: Value) -> Self {
        Output {
            config,
            result,
            rows,
            csv: None,
            table: None,
            rows_in_table: true,
        }
    }

    pub fn profile(config: Value, result: Value, csv: String) -> Self {
        let rows = result["values"]
            .as_array()
            .map(|vs| {
                vs.iter()
                    .map(|v| {
                        let value = v.get("exact").cloned().unwrap_or_else(|| v["average"].clone());
                        json!({ "n": v["n"], "size": v["size"], "value": value })
                    })
                    .collect()
            })
            .unwrap_or_default();
        Output {
            config,
            result,
            rows,
            csv: Some(csv),
            table: None,
            rows_in_table: true,
        }
    }

    pub fn certificate(config: Value, rows: Vec<Value>, result: Value) -> Self {
        let summary = format!(
            "{} {}: {}\n",
            result["kind"].as_str().unwrap_or(""),
            result["pair"],
            result["verdict"].as_str().unwrap_or("")
        );
        let mut out = Output::rows_with_result(config, rows, result);
        out.table = Some(summary);
        out
    }

    pub fn report(config: Value, report: &Report) -> Self {
        let rows = report
            .rows
            .iter()
            .map(|r| json!({ "id": r.id, "status": r.status.to_string(), "detail": r.detail }))
            .collect();
        Output {
            config,
            result: json!(report),
            rows,
            csv: None,
            table: Some(report.table()),
            rows_in_table: false,
        }
    }

    pub fn render(&self, format: Format) -> Result<String, String> {
        match format {
            Format::Json => {
                let doc = json!({ "config": self.config, "result": self.result });
                let mut s = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => {
                let body = match &self.csv {
                    Some(csv) => csv.clone(),
                    None => rows_to_csv(&self.rows)?,
                };
                Ok(format!("# config: {}\n{body}", self.config))
            }
            Format::Table => {
                let mut s = String::new();
                if let Some(map) = self.config.as_object() {
                    for (k, v) in map {
                        if !v.is_null() {
                            s.push_str(&format!("# {k}: {}\n", cell(v)));
                        }
                    }
                }
                if let Some(t) = &self.table {
                    s.push_str(t);
                }
                if self.rows_in_table {
                    s.push_str(&rows_to_table(&self.rows));
                }
                Ok(s)
            }
        }
    }
}

/// Column names in first-seen order.
fn columns(rows: &[Value]) -> Vec<String> {
    let mut cols: Vec<String> = Vec::new();
    for r in rows {
        if let Some(map) = r.as_object() {
            for k in map.keys() {
                if !cols.contains(k) {
                    cols.push(k.clone());
                }
            }
        }
    }
    cols
}

/// Exact values keep their fraction, everything else its JSON text.
fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        Value::Object(m) if m.contains_key("exact") => cell(&m["exact"]),
        other => other.to_string(),
    }
}

fn rows_to_csv(rows: &[Value]) -> Result<String, String> {
    let cols = columns(rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&cols).map_err(|e| e.to_string())?;
    for r in rows {
        w.write_record(cols.iter().map(|c| cell(&r[c]))).map_err(|e| e.to_string())?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

fn rows_to_table(rows: &[Value]) -> String {
    let cols = columns(rows);
    let cells: Vec<Vec<String>> = rows.iter().map(|r| cols.iter().map(|c| cell(&r[c])).collect()).collect();
    let widths: Vec<usize> = cols
        .iter()
        .enumerate()
        .map(|(i, c)| cells.iter().map(|r| r[i].chars().count()).max().unwrap_or(0).max(c.chars().count()))
        .collect();
    let line = |items: &[String]| {
        let padded: Vec<String> = items.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        format!("{}\n", padded.join("  ").trim_end())
    };
    let mut s = line(&cols);
    for r in &cells {
        s.push_str(&line(r));
    }
    s
}
