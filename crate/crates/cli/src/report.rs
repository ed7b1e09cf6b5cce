//! Report envelope and the json/csv/text renderers.

use serde::Serialize;
use serde_json::{Map, Value};
use volform_core::JacobianFactor;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_path: Option<String>,
    pub rank_tol: f64,
    pub cluster_tol: f64,
    pub trials: usize,
    pub seed: u64,
    pub rel_tol: f64,
    pub n_samples: usize,
    pub output_format: Format,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub config: RunConfig,
    pub results: Vec<Value>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u128>,
}

/// A [`JacobianFactor`] as written to reports; `log_abs` is `null` when the
/// factor vanishes.
#[derive(Debug, Serialize)]
pub struct FactorOut {
    pub value: f64,
    pub log_abs: Option<f64>,
    pub sign: i8,
    pub pow2: i32,
    pub degenerate: bool,
}

impl From<JacobianFactor> for FactorOut {
    fn from(f: JacobianFactor) -> Self {
        Self {
            value: f.value(),
            log_abs: f.log_abs.is_finite().then_some(f.log_abs),
            sign: f.sign,
            pow2: f.pow2,
            degenerate: f.degenerate,
        }
    }
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Csv => render_csv(&report.results),
        Format::Text => render_text(report),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(items) => {
            if items.iter().all(|x| !x.is_object() && !x.is_array()) {
                let joined: Vec<String> = items.iter().map(scalar).collect();
                out.push((prefix.to_string(), joined.join(";")));
            }
        }
        _ => out.push((prefix.to_string(), scalar(v))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn flat_rows(results: &[Value]) -> Vec<Vec<(String, String)>> {
    results
        .iter()
        .map(|r| {
            let mut row = Vec::new();
            flatten("", r, &mut row);
            row
        })
        .collect()
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_csv(results: &[Value]) -> String {
    let rows = flat_rows(results);
    let mut header: Vec<String> = Vec::new();
    for row in &rows {
        for (k, _) in row {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let mut out = header
        .iter()
        .map(|h| csv_cell(h))
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for row in rows {
        let lookup: Map<String, Value> = row
            .into_iter()
            .map(|(k, v)| (k, Value::String(v)))
            .collect();
        let cells: Vec<String> = header
            .iter()
            .map(|h| lookup.get(h).map(scalar).unwrap_or_default())
            .map(|c| csv_cell(&c))
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn render_text(report: &Report) -> String {
    let mut out = String::new();
    for row in flat_rows(&report.results) {
        let line: Vec<String> = row.into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.push_str(&format!(
        "{}: {}\n",
        report.command,
        if report.pass { "pass" } else { "FAIL" }
    ));
    out
}
