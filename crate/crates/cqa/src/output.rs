//! Rendering command results as text, JSON or CSV.
//!
//! Every command produces a [`Report`]: a JSON document, a table view of
//! its main result, and human-readable summary lines. The text format
//! prints the summary and the table, CSV prints only the table, and JSON
//! prints the document. Output is a pure function of the report, so equal
//! inputs give byte-identical output.

use std::fmt::Write as _;

use cqa_core::{AttrId, IntervalAnswer, MTuple, Tuple, Universe, Value};
use serde_json::{json, Map, Value as Json};

/// Output format selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    /// Summary lines followed by an aligned table.
    #[default]
    Text,
    /// One JSON document.
    Json,
    /// The result table as comma-separated values with a header row.
    Csv,
}

/// A rendered command result.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    /// Machine-readable result.
    pub json: Json,
    /// Column names of the table view.
    pub columns: Vec<String>,
    /// Table rows; cells are JSON scalars (null renders as empty).
    pub rows: Vec<Vec<Json>>,
    /// Summary lines, suppressed by `--quiet`.
    pub summary: Vec<String>,
}

impl Report {
    /// Renders the report in `format`.
    pub fn render(&self, format: Format, quiet: bool) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Csv => self.csv(),
            Format::Text => {
                let mut s = String::new();
                if !quiet {
                    for line in &self.summary {
                        s.push_str(line);
                        s.push('\n');
                    }
                }
                if !self.columns.is_empty() {
                    s.push_str(&self.text_table());
                }
                s
            }
        }
    }

    fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(cell_text)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    fn text_table(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(cell_text).collect()).collect();
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.chars().count()).collect();
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut s = String::new();
        let line = |s: &mut String, row: &[String]| {
            let parts: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(s, "{}", parts.join(" | ").trim_end());
        };
        line(&mut s, &self.columns);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        let _ = writeln!(s, "{}", rule.join("-+-"));
        for row in &cells {
            line(&mut s, row);
        }
        s
    }
}

fn cell_text(v: &Json) -> String {
    match v {
        Json::Null => String::new(),
        Json::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// A value as a JSON scalar.
pub fn value_json(v: &Value) -> Json {
    match v {
        Value::Int(i) => json!(i),
        Value::Float(f) => serde_json::Number::from_f64(*f).map_or(Json::Null, Json::Number),
        Value::Text(s) => json!(s),
    }
}

/// A tuple as a JSON object keyed by attribute name.
pub fn tuple_json(t: &Tuple, u: &Universe) -> Json {
    let mut m = Map::new();
    for (a, v) in t.iter() {
        m.insert(u.name(a).to_string(), value_json(v));
    }
    Json::Object(m)
}

/// The cells of `t` over `columns` (null where undefined).
pub fn tuple_cells(t: &Tuple, columns: &[AttrId]) -> Vec<Json> {
    columns.iter().map(|a| t.get(*a).map_or(Json::Null, value_json)).collect()
}

/// An m-tuple as a JSON object mapping attribute names to value arrays.
pub fn mtuple_json(m: &MTuple, u: &Universe) -> Json {
    let mut o = Map::new();
    for (a, s) in m.iter() {
        o.insert(u.name(a).to_string(), Json::Array(s.iter().map(value_json).collect()));
    }
    Json::Object(o)
}

/// The cells of an m-tuple over every attribute: values joined by `|`.
pub fn mtuple_cells(m: &MTuple, u: &Universe) -> Vec<Json> {
    u.ids()
        .map(|a| {
            m.get(a).map_or(Json::Null, |s| Json::String(s.iter().map(Value::to_string).collect::<Vec<_>>().join("|")))
        })
        .collect()
}

/// An interval answer as JSON: `null`, or `{glb, lub, exact}`.
pub fn interval_json(i: &IntervalAnswer) -> Json {
    match i {
        IntervalAnswer::Null => Json::Null,
        IntervalAnswer::CountZero => json!({"glb": 0, "lub": 0, "exact": true}),
        IntervalAnswer::Interval { glb, lub, exact } => {
            json!({"glb": value_json(glb), "lub": value_json(lub), "exact": exact})
        }
    }
}

/// `glb`, `lub` and `exact` cells of an interval answer.
pub fn interval_cells(i: &IntervalAnswer) -> Vec<Json> {
    match i {
        IntervalAnswer::Null => vec![Json::Null, Json::Null, Json::Null],
        IntervalAnswer::CountZero => vec![json!(0), json!(0), json!(true)],
        IntervalAnswer::Interval { glb, lub, exact } => vec![value_json(glb), value_json(lub), json!(exact)],
    }
}
