//! Table serializations: CSV for spreadsheets, JSON mirroring [`Cpt`], and an
//! XMLBIF `<DEFINITION>` fragment for Bayesian-network tools.
//!
//! All three list rows in enumeration order (last parent varies fastest),
//! which is also XMLBIF's row-major convention.

use std::fmt;
use std::str::FromStr;

use cptgen_core::{enumerate_configurations, Cpt, Distribution, NetworkSpec, ParentSpec};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Xmlbif,
}

impl Format {
    pub fn content_type(self) -> &'static str {
        match self {
            Format::Csv => "text/csv; charset=utf-8",
            Format::Json => "application/json",
            Format::Xmlbif => "application/xml; charset=utf-8",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Xmlbif => "xml",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "xmlbif" | "xmlbif-fragment" | "xml" => Ok(Format::Xmlbif),
            other => Err(format!("unknown format '{other}' (expected csv, json or xmlbif)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Xmlbif => "xmlbif",
        })
    }
}

pub fn export_cpt(cpt: &Cpt, format: Format) -> Vec<u8> {
    match format {
        Format::Csv => to_csv(cpt),
        Format::Json => to_json(cpt),
        Format::Xmlbif => to_xmlbif(cpt).into_bytes(),
    }
}

/// Header: parent names, then `P(<child>=<state>)` per child state.
pub fn to_csv(cpt: &Cpt) -> Vec<u8> {
    let spec = cpt.spec();
    let mut out = csv::Writer::from_writer(Vec::new());
    let header = spec
        .parents
        .iter()
        .map(|p| p.name.clone())
        .chain(spec.child_states.iter().map(|s| format!("P({}={s})", spec.child_name)));
    out.write_record(header).expect("write to memory");
    for (config, row) in cpt.iter() {
        let record = config
            .labels(spec)
            .map(|(_, s)| s.to_string())
            .chain(row.values().iter().map(f64::to_string));
        out.write_record(record).expect("write to memory");
    }
    out.into_inner().expect("flush to memory")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonTable {
    child: JsonVariable,
    parents: Vec<JsonParent>,
    rows: Vec<JsonRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonVariable {
    name: String,
    states: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonParent {
    name: String,
    states: Vec<String>,
    weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRow {
    configuration: IndexMap<String, String>,
    distribution: Vec<f64>,
}

pub fn to_json(cpt: &Cpt) -> Vec<u8> {
    let spec = cpt.spec();
    let table = JsonTable {
        child: JsonVariable {
            name: spec.child_name.clone(),
            states: spec.child_states.clone(),
        },
        parents: spec
            .parents
            .iter()
            .map(|p| JsonParent {
                name: p.name.clone(),
                states: p.states.clone(),
                weight: p.weight,
            })
            .collect(),
        rows: cpt
            .iter()
            .map(|(config, row)| JsonRow {
                configuration: config
                    .labels(spec)
                    .map(|(p, s)| (p.to_string(), s.to_string()))
                    .collect(),
                distribution: row.values().to_vec(),
            })
            .collect(),
    };
    let mut bytes = serde_json::to_vec_pretty(&table).expect("table serializes");
    bytes.push(b'\n');
    bytes
}

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("malformed table JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid network: {0}")]
    Spec(String),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("expected {expected} rows, found {found}")]
    RowCount { expected: usize, found: usize },
}

/// Inverse of [`to_json`]. Rows must appear in enumeration order.
pub fn import_json(bytes: &[u8]) -> Result<Cpt, ImportError> {
    let table: JsonTable = serde_json::from_slice(bytes)?;
    let spec = NetworkSpec {
        child_name: table.child.name,
        child_states: table.child.states,
        parents: table
            .parents
            .into_iter()
            .map(|p| ParentSpec {
                name: p.name,
                states: p.states,
                weight: p.weight,
            })
            .collect(),
    }
    .into_valid()
    .map_err(|report| ImportError::Spec(report.to_string()))?;

    let configs = enumerate_configurations(&spec);
    if configs.len() != table.rows.len() {
        return Err(ImportError::RowCount {
            expected: configs.len(),
            found: table.rows.len(),
        });
    }
    let mut rows = Vec::with_capacity(configs.len());
    for (i, (expected, row)) in configs.iter().zip(table.rows).enumerate() {
        let labelled: Vec<(&str, &str)> = expected.labels(&spec).collect();
        let found: Vec<(&str, &str)> = row
            .configuration
            .iter()
            .map(|(p, s)| (p.as_str(), s.as_str()))
            .collect();
        if labelled != found {
            return Err(ImportError::Row {
                row: i,
                message: format!("expected configuration {}", expected.display(&spec)),
            });
        }
        let dist = Distribution::with_len(row.distribution, spec.child_arity()).map_err(|e| ImportError::Row {
            row: i,
            message: e.to_string(),
        })?;
        rows.push(dist);
    }
    Cpt::new(spec, rows).map_err(|e| ImportError::Spec(e.to_string()))
}

fn escape_xml(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// A single XMLBIF 0.3 `<DEFINITION>` block, one table line per parental
/// configuration.
pub fn to_xmlbif(cpt: &Cpt) -> String {
    let spec = cpt.spec();
    let mut out = String::from("<DEFINITION>\n");
    out.push_str(&format!("\t<FOR>{}</FOR>\n", escape_xml(&spec.child_name)));
    for parent in &spec.parents {
        out.push_str(&format!("\t<GIVEN>{}</GIVEN>\n", escape_xml(&parent.name)));
    }
    out.push_str("\t<TABLE>\n");
    for row in cpt.rows() {
        let line: Vec<String> = row.values().iter().map(f64::to_string).collect();
        out.push_str("\t\t");
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.push_str("\t</TABLE>\n</DEFINITION>\n");
    out
}
