//! Report text format.
//!
//! ```text
//! report-version = 1
//! report.name = "approx"
//! report.seed = "7"
//! scalar.final_error = 0.0123
//! series.error = [0.5, 0.1, 0.0123]
//! verdict.error_decreasing = "decreasing(error)"
//! passed.error_decreasing = true
//! note.generator = "localized"
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so parsing a report
//! recovers every number bit for bit.

use std::path::{Path, PathBuf};

use toml::Value;

use super::config::line_of;
use crate::error::{LabError, Result};
use crate::report::{ExperimentReport, Verdict};

pub const REPORT_VERSION: i64 = 1;

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

pub fn quote(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

/// Bare TOML key when possible, quoted otherwise.
pub fn key_segment(name: &str) -> String {
    let bare = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
    if bare { name.to_string() } else { quote(name) }
}

fn array(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|v| format_float(*v)).collect();
    format!("[{}]", items.join(", "))
}

pub fn emit_report(rep: &ExperimentReport) -> String {
    let mut out = format!("report-version = {REPORT_VERSION}\n");
    out += &format!("report.name = {}\n", quote(&rep.name));
    if let Some(seed) = rep.seed {
        out += &format!("report.seed = {}\n", quote(&seed.to_string()));
    }
    if !rep.config_hash.is_empty() {
        out += &format!("report.config-hash = {}\n", quote(&rep.config_hash));
    }
    if let Some(ts) = &rep.timestamp {
        out += &format!("report.timestamp = {}\n", quote(ts));
    }
    for (k, v) in &rep.scalars {
        out += &format!("scalar.{} = {}\n", key_segment(k), format_float(*v));
    }
    for (k, v) in &rep.series {
        out += &format!("series.{} = {}\n", key_segment(k), array(v));
    }
    for (k, v) in &rep.verdicts {
        out += &format!("verdict.{} = {}\n", key_segment(k), quote(&v.rule.to_string()));
        out += &format!("passed.{} = {}\n", key_segment(k), v.passed);
    }
    for (k, v) in &rep.notes {
        out += &format!("note.{} = {}\n", key_segment(k), quote(v));
    }
    out
}

/// Flattens nested tables back to dotted names below one section.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    match v {
        Value::Table(t) => {
            for (k, v) in t {
                let name = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&name, v, out);
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

pub fn parse_report(text: &str) -> Result<ExperimentReport> {
    let first = text.lines().next().unwrap_or("");
    if first.trim() != format!("report-version = {REPORT_VERSION}") {
        return Err(LabError::Format(format!(
            "line 1: expected 'report-version = {REPORT_VERSION}', found '{first}'"
        )));
    }
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| LabError::Format(super::config::describe_toml_error(text, &e)))?;
    let mut rep = ExperimentReport::default();
    let mut passed = std::collections::BTreeMap::new();
    for (section, value) in &table {
        if section == "report-version" {
            continue;
        }
        let mut entries = Vec::new();
        flatten("", value, &mut entries);
        for (name, v) in entries {
            let bad = |what: &str| {
                LabError::Format(format!(
                    "line {}: {section}.{name} {what}",
                    line_of(text, &format!("{section}.{name}")).unwrap_or(0)
                ))
            };
            match section.as_str() {
                "report" => {
                    let s = v.as_str().ok_or_else(|| bad("must be a string"))?.to_string();
                    match name.as_str() {
                        "name" => rep.name = s,
                        "seed" => rep.seed = Some(s.parse().map_err(|_| bad("is not a u64"))?),
                        "config-hash" => rep.config_hash = s,
                        "timestamp" => rep.timestamp = Some(s),
                        _ => return Err(bad("is not a report field")),
                    }
                }
                "scalar" => {
                    rep.scalars.insert(name.clone(), as_f64(&v).ok_or_else(|| bad("must be a number"))?);
                }
                "series" => {
                    let arr = v.as_array().ok_or_else(|| bad("must be an array"))?;
                    let xs = arr
                        .iter()
                        .map(|x| as_f64(x).ok_or_else(|| bad("must contain numbers only")))
                        .collect::<Result<Vec<_>>>()?;
                    rep.series.insert(name.clone(), xs);
                }
                "verdict" => {
                    let rule = v.as_str().ok_or_else(|| bad("must be a string"))?.parse()?;
                    rep.verdicts.insert(name.clone(), Verdict { rule, passed: false });
                }
                "passed" => {
                    passed.insert(name.clone(), v.as_bool().ok_or_else(|| bad("must be a boolean"))?);
                }
                "note" => {
                    rep.notes.insert(name.clone(), v.as_str().ok_or_else(|| bad("must be a string"))?.to_string());
                }
                _ => return Err(bad("is in an unknown section")),
            }
        }
    }
    for (k, v) in rep.verdicts.iter_mut() {
        v.passed = *passed
            .get(k)
            .ok_or_else(|| LabError::Format(format!("verdict {k} has no passed.{k} flag")))?;
    }
    if passed.len() != rep.verdicts.len() {
        return Err(LabError::Format("passed.* flag without a matching verdict".into()));
    }
    Ok(rep)
}

/// Writes `<dir>/<name>.report` and returns the path.
pub fn write_report(dir: &Path, rep: &ExperimentReport) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let path = dir.join(format!("{}.report", rep.name));
    std::fs::write(&path, emit_report(rep)).map_err(|e| LabError::io(&path, e))?;
    Ok(path)
}

pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse_report(&text)
}
