//! On-disk artifacts: content hashes, run manifests and flat metric tables.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;

use fgpl_core::metrics::{EvalReport, GroupRecall};
use fgpl_core::pipeline::{MethodResult, RunConfig};
use fgpl_core::{FgplError, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOL: &str = "fgpl";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// File name and SHA-256 of an input or output. Only the file name is kept
/// so that reports do not depend on the directory they were produced in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
}

pub fn digest_bytes(name: &Path, bytes: &[u8]) -> FileDigest {
    FileDigest {
        file: name
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sha256: hex::encode(Sha256::digest(bytes)),
    }
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| FgplError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<(String, FileDigest)> {
    let bytes = read_bytes(path)?;
    let digest = digest_bytes(path, &bytes);
    let text = String::from_utf8(bytes).map_err(|e| {
        FgplError::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    })?;
    Ok((text, digest))
}

pub fn write_text(path: &Path, text: &str) -> Result<FileDigest> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| FgplError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| FgplError::io(path, e))?;
    Ok(digest_bytes(path, text.as_bytes()))
}

/// Everything needed to reproduce one command's artifacts.
#[derive(Debug, Serialize)]
pub struct Manifest<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub inputs: BTreeMap<&'static str, FileDigest>,
    pub outputs: BTreeMap<&'static str, FileDigest>,
    pub result: T,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| FgplError::Numeric(format!("report serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn groups(g: &GroupRecall) -> [(&'static str, Option<f64>); 3] {
    [("head", g.head), ("body", g.body), ("tail", g.tail)]
}

/// One row per metric: `metric,k,value`.
pub fn metrics_csv(report: &EvalReport) -> String {
    let mut out = String::from("metric,k,value\n");
    let mut row = |metric: &str, k: usize, value: String| {
        out.push_str(&format!("{metric},{k},{value}\n"));
    };
    for (&k, &v) in &report.r_at_k {
        row("R", k, v.to_string());
    }
    for (&k, &v) in &report.mr_at_k {
        row("mR", k, v.to_string());
    }
    for (&k, g) in &report.group_mr {
        for (name, v) in groups(g) {
            row(&format!("mR_{name}"), k, cell(v));
        }
    }
    for (&k, &v) in &report.dp_at_k {
        row("DP", k, v.to_string());
    }
    out
}

/// Ring slices as `gt_class,slice_label,proportion`.
pub fn rings_csv(report: &EvalReport) -> String {
    let mut out = String::from("gt_class,slice_label,proportion\n");
    for ring in &report.rings {
        for (label, p) in ring.slices() {
            out.push_str(&format!("{},{label},{p}\n", ring.gt_class));
        }
    }
    out
}

fn compare_columns(report: &EvalReport) -> Vec<(String, Option<f64>)> {
    let mut cols = Vec::new();
    for (&k, &v) in &report.r_at_k {
        cols.push((format!("R@{k}"), Some(v)));
    }
    for (&k, &v) in &report.mr_at_k {
        cols.push((format!("mR@{k}"), Some(v)));
    }
    for (&k, g) in &report.group_mr {
        for (name, v) in groups(g) {
            cols.push((format!("mR@{k}_{name}"), v));
        }
    }
    for (&k, &v) in &report.dp_at_k {
        cols.push((format!("DP@{k}"), Some(v)));
    }
    cols
}

/// Wide table with one row per method.
pub fn compare_csv(rows: &[MethodResult]) -> String {
    let Some(first) = rows.first() else {
        return String::from("method\n");
    };
    let header: Vec<String> = compare_columns(&first.report).into_iter().map(|(n, _)| n).collect();
    let mut out = format!("method,{}\n", header.join(","));
    for r in rows {
        let cells: Vec<String> = compare_columns(&r.report).into_iter().map(|(_, v)| cell(v)).collect();
        out.push_str(&format!("{},{}\n", r.method, cells.join(",")));
    }
    out
}

fn pad(cells: &[String], widths: &[usize]) -> String {
    let parts: Vec<String> = cells
        .iter()
        .zip(widths)
        .enumerate()
        .map(|(c, (s, &w))| if c == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
        .collect();
    parts.join("  ").trim_end().to_string()
}

fn percent(v: Option<f64>, scale: f64) -> String {
    v.map(|x| format!("{:.1}", x * scale)).unwrap_or_else(|| "-".to_string())
}

/// Human-readable table: recalls in percent, DP already in percent.
pub fn compare_table(rows: &[MethodResult]) -> String {
    let Some(first) = rows.first() else {
        return String::new();
    };
    let names: Vec<String> = compare_columns(&first.report).into_iter().map(|(n, _)| n).collect();
    let mut grid: Vec<Vec<String>> = vec![std::iter::once("method".to_string()).chain(names.iter().cloned()).collect()];
    for r in rows {
        let mut line = vec![r.method.clone()];
        for (name, v) in compare_columns(&r.report) {
            let scale = if name.starts_with("DP@") { 1.0 } else { 100.0 };
            line.push(percent(v, scale));
        }
        grid.push(line);
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|c| grid.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &grid {
        out.push_str(&pad(row, &widths));
        out.push('\n');
    }
    out
}

/// Short human summary used on stdout.
pub fn summary_line(label: impl Display, report: &EvalReport) -> String {
    let mr: Vec<String> = report
        .mr_at_k
        .iter()
        .map(|(k, v)| format!("mR@{k}={:.4}", v))
        .collect();
    let dp: Vec<String> = report
        .dp_at_k
        .iter()
        .map(|(k, v)| format!("DP@{k}={:.2}", v))
        .collect();
    format!("{label}: {} {}", mr.join(" "), dp.join(" "))
}
