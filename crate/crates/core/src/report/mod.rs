//! Report assembly and rendering: an aligned table for people, a structured
//! JSON document, and a SARIF 2.1.0 log for code-scanning tools.

mod sarif;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detectors::{Finding, FindingScope, MisuseId};
use crate::diag::Diagnostic;

/// Exit status when no misuse was found.
pub const EXIT_CLEAN: i32 = 0;
/// Exit status when at least one misuse was found.
pub const EXIT_FINDINGS: i32 = 1;
/// Exit status for tool failures (bad arguments, unreachable repository, ...).
pub const EXIT_ERROR: i32 = 2;

/// Results of one scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    #[serde(rename = "repo")]
    pub repo_name: String,
    pub kb_version: String,
    /// Occurrences per misuse; every misuse is present, possibly with zero.
    pub counts: BTreeMap<MisuseId, usize>,
    pub findings: Vec<Finding>,
    /// Seconds, keyed by detector code, `detectors`, `model_build` and `total`.
    pub timings: BTreeMap<String, f64>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Report {
    /// Builds a report; `findings` are expected normalized (sorted, one per
    /// misuse and location). Counts are derived from them.
    pub fn new(
        repo_name: String,
        kb_version: String,
        findings: Vec<Finding>,
        timings: BTreeMap<String, f64>,
        diagnostics: Vec<Diagnostic>,
    ) -> Self {
        let mut counts: BTreeMap<MisuseId, usize> = MisuseId::ALL.iter().map(|m| (*m, 0)).collect();
        for f in &findings {
            *counts.entry(f.misuse).or_default() += 1;
        }
        Report {
            repo_name,
            kb_version,
            counts,
            findings,
            timings,
            diagnostics,
        }
    }

    pub fn empty(repo_name: &str, kb_version: &str) -> Self {
        Report::new(
            repo_name.to_string(),
            kb_version.to_string(),
            Vec::new(),
            BTreeMap::new(),
            Vec::new(),
        )
    }

    pub fn total_findings(&self) -> usize {
        self.findings.len()
    }

    /// Adds the model-build time and sets `total` to build + detectors.
    pub fn record_model_build(&mut self, seconds: f64) {
        self.timings.insert("model_build".to_string(), seconds);
        let detectors = self.timings.get("detectors").copied().unwrap_or(0.0);
        self.timings.insert("total".to_string(), seconds + detectors);
    }

    /// Drops wall-clock data so the report is reproducible byte for byte.
    pub fn without_timings(mut self) -> Self {
        self.timings.clear();
        self
    }
}

/// 0 when the report has no findings, 1 otherwise.
pub fn exit_code(report: &Report) -> i32 {
    if report.findings.is_empty() {
        EXIT_CLEAN
    } else {
        EXIT_FINDINGS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Structured,
    Interchange,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(OutputFormat::Table),
            "structured" | "json" => Ok(OutputFormat::Structured),
            "interchange" | "sarif" => Ok(OutputFormat::Interchange),
            other => Err(format!(
                "unknown format `{other}` (expected table, structured or interchange)"
            )),
        }
    }
}

pub fn render(report: &Report, format: OutputFormat) -> String {
    match format {
        OutputFormat::Table => render_table(report),
        OutputFormat::Structured => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        OutputFormat::Interchange => sarif::render(report),
    }
}

/// Parses a structured report back.
pub fn parse_structured(text: &str) -> Result<Report, serde_json::Error> {
    serde_json::from_str(text)
}

/// Parses a SARIF log written by [`render`] back into a report.
pub fn parse_interchange(text: &str) -> Result<Report, String> {
    sarif::parse(text)
}

const MAX_LOCATIONS: usize = 3;

fn location(f: &Finding) -> String {
    match (f.scope, &f.file, f.line) {
        (FindingScope::CallSite, Some(file), Some(line)) => format!("{file}:{line}"),
        (_, Some(file), _) => file.clone(),
        _ => "(project)".to_string(),
    }
}

fn render_table(report: &Report) -> String {
    let rows: Vec<(String, String, String)> = MisuseId::ALL
        .iter()
        .map(|m| {
            let count = report.counts.get(m).copied().unwrap_or(0);
            let mut locs: Vec<String> = report
                .findings
                .iter()
                .filter(|f| f.misuse == *m)
                .take(MAX_LOCATIONS)
                .map(location)
                .collect();
            if count > MAX_LOCATIONS {
                locs.push(format!("+{} more", count - MAX_LOCATIONS));
            }
            (m.code().to_string(), count.to_string(), locs.join(", "))
        })
        .collect();
    let header = ("misuse", "count", "locations");
    let w0 = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(header.0.len());
    let w1 = rows.iter().map(|r| r.1.len()).max().unwrap_or(0).max(header.1.len());

    let mut out = String::new();
    let _ = writeln!(out, "repository: {}", report.repo_name);
    let _ = writeln!(out, "catalog:    {}", report.kb_version);
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<w0$}  {:>w1$}  {}", header.0, header.1, header.2);
    let _ = writeln!(out, "{}  {}  {}", "-".repeat(w0), "-".repeat(w1), "-".repeat(header.2.len()));
    for (code, count, locs) in &rows {
        let _ = writeln!(out, "{code:<w0$}  {count:>w1$}  {locs}");
    }
    // Trailing spaces from empty location cells are noise.
    let mut trimmed: String = out.lines().map(|l| l.trim_end().to_string() + "\n").collect();
    let _ = writeln!(trimmed, "\n{} finding(s)", report.findings.len());
    if !report.timings.is_empty() {
        let _ = writeln!(trimmed);
        for (k, v) in &report.timings {
            let _ = writeln!(trimmed, "time {k}: {v:.4}s");
        }
    }
    trimmed
}
